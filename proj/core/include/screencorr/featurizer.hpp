#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "screencorr/image.hpp"
#include "screencorr/screen.hpp"

namespace screencorr {

inline constexpr int kCategoryDim = kCategoryCount;
inline constexpr int kAppearanceDim = 88;
inline constexpr int kTextDim = 128;
inline constexpr int kPositionDim = 4;

/// Relative offsets are quantized at 1/16 of the screen and clipped to [-1, 1].
inline constexpr int kRelativeResolution = 16;
inline constexpr int kRelativeBuckets = 2 * kRelativeResolution + 1;
inline constexpr int kRelativeCenterBucket = kRelativeResolution;

enum class Modality { kCategory = 0, kAppearance = 1, kText = 2, kAbsPosition = 3 };
inline constexpr int kModalityCount = 4;

std::string_view modality_name(Modality m);
int modality_dim(Modality m);

/// Pluggable phrase encoder. Implementations must be deterministic and return
/// unit vectors of length kTextDim, or nullopt for blank input.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::optional<Eigen::VectorXd> encode(std::string_view text) const = 0;
  virtual std::string name() const = 0;
  virtual std::string version() const = 0;
};

/// Signed feature hashing of space-padded, lowercased character trigrams.
class HashingTextEncoder final : public TextEncoder {
 public:
  std::optional<Eigen::VectorXd> encode(std::string_view text) const override;
  std::string name() const override { return "char-trigram-hash"; }
  std::string version() const override { return "1"; }
};

/// Modalities switched off for ablated models.
struct FeatureOptions {
  bool use_relative = true;
  bool use_appearance = true;
  bool use_text = true;

  bool operator==(const FeatureOptions&) const = default;
};

struct ModalityToken {
  int element = 0;
  Modality modality = Modality::kCategory;
  Eigen::VectorXd features;
};

struct ModalityTokens {
  std::vector<ModalityToken> tokens;
  /// Bucketed signed center offsets: rel_x(i, j) buckets cx_j - cx_i.
  Eigen::MatrixXi rel_x;
  Eigen::MatrixXi rel_y;
  int element_count = 0;
  std::vector<Point> element_centers;

  int size() const { return static_cast<int>(tokens.size()); }
};

Eigen::VectorXd encode_category(ElementCategory category);

std::optional<Eigen::VectorXd> encode_text(std::string_view text, const TextEncoder& encoder);

/// 8x8 mean-grayscale grid followed by 8-bin mass-normalized histograms of R, G and B.
Eigen::VectorXd appearance_from_image(const Image& crop);

/// Precomputed vectors pass through (length must be 88); otherwise the crop is
/// taken from `screenshot`, or loaded from the element's crop_path.
std::optional<Eigen::VectorXd> encode_appearance(const UIElement& element, const Image* screenshot = nullptr);

int relative_bucket(double offset);

struct RelativeBuckets {
  Eigen::MatrixXi dx;
  Eigen::MatrixXi dy;
};
RelativeBuckets relative_buckets(const std::vector<Point>& centers);

/// One category token per element, plus appearance/text tokens when present
/// and enabled, plus an absolute-position token when relative attention is off.
ModalityTokens tokenize_screen(const Screen& screen, const TextEncoder& encoder, const FeatureOptions& options,
                               const Image* screenshot = nullptr);

}  // namespace screencorr
