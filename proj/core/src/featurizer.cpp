#include "screencorr/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Lowercase, collapse whitespace runs, pad with one space on each side.
std::string normalize_for_hashing(std::string_view text) {
  std::string out = " ";
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = out.size() > 1;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  out.push_back(' ');
  return out;
}

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kCategory: return "category";
    case Modality::kAppearance: return "appearance";
    case Modality::kText: return "text";
    case Modality::kAbsPosition: return "abs_position";
  }
  return "?";
}

int modality_dim(Modality m) {
  switch (m) {
    case Modality::kCategory: return kCategoryDim;
    case Modality::kAppearance: return kAppearanceDim;
    case Modality::kText: return kTextDim;
    case Modality::kAbsPosition: return kPositionDim;
  }
  return 0;
}

std::optional<Eigen::VectorXd> HashingTextEncoder::encode(std::string_view text) const {
  const std::string norm = normalize_for_hashing(text);
  if (norm.size() <= 2) return std::nullopt;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kTextDim);
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    const std::uint64_t h = fnv1a(std::string_view(norm).substr(i, 3));
    const double sign = ((h >> 40) & 1U) ? -1.0 : 1.0;
    v[static_cast<Eigen::Index>(h % kTextDim)] += sign;
  }
  const double n = v.norm();
  if (n == 0.0) return std::nullopt;
  return v / n;
}

Eigen::VectorXd encode_category(ElementCategory category) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kCategoryDim);
  v[category.flat_index()] = 1.0;
  return v;
}

std::optional<Eigen::VectorXd> encode_text(std::string_view text, const TextEncoder& encoder) {
  return encoder.encode(text);
}

Eigen::VectorXd appearance_from_image(const Image& crop) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kAppearanceDim);
  if (crop.empty()) return v;
  constexpr int kGrid = 8;
  for (int r = 0; r < kGrid; ++r) {
    int y0 = r * crop.height / kGrid;
    int y1 = (r + 1) * crop.height / kGrid;
    if (y1 <= y0) y1 = (y0 = std::min(crop.height - 1, static_cast<int>((r + 0.5) * crop.height / kGrid))) + 1;
    for (int c = 0; c < kGrid; ++c) {
      int x0 = c * crop.width / kGrid;
      int x1 = (c + 1) * crop.width / kGrid;
      if (x1 <= x0) x1 = (x0 = std::min(crop.width - 1, static_cast<int>((c + 0.5) * crop.width / kGrid))) + 1;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const auto* p = crop.pixel(x, y);
          sum += (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
        }
      }
      v[r * kGrid + c] = sum / ((y1 - y0) * (x1 - x0));
    }
  }
  const double total = static_cast<double>(crop.width) * crop.height;
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      const auto* p = crop.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) v[64 + ch * 8 + (p[ch] >> 5)] += 1.0;
    }
  }
  v.tail(24) /= total;
  return v;
}

std::optional<Eigen::VectorXd> encode_appearance(const UIElement& element, const Image* screenshot) {
  if (element.appearance_vector) {
    const auto& a = *element.appearance_vector;
    if (static_cast<int>(a.size()) != kAppearanceDim) {
      throw Error(ErrorCode::kDimensionMismatch, "appearance_vector of element '" + element.id + "' has length " +
                                                     std::to_string(a.size()) + ", expected 88");
    }
    return Eigen::Map<const Eigen::VectorXd>(a.data(), kAppearanceDim);
  }
  if (screenshot && !screenshot->empty()) return appearance_from_image(screenshot->crop(element.bounds));
  if (element.crop_path) return appearance_from_image(load_png(*element.crop_path));
  return std::nullopt;
}

int relative_bucket(double offset) {
  const double clipped = std::clamp(offset, -1.0, 1.0);
  return kRelativeCenterBucket + static_cast<int>(std::lround(clipped * kRelativeResolution));
}

RelativeBuckets relative_buckets(const std::vector<Point>& centers) {
  const auto n = static_cast<Eigen::Index>(centers.size());
  RelativeBuckets out{Eigen::MatrixXi(n, n), Eigen::MatrixXi(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.dx(i, j) = relative_bucket(centers[j].x - centers[i].x);
      out.dy(i, j) = relative_bucket(centers[j].y - centers[i].y);
    }
  }
  return out;
}

ModalityTokens tokenize_screen(const Screen& screen, const TextEncoder& encoder, const FeatureOptions& options,
                               const Image* screenshot) {
  if (screen.elements.empty()) throw Error(ErrorCode::kEmptyScreen, "screen '" + screen.id + "' has no elements");
  ModalityTokens out;
  out.element_count = static_cast<int>(screen.elements.size());
  std::vector<Point> token_centers;
  for (int ei = 0; ei < out.element_count; ++ei) {
    const UIElement& e = screen.elements[ei];
    const Point c = e.bounds.center();
    out.element_centers.push_back(c);
    auto emit = [&](Modality m, Eigen::VectorXd f) {
      out.tokens.push_back({ei, m, std::move(f)});
      token_centers.push_back(c);
    };
    emit(Modality::kCategory, encode_category(e.category));
    if (options.use_appearance) {
      if (auto a = encode_appearance(e, screenshot)) emit(Modality::kAppearance, std::move(*a));
    }
    if (options.use_text) {
      if (e.text_vector) {
        if (static_cast<int>(e.text_vector->size()) != kTextDim) {
          throw Error(ErrorCode::kDimensionMismatch, "text_vector of element '" + e.id + "' must have length 128");
        }
        emit(Modality::kText, Eigen::Map<const Eigen::VectorXd>(e.text_vector->data(), kTextDim));
      } else if (e.text) {
        if (auto t = encode_text(*e.text, encoder)) emit(Modality::kText, std::move(*t));
      }
    }
    if (!options.use_relative) {
      Eigen::VectorXd p(kPositionDim);
      p << e.bounds.x1, e.bounds.y1, e.bounds.x2, e.bounds.y2;
      emit(Modality::kAbsPosition, std::move(p));
    }
  }
  auto rel = relative_buckets(token_centers);
  out.rel_x = std::move(rel.dx);
  out.rel_y = std::move(rel.dy);
  return out;
}

}  // namespace screencorr
