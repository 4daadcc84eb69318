#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "screencorr/featurizer.hpp"
#include "screencorr/parameters.hpp"
#include "screencorr/random.hpp"

namespace screencorr {

struct EncoderConfig {
  int hidden = 256;
  int layers = 4;
  int heads = 4;
  double dropout = 0.25;
  bool use_relative = true;
  bool use_appearance = true;
  bool use_text = true;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidConfig).
  void validate() const;
  FeatureOptions features() const { return {use_relative, use_appearance, use_text}; }

  /// "full", "no-relative", "no-appearance", "no-text" or a '+'-joined combination.
  std::string ablation_tag() const;

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);

  bool operator==(const EncoderConfig&) const = default;
};

/// Indices into the model's ParameterLayout.
struct LayerTensors {
  std::size_t ln1_gain, ln1_bias;
  std::size_t wq, bq, wk, wv, bv, wo, bo;
  std::size_t ln2_gain, ln2_bias;
  std::size_t w1, b1, w2, b2;
};

struct ModelTensors {
  std::array<std::size_t, kModalityCount> input_weight{};
  std::array<std::size_t, kModalityCount> input_bias{};
  std::size_t rel_x = 0;
  std::size_t rel_y = 0;
  std::vector<LayerTensors> layers;
  std::size_t final_gain = 0;
  std::size_t final_bias = 0;
  /// Reconstruction heads for category, appearance and text.
  std::array<std::size_t, 3> head_weight{};
  std::array<std::size_t, 3> head_bias{};
};

/// Transformer parameters held in one flat buffer. Shapes depend only on the config.
class EncoderModel {
 public:
  EncoderModel() = default;
  explicit EncoderModel(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }
  const ModelTensors& tensors() const { return tensors_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  ConstMatrixMap tensor(std::size_t index) const { return tensor_view(values(), layout_[index]); }
  MatrixMap tensor(std::size_t index) { return tensor_view(values(), layout_[index]); }

  /// Content hash of config and parameters (rounded to float32).
  std::string version() const;

  bool all_finite() const;

 private:
  EncoderConfig config_;
  ParameterLayout layout_;
  ModelTensors tensors_;
  std::vector<double> values_;
};

/// Deterministic scaled-uniform initialization from cfg.seed.
EncoderModel init_model(const EncoderConfig& cfg);

struct ElementEmbeddings {
  std::string screen_id;
  std::vector<std::string> element_ids;
  /// One row per element.
  Eigen::MatrixXd vectors;

  int size() const { return static_cast<int>(vectors.rows()); }
};

/// Intermediates retained for the backward pass.
struct LayerCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd ln1_xhat;
  Eigen::VectorXd ln1_rstd;
  Eigen::MatrixXd ln1_out, q, k, v;
  std::vector<Eigen::MatrixXd> probs;
  std::vector<Eigen::MatrixXd> attn_dropout;
  Eigen::MatrixXd attn_concat;
  Eigen::MatrixXd mid;
  Eigen::MatrixXd ln2_xhat;
  Eigen::VectorXd ln2_rstd;
  Eigen::MatrixXd ln2_out, ffn_pre, ffn_act;
  Eigen::MatrixXd ffn_dropout;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Eigen::MatrixXd final_xhat;
  Eigen::VectorXd final_rstd;
};

struct ForwardOutput {
  /// One row per token, after the final layer norm.
  Eigen::MatrixXd token_outputs;
  /// Mean of each element's token outputs.
  Eigen::MatrixXd element_embeddings;
};

/// Dropout is active only in train mode and then requires `rng`.
/// Throws Error(kDimensionMismatch) for tokens the config cannot consume.
ForwardOutput forward(const EncoderModel& model, const ModalityTokens& tokens, bool train_mode = false,
                      Rng* rng = nullptr, ForwardCache* cache = nullptr);

/// Accumulates dLoss/dparams into `grad` given dLoss/d(token_outputs).
void backward(const EncoderModel& model, const ModalityTokens& tokens, const ForwardCache& cache,
              const Eigen::MatrixXd& d_outputs, std::span<double> grad);

struct Reconstruction {
  int token = 0;
  Modality modality = Modality::kCategory;
  /// Category logits (83), or predicted appearance (88) / text (128) features.
  Eigen::VectorXd values;
};

/// Position tokens have no head and are skipped.
std::vector<Reconstruction> reconstruct(const EncoderModel& model, const ModalityTokens& tokens,
                                        const Eigen::MatrixXd& token_outputs);

/// Tokenize with the model's modality switches and run an eval-mode forward pass.
ElementEmbeddings embed_screen(const EncoderModel& model, const Screen& screen, const TextEncoder& encoder,
                               const Image* screenshot = nullptr);

}  // namespace screencorr
