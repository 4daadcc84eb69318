#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/encoder.hpp"

namespace screencorr {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double mask_rate = 0.15;
  int batch_size = 8;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// A copy of the tokens with the masked feature vectors zeroed.
struct MaskedTokens {
  ModalityTokens tokens;
  /// Sorted indices of masked tokens.
  std::vector<int> mask;
};

/// Masks category, appearance and text tokens independently with probability `rate`.
MaskedTokens mask_tokens(const ModalityTokens& tokens, double rate, Rng& rng);

/// Zeroes the listed tokens; position tokens in the list are ignored.
MaskedTokens apply_mask(const ModalityTokens& tokens, std::vector<int> mask);

struct TrainLoss {
  double total = 0.0;
  double l2_appearance = 0.0;
  double l2_text = 0.0;
  double ce_category = 0.0;
  int masked_token_count = 0;
  int masked_category = 0;
  int category_correct = 0;
};

/// Masked-token reconstruction loss, eval mode: per-modality means over
/// masked tokens, summed across modalities.
TrainLoss compute_loss(const EncoderModel& model, const ModalityTokens& original, const MaskedTokens& masked);

/// Same loss with its gradient accumulated into `grad` (scaled by `weight`).
/// Dropout is applied when `train_mode`.
TrainLoss loss_and_gradient(const EncoderModel& model, const ModalityTokens& original, const MaskedTokens& masked,
                            bool train_mode, Rng* rng, std::span<double> grad, double weight = 1.0);

/// Adam with coupled L2 weight decay restricted to tensors flagged `decay`.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParameterLayout& layout, const TrainConfig& cfg);

  void step(std::span<double> values, std::span<const double> grad);
  long steps() const { return step_; }

 private:
  const ParameterLayout* layout_;
  TrainConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long step_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  TrainLoss train;
  TrainLoss val;

  double val_category_accuracy() const {
    return val.masked_category > 0 ? static_cast<double>(val.category_correct) / val.masked_category : 0.0;
  }
};

struct TrainResult {
  EncoderModel model;
  /// Entry 0 is the untrained model evaluated before the first update.
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Masked element prediction with early stopping on validation loss.
/// Returns the parameters of the best validation epoch.
TrainResult train(EncoderModel model, const std::vector<Screen>& corpus, const std::vector<Screen>& validation,
                  const TrainConfig& cfg, const TextEncoder& encoder, const EpochCallback& on_epoch = {});

/// [encoder] and [train] tables of a TOML file; missing keys keep defaults.
struct TrainingSetup {
  EncoderConfig encoder;
  TrainConfig train;

  static TrainingSetup from_toml(std::string_view text);
  static TrainingSetup from_toml_file(const std::filesystem::path& path);
};

/// Masks one category token at a time and counts argmax hits over every
/// element of `screens`.
double category_reconstruction_accuracy(const EncoderModel& model, const std::vector<Screen>& screens,
                                        const TextEncoder& encoder);

/// Columns: epoch, train_total, val_total, train/val components, val_category_accuracy.
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

struct GradCheckEntry {
  std::string tensor;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
};

/// Compares analytic gradients against central differences for every tensor.
/// Throws Error(kNonFiniteGradient).
GradCheckReport grad_check(EncoderModel model, const ModalityTokens& sample, const std::vector<int>& mask,
                           double step = 1e-3);

}  // namespace screencorr
