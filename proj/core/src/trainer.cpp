#include "screencorr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <toml.hpp>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

bool maskable(Modality m) { return m != Modality::kAbsPosition; }

void add_scaled(TrainLoss& into, const TrainLoss& x) {
  into.total += x.total;
  into.l2_appearance += x.l2_appearance;
  into.l2_text += x.l2_text;
  into.ce_category += x.ce_category;
  into.masked_token_count += x.masked_token_count;
  into.masked_category += x.masked_category;
  into.category_correct += x.category_correct;
}

TrainLoss mean_of(const TrainLoss& sum, int n) {
  TrainLoss out = sum;
  if (n > 0) {
    out.total /= n;
    out.l2_appearance /= n;
    out.l2_text /= n;
    out.ce_category /= n;
  }
  return out;
}

// Shared implementation: when `grad` is empty only the loss is computed.
TrainLoss masked_loss(const EncoderModel& model, const ModalityTokens& original, const MaskedTokens& masked,
                      bool train_mode, Rng* rng, std::span<double> grad, double weight) {
  TrainLoss loss;
  std::vector<int> targets;
  for (int t : masked.mask) {
    if (maskable(original.tokens[t].modality)) targets.push_back(t);
  }
  if (targets.empty()) return loss;

  int counts[3] = {0, 0, 0};
  for (int t : targets) ++counts[static_cast<int>(original.tokens[t].modality)];

  ForwardCache cache;
  const bool want_grad = !grad.empty();
  const ForwardOutput fwd = forward(model, masked.tokens, train_mode, rng, want_grad ? &cache : nullptr);
  const ModelTensors& mt = model.tensors();
  Eigen::MatrixXd d_out;
  if (want_grad) d_out = Eigen::MatrixXd::Zero(fwd.token_outputs.rows(), fwd.token_outputs.cols());

  for (int t : targets) {
    const ModalityToken& tok = original.tokens[t];
    const int slot = static_cast<int>(tok.modality);
    const double n = counts[slot];
    const auto z = fwd.token_outputs.row(t);
    const ConstMatrixMap w = model.tensor(mt.head_weight[slot]);
    const Eigen::RowVectorXd pred = z * w + model.tensor(mt.head_bias[slot]);
    Eigen::RowVectorXd dpred;
    if (tok.modality == Modality::kCategory) {
      Eigen::Index target = 0;
      tok.features.maxCoeff(&target);
      Eigen::Index best = 0;
      pred.maxCoeff(&best);
      if (best == target) ++loss.category_correct;
      ++loss.masked_category;
      const double mx = pred.maxCoeff();
      Eigen::RowVectorXd p = (pred.array() - mx).exp();
      const double sum = p.sum();
      p /= sum;
      loss.ce_category += (std::log(sum) + mx - pred[target]) / n;
      if (want_grad) {
        dpred = p;
        dpred[target] -= 1.0;
        dpred /= n;
      }
    } else {
      const Eigen::RowVectorXd diff = pred - tok.features.transpose();
      const double l2 = diff.squaredNorm() / n;
      (tok.modality == Modality::kAppearance ? loss.l2_appearance : loss.l2_text) += l2;
      if (want_grad) dpred = 2.0 * diff / n;
    }
    if (want_grad) {
      dpred *= weight;
      tensor_view(grad, model.layout()[mt.head_weight[slot]]) += z.transpose() * dpred;
      tensor_view(grad, model.layout()[mt.head_bias[slot]]).row(0) += dpred;
      d_out.row(t) += dpred * w.transpose();
    }
  }
  loss.masked_token_count = static_cast<int>(targets.size());
  loss.total = loss.l2_appearance + loss.l2_text + loss.ce_category;
  if (want_grad) backward(model, masked.tokens, cache, d_out, grad);
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "mask_rate must lie in (0, 1]");
  if (patience < 1) throw Error(ErrorCode::kInvalidConfig, "patience must be at least 1");
  if (batch_size < 1 || max_epochs < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size and max_epochs must be >= 1");
  if (!(learning_rate > 0.0) || weight_decay < 0.0) throw Error(ErrorCode::kInvalidConfig, "bad optimizer settings");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay}, {"beta1", beta1},
          {"beta2", beta2},                 {"epsilon", epsilon},           {"mask_rate", mask_rate},
          {"batch_size", batch_size},       {"max_epochs", max_epochs},     {"patience", patience},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  return c;
}

MaskedTokens apply_mask(const ModalityTokens& tokens, std::vector<int> mask) {
  std::sort(mask.begin(), mask.end());
  mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
  std::erase_if(mask, [&](int t) { return !maskable(tokens.tokens[t].modality); });
  MaskedTokens out{tokens, std::move(mask)};
  for (int t : out.mask) out.tokens.tokens[t].features.setZero();
  return out;
}

MaskedTokens mask_tokens(const ModalityTokens& tokens, double rate, Rng& rng) {
  std::vector<int> mask;
  for (int t = 0; t < tokens.size(); ++t) {
    if (!maskable(tokens.tokens[t].modality)) continue;
    if (bernoulli(rng, rate)) mask.push_back(t);
  }
  return apply_mask(tokens, std::move(mask));
}

TrainLoss compute_loss(const EncoderModel& model, const ModalityTokens& original, const MaskedTokens& masked) {
  return masked_loss(model, original, masked, false, nullptr, {}, 1.0);
}

TrainLoss loss_and_gradient(const EncoderModel& model, const ModalityTokens& original, const MaskedTokens& masked,
                            bool train_mode, Rng* rng, std::span<double> grad, double weight) {
  return masked_loss(model, original, masked, train_mode, rng, grad, weight);
}

AdamOptimizer::AdamOptimizer(const ParameterLayout& layout, const TrainConfig& cfg)
    : layout_(&layout), cfg_(cfg), m_(layout.total_size(), 0.0), v_(layout.total_size(), 0.0) {}

void AdamOptimizer::step(std::span<double> values, std::span<const double> grad) {
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const TensorSpec& t : layout_->tensors()) {
    const double wd = t.decay ? cfg_.weight_decay : 0.0;
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
      const double g = grad[i] + wd * values[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      values[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
    }
  }
}

TrainResult train(EncoderModel model, const std::vector<Screen>& corpus, const std::vector<Screen>& validation,
                  const TrainConfig& cfg, const TextEncoder& encoder, const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "training corpus is empty");
  const FeatureOptions features = model.config().features();

  std::vector<ModalityTokens> train_tokens;
  for (const auto& s : corpus) train_tokens.push_back(tokenize_screen(s, encoder, features));
  std::vector<ModalityTokens> val_tokens;
  for (const auto& s : validation) val_tokens.push_back(tokenize_screen(s, encoder, features));

  // Fixed masks make validation losses comparable across epochs.
  std::vector<MaskedTokens> val_masks;
  for (std::size_t i = 0; i < val_tokens.size(); ++i) {
    Rng r(derive_seed(cfg.seed, "val-mask", i));
    val_masks.push_back(mask_tokens(val_tokens[i], cfg.mask_rate, r));
  }
  std::vector<MaskedTokens> train_eval_masks;
  for (std::size_t i = 0; i < train_tokens.size(); ++i) {
    Rng r(derive_seed(cfg.seed, "train-eval-mask", i));
    train_eval_masks.push_back(mask_tokens(train_tokens[i], cfg.mask_rate, r));
  }

  auto evaluate = [&](const std::vector<ModalityTokens>& toks, const std::vector<MaskedTokens>& masks) {
    TrainLoss sum;
    int n = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (masks[i].mask.empty()) continue;
      add_scaled(sum, compute_loss(model, toks[i], masks[i]));
      ++n;
    }
    return mean_of(sum, n);
  };

  TrainResult result;
  EpochRecord initial;
  initial.train = evaluate(train_tokens, train_eval_masks);
  initial.val = validation.empty() ? initial.train : evaluate(val_tokens, val_masks);
  result.history.push_back(initial);
  if (on_epoch) on_epoch(initial);

  double best_val = initial.val.total;
  std::vector<double> best_values(model.values().begin(), model.values().end());
  int since_best = 0;

  AdamOptimizer optimizer(model.layout(), cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng mask_rng(derive_seed(cfg.seed, "train-mask"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  std::vector<std::size_t> order(train_tokens.size());
  std::vector<double> grad(model.layout().total_size());

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order.begin(), order.end(), shuffle_rng);

    TrainLoss epoch_sum;
    int epoch_n = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<MaskedTokens> batch;
      std::vector<std::size_t> batch_idx;
      for (std::size_t b = start; b < end; ++b) {
        MaskedTokens m = mask_tokens(train_tokens[order[b]], cfg.mask_rate, mask_rng);
        if (m.mask.empty()) continue;
        batch.push_back(std::move(m));
        batch_idx.push_back(order[b]);
      }
      if (batch.empty()) continue;
      std::fill(grad.begin(), grad.end(), 0.0);
      const double w = 1.0 / static_cast<double>(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        add_scaled(epoch_sum, loss_and_gradient(model, train_tokens[batch_idx[b]], batch[b], true, &dropout_rng, grad, w));
        ++epoch_n;
      }
      for (double g : grad) {
        if (!std::isfinite(g)) throw Error(ErrorCode::kNonFiniteGradient, "non-finite gradient during training");
      }
      optimizer.step(model.values(), grad);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = mean_of(epoch_sum, epoch_n);
    rec.val = validation.empty() ? evaluate(train_tokens, train_eval_masks) : evaluate(val_tokens, val_masks);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val.total < best_val) {
      best_val = rec.val.total;
      best_values.assign(model.values().begin(), model.values().end());
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  std::copy(best_values.begin(), best_values.end(), model.values().begin());
  result.model = std::move(model);
  return result;
}

TrainingSetup TrainingSetup::from_toml(std::string_view text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("training config: ") + std::string(e.description()));
  }
  TrainingSetup s;
  auto enc = tbl["encoder"];
  s.encoder.hidden = enc["hidden"].value_or(s.encoder.hidden);
  s.encoder.layers = enc["layers"].value_or(s.encoder.layers);
  s.encoder.heads = enc["heads"].value_or(s.encoder.heads);
  s.encoder.dropout = enc["dropout"].value_or(s.encoder.dropout);
  s.encoder.use_relative = enc["use_relative"].value_or(s.encoder.use_relative);
  s.encoder.use_appearance = enc["use_appearance"].value_or(s.encoder.use_appearance);
  s.encoder.use_text = enc["use_text"].value_or(s.encoder.use_text);
  auto tr = tbl["train"];
  s.train.learning_rate = tr["learning_rate"].value_or(s.train.learning_rate);
  s.train.weight_decay = tr["weight_decay"].value_or(s.train.weight_decay);
  s.train.mask_rate = tr["mask_rate"].value_or(s.train.mask_rate);
  s.train.batch_size = tr["batch_size"].value_or(s.train.batch_size);
  s.train.max_epochs = tr["max_epochs"].value_or(s.train.max_epochs);
  s.train.patience = tr["patience"].value_or(s.train.patience);
  s.encoder.validate();
  s.train.validate();
  return s;
}

TrainingSetup TrainingSetup::from_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_toml(buf.str());
}

double category_reconstruction_accuracy(const EncoderModel& model, const std::vector<Screen>& screens,
                                        const TextEncoder& encoder) {
  int correct = 0;
  int total = 0;
  for (const Screen& screen : screens) {
    const ModalityTokens tokens = tokenize_screen(screen, encoder, model.config().features());
    for (int i = 0; i < tokens.size(); ++i) {
      if (tokens.tokens[i].modality != Modality::kCategory) continue;
      const TrainLoss l = compute_loss(model, tokens, apply_mask(tokens, {i}));
      correct += l.category_correct;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_total,val_total,train_l2_appearance,train_l2_text,train_ce_category,"
         "val_l2_appearance,val_l2_text,val_ce_category,val_category_accuracy\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train.total << ',' << r.val.total << ',' << r.train.l2_appearance << ','
        << r.train.l2_text << ',' << r.train.ce_category << ',' << r.val.l2_appearance << ',' << r.val.l2_text << ','
        << r.val.ce_category << ',' << r.val_category_accuracy() << '\n';
  }
}

}  // namespace screencorr
