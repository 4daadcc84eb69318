#include "screencorr/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.044715;
const double kGeluK = std::sqrt(2.0 / std::numbers::pi);

constexpr std::array<Modality, 3> kHeadModalities = {Modality::kCategory, Modality::kAppearance, Modality::kText};

int head_slot(Modality m) {
  switch (m) {
    case Modality::kCategory: return 0;
    case Modality::kAppearance: return 1;
    case Modality::kText: return 2;
    case Modality::kAbsPosition: return -1;
  }
  return -1;
}

struct NormResult {
  Eigen::MatrixXd out;
  Eigen::MatrixXd xhat;
  Eigen::VectorXd rstd;
};

NormResult layer_norm(const Eigen::MatrixXd& x, const ConstMatrixMap& gain, const ConstMatrixMap& bias) {
  const Eigen::Index n = x.cols();
  NormResult r{Eigen::MatrixXd(x.rows(), n), Eigen::MatrixXd(x.rows(), n), Eigen::VectorXd(x.rows())};
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double mean = x.row(t).mean();
    const double var = (x.row(t).array() - mean).square().mean();
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    r.rstd[t] = rstd;
    r.xhat.row(t) = (x.row(t).array() - mean) * rstd;
  }
  r.out = (r.xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  return r;
}

// Returns dx; accumulates gain and bias gradients.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& xhat, const Eigen::VectorXd& rstd,
                                    const ConstMatrixMap& gain, MatrixMap dgain, MatrixMap dbias) {
  dgain.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Eigen::MatrixXd dxhat = dy.array().rowwise() * gain.row(0).array();
  Eigen::MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const double m1 = dxhat.row(t).mean();
    const double m2 = (dxhat.row(t).array() * xhat.row(t).array()).mean();
    dx.row(t) = rstd[t] * (dxhat.row(t).array() - m1 - xhat.row(t).array() * m2);
  }
  return dx;
}

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluK * (u + kGeluC * u * u * u))); }

double gelu_grad(double u) {
  const double th = std::tanh(kGeluK * (u + kGeluC * u * u * u));
  return 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * kGeluK * (1.0 + 3.0 * kGeluC * u * u);
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = bernoulli(rng, p) ? 0.0 : keep;
  }
  return m;
}

bool modality_enabled(const EncoderConfig& cfg, Modality m) {
  switch (m) {
    case Modality::kCategory: return true;
    case Modality::kAppearance: return cfg.use_appearance;
    case Modality::kText: return cfg.use_text;
    case Modality::kAbsPosition: return !cfg.use_relative;
  }
  return false;
}

void check_tokens(const EncoderModel& model, const ModalityTokens& tokens) {
  for (const auto& tok : tokens.tokens) {
    if (!modality_enabled(model.config(), tok.modality)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(modality_name(tok.modality)) + " token is not accepted by a " +
                      model.config().ablation_tag() + " model");
    }
    if (tok.features.size() != modality_dim(tok.modality)) {
      throw Error(ErrorCode::kDimensionMismatch, std::string(modality_name(tok.modality)) + " token has " +
                                                     std::to_string(tok.features.size()) + " features");
    }
    if (tok.element < 0 || tok.element >= tokens.element_count) {
      throw Error(ErrorCode::kDimensionMismatch, "token refers to element outside the screen");
    }
  }
  const int t = tokens.size();
  if (tokens.rel_x.rows() != t || tokens.rel_x.cols() != t || tokens.rel_y.rows() != t || tokens.rel_y.cols() != t) {
    throw Error(ErrorCode::kDimensionMismatch, "relative bucket matrices do not match token count");
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (hidden <= 0 || layers <= 0 || heads <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "hidden, layers and heads must be positive");
  }
  if (hidden % heads != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "hidden size " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::kInvalidConfig, "dropout must lie in [0, 1)");
}

std::string EncoderConfig::ablation_tag() const {
  std::string tag;
  auto add = [&](const char* s) {
    if (!tag.empty()) tag += '+';
    tag += s;
  };
  if (!use_relative) add("no-relative");
  if (!use_appearance) add("no-appearance");
  if (!use_text) add("no-text");
  return tag.empty() ? "full" : tag;
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"hidden", hidden},           {"layers", layers},         {"heads", heads},
          {"dropout", dropout},         {"use_relative", use_relative}, {"use_appearance", use_appearance},
          {"use_text", use_text},       {"seed", seed}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.dropout = j.value("dropout", c.dropout);
  c.use_relative = j.value("use_relative", c.use_relative);
  c.use_appearance = j.value("use_appearance", c.use_appearance);
  c.use_text = j.value("use_text", c.use_text);
  c.seed = j.value("seed", c.seed);
  return c;
}

EncoderModel::EncoderModel(const EncoderConfig& config) : config_(config) {
  config_.validate();
  const int h = config_.hidden;
  const std::array<const char*, kModalityCount> names = {"category", "appearance", "text", "position"};
  for (int m = 0; m < kModalityCount; ++m) {
    tensors_.input_weight[m] =
        layout_.add(std::string("input.") + names[m] + ".weight", modality_dim(static_cast<Modality>(m)), h, true);
    tensors_.input_bias[m] = layout_.add(std::string("input.") + names[m] + ".bias", 1, h, false);
  }
  tensors_.rel_x = layout_.add("relative.x", config_.heads, kRelativeBuckets, false);
  tensors_.rel_y = layout_.add("relative.y", config_.heads, kRelativeBuckets, false);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerTensors lt{};
    lt.ln1_gain = layout_.add(p + "ln1.gain", 1, h, false);
    lt.ln1_bias = layout_.add(p + "ln1.bias", 1, h, false);
    lt.wq = layout_.add(p + "attn.query.weight", h, h, true);
    lt.bq = layout_.add(p + "attn.query.bias", 1, h, false);
    lt.wk = layout_.add(p + "attn.key.weight", h, h, true);
    lt.wv = layout_.add(p + "attn.value.weight", h, h, true);
    lt.bv = layout_.add(p + "attn.value.bias", 1, h, false);
    lt.wo = layout_.add(p + "attn.output.weight", h, h, true);
    lt.bo = layout_.add(p + "attn.output.bias", 1, h, false);
    lt.ln2_gain = layout_.add(p + "ln2.gain", 1, h, false);
    lt.ln2_bias = layout_.add(p + "ln2.bias", 1, h, false);
    lt.w1 = layout_.add(p + "ffn.in.weight", h, 4 * h, true);
    lt.b1 = layout_.add(p + "ffn.in.bias", 1, 4 * h, false);
    lt.w2 = layout_.add(p + "ffn.out.weight", 4 * h, h, true);
    lt.b2 = layout_.add(p + "ffn.out.bias", 1, h, false);
    tensors_.layers.push_back(lt);
  }
  tensors_.final_gain = layout_.add("final_norm.gain", 1, h, false);
  tensors_.final_bias = layout_.add("final_norm.bias", 1, h, false);
  for (std::size_t s = 0; s < kHeadModalities.size(); ++s) {
    const std::string p = std::string("head.") + names[s] + ".";
    tensors_.head_weight[s] = layout_.add(p + "weight", h, modality_dim(kHeadModalities[s]), true);
    tensors_.head_bias[s] = layout_.add(p + "bias", 1, modality_dim(kHeadModalities[s]), false);
  }
  values_.assign(layout_.total_size(), 0.0);
}

std::string EncoderModel::version() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::string cfg = config_.to_json().dump();
  mix(cfg.data(), cfg.size());
  for (double v : values_) {
    const float f = static_cast<float>(v);
    mix(&f, sizeof f);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("screen-transformer-") + buf;
}

bool EncoderModel::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

EncoderModel init_model(const EncoderConfig& cfg) {
  EncoderModel model(cfg);
  Rng rng(derive_seed(cfg.seed, "init"));
  for (std::size_t i = 0; i < model.layout().tensors().size(); ++i) {
    const TensorSpec& t = model.layout()[i];
    MatrixMap w = model.tensor(i);
    if (t.name.starts_with("head.")) {
      w.setZero();
    } else if (t.decay) {
      const double a = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng, -a, a);
      }
    } else if (t.name.ends_with(".gain")) {
      w.setOnes();
    } else if (t.name.starts_with("relative.")) {
      // Linear distance penalty per head, slopes 1, 1/2, 1/4, ...
      for (Eigen::Index hd = 0; hd < w.rows(); ++hd) {
        const double slope = std::ldexp(1.0, -static_cast<int>(hd));
        for (Eigen::Index b = 0; b < w.cols(); ++b) w(hd, b) = -slope * std::abs(b - kRelativeCenterBucket);
      }
    } else if (t.name.starts_with("input.")) {
      // Doubles as a modality embedding; masked (all-zero) tokens reduce to it.
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(0, c) = uniform(rng, -0.1, 0.1);
    } else {
      w.setZero();
    }
  }
  return model;
}

ForwardOutput forward(const EncoderModel& model, const ModalityTokens& tokens, bool train_mode, Rng* rng,
                      ForwardCache* cache) {
  check_tokens(model, tokens);
  const EncoderConfig& cfg = model.config();
  const ModelTensors& mt = model.tensors();
  const int t_count = tokens.size();
  const int h = cfg.hidden;
  const int nh = cfg.heads;
  const int dh = h / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = train_mode && cfg.dropout > 0.0;
  if (drop && rng == nullptr) throw Error(ErrorCode::kInvalidConfig, "train-mode forward requires an rng");

  Eigen::MatrixXd x(t_count, h);
  for (int t = 0; t < t_count; ++t) {
    const auto& tok = tokens.tokens[t];
    const int m = static_cast<int>(tok.modality);
    x.row(t) = tok.features.transpose() * model.tensor(mt.input_weight[m]) + model.tensor(mt.input_bias[m]);
  }

  // Relative bias per head, shared by all layers.
  std::vector<Eigen::MatrixXd> rel_bias;
  if (cfg.use_relative) {
    const ConstMatrixMap rx = model.tensor(mt.rel_x);
    const ConstMatrixMap ry = model.tensor(mt.rel_y);
    for (int hd = 0; hd < nh; ++hd) {
      Eigen::MatrixXd b(t_count, t_count);
      for (int j = 0; j < t_count; ++j) {
        for (int i = 0; i < t_count; ++i) b(i, j) = rx(hd, tokens.rel_x(i, j)) + ry(hd, tokens.rel_y(i, j));
      }
      rel_bias.push_back(std::move(b));
    }
  }

  if (cache) cache->layers.assign(cfg.layers, {});
  for (int l = 0; l < cfg.layers; ++l) {
    const LayerTensors& lt = mt.layers[l];
    LayerCache local;
    LayerCache& c = cache ? cache->layers[l] : local;
    c.input = x;

    auto n1 = layer_norm(x, model.tensor(lt.ln1_gain), model.tensor(lt.ln1_bias));
    c.ln1_xhat = std::move(n1.xhat);
    c.ln1_rstd = std::move(n1.rstd);
    c.ln1_out = std::move(n1.out);
    c.q = (c.ln1_out * model.tensor(lt.wq)).rowwise() + model.tensor(lt.bq).row(0);
    // No key bias: it shifts each softmax row by a constant.
    c.k = c.ln1_out * model.tensor(lt.wk);
    c.v = (c.ln1_out * model.tensor(lt.wv)).rowwise() + model.tensor(lt.bv).row(0);

    c.attn_concat.resize(t_count, h);
    c.probs.assign(nh, {});
    c.attn_dropout.assign(drop ? nh : 0, {});
    for (int hd = 0; hd < nh; ++hd) {
      Eigen::MatrixXd s = c.q.middleCols(hd * dh, dh) * c.k.middleCols(hd * dh, dh).transpose() * scale;
      if (cfg.use_relative) s += rel_bias[hd];
      for (int i = 0; i < t_count; ++i) {
        const double mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp();
        s.row(i) /= s.row(i).sum();
      }
      if (drop) {
        c.attn_dropout[hd] = dropout_mask(t_count, t_count, cfg.dropout, *rng);
        c.attn_concat.middleCols(hd * dh, dh) =
            s.cwiseProduct(c.attn_dropout[hd]) * c.v.middleCols(hd * dh, dh);
      } else {
        c.attn_concat.middleCols(hd * dh, dh) = s * c.v.middleCols(hd * dh, dh);
      }
      c.probs[hd] = std::move(s);
    }
    x += (c.attn_concat * model.tensor(lt.wo)).rowwise() + model.tensor(lt.bo).row(0);
    c.mid = x;

    auto n2 = layer_norm(x, model.tensor(lt.ln2_gain), model.tensor(lt.ln2_bias));
    c.ln2_xhat = std::move(n2.xhat);
    c.ln2_rstd = std::move(n2.rstd);
    c.ln2_out = std::move(n2.out);
    c.ffn_pre = (c.ln2_out * model.tensor(lt.w1)).rowwise() + model.tensor(lt.b1).row(0);
    c.ffn_act = c.ffn_pre.unaryExpr([](double u) { return gelu(u); });
    Eigen::MatrixXd f = (c.ffn_act * model.tensor(lt.w2)).rowwise() + model.tensor(lt.b2).row(0);
    if (drop) {
      c.ffn_dropout = dropout_mask(t_count, h, cfg.dropout, *rng);
      f = f.cwiseProduct(c.ffn_dropout);
    } else {
      c.ffn_dropout.resize(0, 0);
    }
    x += f;
  }

  auto nf = layer_norm(x, model.tensor(mt.final_gain), model.tensor(mt.final_bias));
  ForwardOutput out;
  out.token_outputs = std::move(nf.out);
  if (cache) {
    cache->final_xhat = std::move(nf.xhat);
    cache->final_rstd = std::move(nf.rstd);
  }

  out.element_embeddings = Eigen::MatrixXd::Zero(tokens.element_count, h);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(tokens.element_count);
  for (int t = 0; t < t_count; ++t) {
    out.element_embeddings.row(tokens.tokens[t].element) += out.token_outputs.row(t);
    counts[tokens.tokens[t].element] += 1.0;
  }
  for (int e = 0; e < tokens.element_count; ++e) {
    if (counts[e] > 0.0) out.element_embeddings.row(e) /= counts[e];
  }
  return out;
}

void backward(const EncoderModel& model, const ModalityTokens& tokens, const ForwardCache& cache,
              const Eigen::MatrixXd& d_outputs, std::span<double> grad) {
  const EncoderConfig& cfg = model.config();
  const ModelTensors& mt = model.tensors();
  const ParameterLayout& layout = model.layout();
  const int t_count = tokens.size();
  const int nh = cfg.heads;
  const int dh = cfg.hidden / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto g = [&](std::size_t i) { return tensor_view(grad, layout[i]); };

  Eigen::MatrixXd dx = layer_norm_backward(d_outputs, cache.final_xhat, cache.final_rstd,
                                           model.tensor(mt.final_gain), g(mt.final_gain), g(mt.final_bias));

  MatrixMap drx = g(mt.rel_x);
  MatrixMap dry = g(mt.rel_y);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerTensors& lt = mt.layers[l];
    const LayerCache& c = cache.layers[l];

    // Feed-forward branch.
    Eigen::MatrixXd df = c.ffn_dropout.size() ? Eigen::MatrixXd(dx.cwiseProduct(c.ffn_dropout)) : dx;
    g(lt.w2) += c.ffn_act.transpose() * df;
    g(lt.b2).row(0) += df.colwise().sum();
    Eigen::MatrixXd du = (df * model.tensor(lt.w2).transpose()).cwiseProduct(
        c.ffn_pre.unaryExpr([](double u) { return gelu_grad(u); }));
    g(lt.w1) += c.ln2_out.transpose() * du;
    g(lt.b1).row(0) += du.colwise().sum();
    Eigen::MatrixXd da2 = du * model.tensor(lt.w1).transpose();
    dx += layer_norm_backward(da2, c.ln2_xhat, c.ln2_rstd, model.tensor(lt.ln2_gain), g(lt.ln2_gain),
                              g(lt.ln2_bias));

    // Attention branch.
    g(lt.wo) += c.attn_concat.transpose() * dx;
    g(lt.bo).row(0) += dx.colwise().sum();
    const Eigen::MatrixXd dconcat = dx * model.tensor(lt.wo).transpose();
    Eigen::MatrixXd dq(t_count, cfg.hidden), dk(t_count, cfg.hidden), dv(t_count, cfg.hidden);
    for (int hd = 0; hd < nh; ++hd) {
      const auto doh = dconcat.middleCols(hd * dh, dh);
      const Eigen::MatrixXd& p = c.probs[hd];
      const bool dropped = !c.attn_dropout.empty();
      const Eigen::MatrixXd pd = dropped ? Eigen::MatrixXd(p.cwiseProduct(c.attn_dropout[hd])) : p;
      dv.middleCols(hd * dh, dh) = pd.transpose() * doh;
      Eigen::MatrixXd dp = doh * c.v.middleCols(hd * dh, dh).transpose();
      if (dropped) dp = dp.cwiseProduct(c.attn_dropout[hd]);
      const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
      const Eigen::MatrixXd ds = p.cwiseProduct(dp.colwise() - row_dot);
      dq.middleCols(hd * dh, dh) = ds * c.k.middleCols(hd * dh, dh) * scale;
      dk.middleCols(hd * dh, dh) = ds.transpose() * c.q.middleCols(hd * dh, dh) * scale;
      if (cfg.use_relative) {
        for (int j = 0; j < t_count; ++j) {
          for (int i = 0; i < t_count; ++i) {
            drx(hd, tokens.rel_x(i, j)) += ds(i, j);
            dry(hd, tokens.rel_y(i, j)) += ds(i, j);
          }
        }
      }
    }
    g(lt.wq) += c.ln1_out.transpose() * dq;
    g(lt.bq).row(0) += dq.colwise().sum();
    g(lt.wk) += c.ln1_out.transpose() * dk;
    g(lt.wv) += c.ln1_out.transpose() * dv;
    g(lt.bv).row(0) += dv.colwise().sum();
    const Eigen::MatrixXd da1 = dq * model.tensor(lt.wq).transpose() + dk * model.tensor(lt.wk).transpose() +
                                dv * model.tensor(lt.wv).transpose();
    dx += layer_norm_backward(da1, c.ln1_xhat, c.ln1_rstd, model.tensor(lt.ln1_gain), g(lt.ln1_gain),
                              g(lt.ln1_bias));
  }

  for (int t = 0; t < t_count; ++t) {
    const auto& tok = tokens.tokens[t];
    const int m = static_cast<int>(tok.modality);
    g(mt.input_weight[m]) += tok.features * dx.row(t);
    g(mt.input_bias[m]).row(0) += dx.row(t);
  }
}

std::vector<Reconstruction> reconstruct(const EncoderModel& model, const ModalityTokens& tokens,
                                        const Eigen::MatrixXd& token_outputs) {
  const ModelTensors& mt = model.tensors();
  std::vector<Reconstruction> out;
  for (int t = 0; t < tokens.size(); ++t) {
    const int slot = head_slot(tokens.tokens[t].modality);
    if (slot < 0) continue;
    Eigen::VectorXd v = (token_outputs.row(t) * model.tensor(mt.head_weight[slot]) +
                         model.tensor(mt.head_bias[slot]))
                            .transpose();
    out.push_back({t, tokens.tokens[t].modality, std::move(v)});
  }
  return out;
}

ElementEmbeddings embed_screen(const EncoderModel& model, const Screen& screen, const TextEncoder& encoder,
                               const Image* screenshot) {
  const ModalityTokens tokens = tokenize_screen(screen, encoder, model.config().features(), screenshot);
  ElementEmbeddings out;
  out.screen_id = screen.id;
  for (const auto& e : screen.elements) out.element_ids.push_back(e.id);
  out.vectors = forward(model, tokens).element_embeddings;
  return out;
}

}  // namespace screencorr
