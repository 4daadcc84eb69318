#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "screencorr/applications.hpp"
#include "screencorr/checkpoint.hpp"
#include "screencorr/errors.hpp"
#include "screencorr/evaluator.hpp"
#include "screencorr/http_service.hpp"
#include "screencorr/synthcorpus.hpp"
#include "screencorr/trainer.hpp"

namespace screencorr::cli {
namespace {

namespace fs = std::filesystem;

std::atomic<HttpServer*> g_server{nullptr};

void on_signal(int) {
  if (HttpServer* s = g_server.load()) s->stop();
}

nlohmann::json meta(std::uint64_t seed) {
  return {{"tool", "screencorr"}, {"version", SCREENCORR_VERSION}, {"seed", seed}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void emit(const nlohmann::json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

struct MatchOptions {
  int k = 5;
  double c = 0.4;
  bool greedy = false;

  void add(CLI::App* app) {
    app->add_option("-k,--k", k, "top-k pruning width")->check(CLI::PositiveNumber);
    app->add_option("-c,--c", c, "minimum similarity to keep a pair")->check(CLI::Range(-1.0, 1.0));
    app->add_flag("--greedy", greedy, "greedy assignment instead of optimal");
  }
  MatchParams params() const {
    return {k, c, greedy ? AssignmentMethod::kGreedy : AssignmentMethod::kOptimal};
  }
};

struct OverlayOptions {
  double d_screen = 0.5;
  int n_min = 2;
  double s_min = 0.5;

  void add(CLI::App* app) {
    app->add_option("--d-screen", d_screen, "largest cosine distance to the exemplar screen");
    app->add_option("--n-min", n_min, "fewest matched elements");
    app->add_option("--s-min", s_min, "lowest mean match score");
  }
  OverlayParams params(const MatchParams& m) const { return {d_screen, n_min, s_min, m}; }
};

const HashingTextEncoder& text_encoder() {
  static const HashingTextEncoder enc;
  return enc;
}

// Holdout for early stopping when no validation directory is given.
void split_validation(std::vector<Screen>& train, std::vector<Screen>& val, double fraction, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "val-split"));
  shuffle(train.begin(), train.end(), rng);
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(train.size()));
  val.assign(train.end() - static_cast<std::ptrdiff_t>(n_val), train.end());
  train.resize(train.size() - n_val);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Screen correspondence toolkit", "screencorr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SCREENCORR_VERSION);
  std::uint64_t seed = kDefaultSeed;
  std::function<int()> action;

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic screen/pair corpus");
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "corpus TOML")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "overrides the config seed");
  gen->callback([&] {
    action = [&] {
      CorpusConfig cfg = CorpusConfig::from_toml_file(gen_config);
      if (gen_seed) cfg.seed = *gen_seed;
      const Dataset d = write_corpus(cfg, gen_out);
      out << nlohmann::json{{"screens", d.screens.size()}, {"pairs", d.pairs.size()}, {"meta", meta(cfg.seed)}}.dump()
          << '\n';
      return kExitOk;
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "masked element prediction pretraining");
  std::string tr_corpus, tr_val, tr_out, tr_history;
  double tr_val_fraction = 0.1;
  EncoderConfig enc_cfg;
  TrainConfig train_cfg;
  bool no_text = false, no_appearance = false, no_relative = false, quiet = false;
  tr->add_option("--corpus", tr_corpus, "corpus directory (screens/)")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--val", tr_val, "validation corpus directory")->check(CLI::ExistingDirectory);
  tr->add_option("--val-fraction", tr_val_fraction, "holdout share without --val")->check(CLI::Range(0.0, 0.9));
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--history", tr_history, "per-epoch loss CSV");
  std::string tr_config;
  tr->add_option("--config", tr_config, "TOML with [encoder] and [train] tables")->check(CLI::ExistingFile);
  // Values given on the command line win over the config file.
  EncoderConfig enc_flags;
  TrainConfig train_flags;
  std::vector<std::function<void()>> overrides;
  auto flag = [&](const char* name, auto& flag_value, auto& target) {
    auto* opt = tr->add_option(name, flag_value);
    overrides.push_back([opt, &flag_value, &target] {
      if (opt->count() > 0) target = flag_value;
    });
  };
  flag("--hidden", enc_flags.hidden, enc_cfg.hidden);
  flag("--layers", enc_flags.layers, enc_cfg.layers);
  flag("--heads", enc_flags.heads, enc_cfg.heads);
  flag("--dropout", enc_flags.dropout, enc_cfg.dropout);
  flag("--lr", train_flags.learning_rate, train_cfg.learning_rate);
  flag("--weight-decay", train_flags.weight_decay, train_cfg.weight_decay);
  flag("--mask-rate", train_flags.mask_rate, train_cfg.mask_rate);
  flag("--batch-size", train_flags.batch_size, train_cfg.batch_size);
  flag("--epochs", train_flags.max_epochs, train_cfg.max_epochs);
  flag("--patience", train_flags.patience, train_cfg.patience);
  tr->add_option("--seed", seed);
  tr->add_flag("--no-text", no_text);
  tr->add_flag("--no-appearance", no_appearance);
  tr->add_flag("--no-relative", no_relative);
  tr->add_flag("--quiet", quiet);
  tr->callback([&] {
    action = [&] {
      if (!tr_config.empty()) {
        const TrainingSetup setup = TrainingSetup::from_toml_file(tr_config);
        enc_cfg = setup.encoder;
        train_cfg = setup.train;
      }
      for (auto& apply : overrides) apply();
      if (no_text) enc_cfg.use_text = false;
      if (no_appearance) enc_cfg.use_appearance = false;
      if (no_relative) enc_cfg.use_relative = false;
      enc_cfg.seed = derive_seed(seed, "init");
      train_cfg.seed = derive_seed(seed, "train");
      enc_cfg.validate();
      train_cfg.validate();
      std::vector<Screen> corpus = load_screens(tr_corpus);
      std::vector<Screen> val;
      if (!tr_val.empty()) {
        val = load_screens(tr_val);
      } else {
        split_validation(corpus, val, tr_val_fraction, seed);
      }
      auto log = [&](const EpochRecord& r) {
        if (quiet) return;
        err << "epoch " << r.epoch << " train " << r.train.total << " val " << r.val.total << " val_cat_acc "
            << r.val_category_accuracy() << '\n';
      };
      TrainResult result = train(init_model(enc_cfg), corpus, val, train_cfg, text_encoder(), log);
      save_checkpoint(result.model, text_encoder(), tr_out);
      if (!tr_history.empty()) {
        std::ostringstream csv;
        write_history_csv(csv, result.history);
        write_text(tr_history, csv.str());
      }
      const auto& best = result.history.at(static_cast<std::size_t>(result.best_epoch));
      nlohmann::json summary = {{"checkpoint", tr_out},
                                {"model_version", result.model.version()},
                                {"ablation", enc_cfg.ablation_tag()},
                                {"best_epoch", result.best_epoch},
                                {"epochs_run", result.history.size() - 1},
                                {"initial_train_loss", result.history.front().train.total},
                                {"best_val_loss", best.val.total},
                                {"best_val_category_accuracy", best.val_category_accuracy()},
                                {"val_category_reconstruction",
                                 category_reconstruction_accuracy(result.model, val, text_encoder())},
                                {"encoder", enc_cfg.to_json()},
                                {"train", train_cfg.to_json()},
                                {"meta", meta(seed)}};
      write_text(tr_out + ".json", summary.dump(2) + "\n");
      out << summary.dump() << '\n';
      return kExitOk;
    };
  });

  // match
  auto* mt = app.add_subcommand("match", "correspondence between two screens");
  std::string mt_a, mt_b, mt_model, mt_out;
  bool mt_heuristic = false;
  MatchOptions mt_opts;
  mt->add_option("--screen-a,--a", mt_a, "source screen JSON")->required()->check(CLI::ExistingFile);
  mt->add_option("--screen-b,--b", mt_b, "target screen JSON")->required()->check(CLI::ExistingFile);
  auto* mt_model_opt = mt->add_option("--model", mt_model, "checkpoint")->check(CLI::ExistingFile);
  mt->add_flag("--heuristic", mt_heuristic, "category-only baseline")->excludes(mt_model_opt);
  mt->add_option("--out", mt_out, "mapping JSON (default stdout)");
  mt->add_option("--seed", seed);
  mt_opts.add(mt);
  mt->callback([&] {
    if (!mt_heuristic && mt_model.empty()) throw CLI::RequiredError("--model or --heuristic");
    action = [&] {
      const Screen a = load_screen(mt_a);
      const Screen b = load_screen(mt_b);
      CorrespondenceMapping m = mt_heuristic
                                    ? heuristic_correspond(a, b, mt_opts.params())
                                    : correspond(a, b, load_checkpoint(mt_model, text_encoder()), text_encoder(),
                                                 mt_opts.params());
      nlohmann::json j = m.to_json();
      j["meta"] = meta(seed);
      emit(j, mt_out, out);
      return kExitOk;
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "score correspondences against labeled pairs");
  std::string ev_pairs, ev_model, ev_report, ev_ablation, ev_relation;
  bool ev_heuristic = false, ev_keep_easy = false;
  MatchOptions ev_opts;
  ev->add_option("--pairs", ev_pairs, "dataset directory with screens/ and pairs/")
      ->required()
      ->check(CLI::ExistingDirectory);
  auto* ev_model_opt = ev->add_option("--model", ev_model, "checkpoint")->check(CLI::ExistingFile);
  ev->add_flag("--heuristic", ev_heuristic, "category-only baseline")->excludes(ev_model_opt);
  ev->add_option("--ablation", ev_ablation, "expected ablation tag of the checkpoint")
      ->check(CLI::IsMember({"full", "no-text", "no-appearance", "no-relative"}));
  ev->add_option("--relation", ev_relation, "only pairs of this relation")
      ->check(CLI::IsMember({"intra_class", "same_screen"}));
  ev->add_flag("--keep-easy", ev_keep_easy, "keep same-screen pairs that align by location alone");
  ev->add_option("--report", ev_report, "report CSV")->required();
  ev->add_option("--seed", seed);
  ev_opts.add(ev);
  ev->callback([&] {
    if (!ev_heuristic && ev_model.empty()) throw CLI::RequiredError("--model or --heuristic");
    action = [&] {
      const Dataset d = Dataset::load(ev_pairs);
      std::optional<EncoderModel> model;
      std::string model_version = kHeuristicModelVersion;
      if (!ev_heuristic) {
        model = load_checkpoint(ev_model, text_encoder());
        model_version = model->version();
        if (!ev_ablation.empty() && model->config().ablation_tag() != ev_ablation) {
          throw Error(ErrorCode::kCheckpointMismatch,
                      "checkpoint is " + model->config().ablation_tag() + ", expected " + ev_ablation);
        }
      }
      std::vector<std::pair<EvalRecord, ScoreReport>> results;
      int skipped_easy = 0;
      for (const auto& p : d.pairs) {
        if (!ev_relation.empty() && relation_name(p.relation) != ev_relation) continue;
        const Screen& a = d.screen(p.screen_a);
        const Screen& b = d.screen(p.screen_b);
        if (p.relation == PairRelation::kSameScreen && !ev_keep_easy && is_easy_pair(a, b)) {
          ++skipped_easy;
          continue;
        }
        const CorrespondenceMapping m = model ? correspond(a, b, *model, text_encoder(), ev_opts.params())
                                              : heuristic_correspond(a, b, ev_opts.params());
        EvalRecord rec = make_eval_record(p, a, b);
        results.emplace_back(rec, score(m, rec));
      }
      const auto rows = category_report(results, true);
      std::ostringstream csv;
      csv << "# screencorr " << SCREENCORR_VERSION << " model_version=" << model_version << " seed=" << seed
          << " k=" << ev_opts.k << " c=" << ev_opts.c << '\n';
      write_report_csv(csv, rows);
      write_text(ev_report, csv.str());
      const auto& overall = rows.back().report;
      out << nlohmann::json{{"pairs", results.size()},
                            {"skipped_easy", skipped_easy},
                            {"precision", overall.precision},
                            {"recall", overall.recall},
                            {"f1", overall.f1},
                            {"model_version", model_version},
                            {"meta", meta(seed)}}
                 .dump()
          << '\n';
      return kExitOk;
    };
  });

  // index
  auto* ix = app.add_subcommand("index", "embed screens into a store");
  std::string ix_store, ix_model, ix_screens;
  ix->add_option("--store", ix_store, "store directory")->required();
  ix->add_option("--model", ix_model, "checkpoint")->required()->check(CLI::ExistingFile);
  ix->add_option("--screens", ix_screens, "directory of screen JSON files")->required()->check(CLI::ExistingDirectory);
  ix->callback([&] {
    action = [&] {
      const EncoderModel model = load_checkpoint(ix_model, text_encoder());
      Store store = Store::open(ix_store);
      std::size_t elements = 0;
      const auto screens = load_screens(ix_screens);
      for (const auto& s : screens) elements += index_screen(store, s, model, text_encoder()).element_ids.size();
      out << nlohmann::json{{"screens", screens.size()},
                            {"elements", elements},
                            {"index_size", store.index().size()},
                            {"model_version", model.version()}}
                 .dump()
          << '\n';
      return kExitOk;
    };
  });

  // serve
  auto* sv = app.add_subcommand("serve", "HTTP API over a store");
  std::string sv_store, sv_model, sv_host = "127.0.0.1";
  int sv_port = 8080;
  OverlayOptions sv_overlay;
  sv->add_option("--store", sv_store, "store directory")->required();
  sv->add_option("--model", sv_model, "checkpoint")->required()->check(CLI::ExistingFile);
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port)->check(CLI::Range(0, 65535));
  sv_overlay.add(sv);
  sv->callback([&] {
    action = [&] {
      Service service(Store::open(sv_store), load_checkpoint(sv_model, text_encoder()),
                      std::make_shared<HashingTextEncoder>(), sv_overlay.params(MatchParams{}));
      HttpServer server(service);
      const int port = server.bind(sv_host, sv_port);
      if (port < 0) throw Error(ErrorCode::kIo, "cannot bind " + sv_host + ":" + std::to_string(sv_port));
      err << "listening on " << sv_host << ':' << port << '\n';
      g_server = &server;
      auto prev_int = std::signal(SIGINT, on_signal);
      auto prev_term = std::signal(SIGTERM, on_signal);
      server.listen();
      std::signal(SIGINT, prev_int);
      std::signal(SIGTERM, prev_term);
      g_server = nullptr;
      return kExitOk;
    };
  });

  // annotate
  auto* an = app.add_subcommand("annotate", "attach an instruction to an indexed element");
  Annotation an_value;
  std::string an_store;
  an->add_option("--store", an_store, "store directory")->required()->check(CLI::ExistingDirectory);
  an->add_option("--screen-id", an_value.screen_id)->required();
  an->add_option("--element-id", an_value.element_id)->required();
  an->add_option("--instruction", an_value.instruction)->required();
  an->add_option("--author", an_value.author);
  an->callback([&] {
    action = [&] {
      Store store = Store::open(an_store);
      out << store.add_annotation(an_value).to_json().dump() << '\n';
      return kExitOk;
    };
  });

  // overlay
  auto* ov = app.add_subcommand("overlay", "transfer stored annotations onto a screen");
  std::string ov_store, ov_model, ov_screen, ov_out;
  OverlayOptions ov_overlay;
  MatchOptions ov_match;
  ov->add_option("--store", ov_store, "store directory")->required()->check(CLI::ExistingDirectory);
  ov->add_option("--model", ov_model, "checkpoint")->required()->check(CLI::ExistingFile);
  ov->add_option("--screen", ov_screen, "target screen JSON")->required()->check(CLI::ExistingFile);
  ov->add_option("--out", ov_out, "overlay JSON (default stdout)");
  ov_overlay.add(ov);
  ov_match.add(ov);
  ov->callback([&] {
    action = [&] {
      const Store store = Store::open(ov_store);
      const OverlaySpec spec = transfer_overlay(store, load_screen(ov_screen), load_checkpoint(ov_model, text_encoder()),
                                                text_encoder(), ov_overlay.params(ov_match.params()));
      nlohmann::json j = spec.to_json();
      j["meta"] = meta(seed);
      emit(j, ov_out, out);
      return kExitOk;
    };
  });

  // replay
  auto* rp = app.add_subcommand("replay", "locate a recorded trace step on a live screen");
  std::string rp_store, rp_trace, rp_trace_file, rp_model, rp_screen;
  int rp_step = 0;
  MatchOptions rp_match;
  rp->add_option("--store", rp_store, "store holding the trace")->check(CLI::ExistingDirectory);
  rp->add_option("--trace", rp_trace, "trace id in the store");
  rp->add_option("--trace-file", rp_trace_file, "trace JSON")->check(CLI::ExistingFile);
  rp->add_option("--step", rp_step)->check(CLI::NonNegativeNumber);
  rp->add_option("--model", rp_model, "checkpoint")->required()->check(CLI::ExistingFile);
  rp->add_option("--screen", rp_screen, "live screen JSON")->required()->check(CLI::ExistingFile);
  rp_match.add(rp);
  rp->callback([&] {
    if (rp_trace_file.empty() && (rp_trace.empty() || rp_store.empty())) {
      throw CLI::RequiredError("--trace-file or --store with --trace");
    }
    action = [&] {
      Trace trace;
      if (!rp_trace_file.empty()) {
        std::ifstream in(rp_trace_file);
        auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::kMalformedDocument, "trace file is not JSON");
        trace = Trace::from_json(j);
      } else {
        const Store store = Store::open(rp_store);
        const Trace* t = store.trace(rp_trace);
        if (!t) throw Error(ErrorCode::kNotFound, "unknown trace '" + rp_trace + "'");
        trace = *t;
      }
      if (rp_step >= static_cast<int>(trace.steps.size())) {
        throw Error(ErrorCode::kNotFound, "trace has no step " + std::to_string(rp_step));
      }
      const ReplayResult r = replay_step(trace.steps[static_cast<std::size_t>(rp_step)], load_screen(rp_screen),
                                         load_checkpoint(rp_model, text_encoder()), text_encoder(), rp_match.params());
      out << nlohmann::json{{"element_id", r.element_id}, {"action", r.action.to_json()}, {"score", r.score},
                            {"step", rp_step}}
                 .dump()
          << '\n';
      return kExitOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return e.get_exit_code() == 0 ? code : kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    err << nlohmann::json{{"error", std::string(error_code_name(e.code()))}, {"message", e.message()}}.dump() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "Failure"}, {"message", e.what()}}.dump() << '\n';
    return kExitDataError;
  }
}

}  // namespace screencorr::cli
