#include <benchmark/benchmark.h>

#include "screencorr/assignment.hpp"
#include "screencorr/element_index.hpp"
#include "screencorr/encoder.hpp"
#include "screencorr/random.hpp"
#include "screencorr/synthcorpus.hpp"

namespace {

using namespace screencorr;

Eigen::MatrixXd random_weights(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = uniform(rng, -1.0, 1.0);
  return w;
}

void BM_OptimalAssignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd w = random_weights(n, 1);
  const BoolMatrix allowed = BoolMatrix::Constant(n, n, true);
  for (auto _ : state) benchmark::DoNotOptimize(max_weight_matching(w, allowed));
}
BENCHMARK(BM_OptimalAssignment)->RangeMultiplier(2)->Range(8, 128);

void BM_GreedyAssignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd w = random_weights(n, 1);
  const BoolMatrix allowed = BoolMatrix::Constant(n, n, true);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_matching(w, allowed));
}
BENCHMARK(BM_GreedyAssignment)->RangeMultiplier(2)->Range(8, 128);

// Embedding one synthetic screen at the default width.
void BM_EmbedScreen(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.hidden = static_cast<int>(state.range(0));
  cfg.dropout = 0.0;
  const EncoderModel model = init_model(cfg);
  const HashingTextEncoder enc;
  Rng rng(3);
  const Screen s = generate_screen(ScreenCategory::kRegister, rng, "bench");
  for (auto _ : state) benchmark::DoNotOptimize(embed_screen(model, s, enc));
  state.counters["elements"] = static_cast<double>(s.elements.size());
}
BENCHMARK(BM_EmbedScreen)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_NearestNeighbour(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int dim = 256;
  Rng rng(5);
  ElementIndex index;
  for (int s = 0; s < n / 10; ++s) {
    std::vector<ElementIndexEntry> entries;
    for (int e = 0; e < 10; ++e) {
      ElementIndexEntry x;
      x.element_id = "e" + std::to_string(s * 10 + e);
      x.screen_id = "s" + std::to_string(s);
      x.embedding = Eigen::VectorXf::NullaryExpr(dim, [&] { return static_cast<float>(normal(rng)); });
      entries.push_back(std::move(x));
    }
    index.upsert_screen("s" + std::to_string(s), "bench", std::move(entries), Eigen::VectorXf::Ones(dim));
  }
  const Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(dim, [&] { return normal(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(index.nn_search(q, 10));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_NearestNeighbour)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler, so main lives here.
BENCHMARK_MAIN();
