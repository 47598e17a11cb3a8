// Serial reference vs OpenMP row-parallel kernels on a synthetic world.
#include <benchmark/benchmark.h>

#include "ora/baselines.hpp"
#include "ora/geometry.hpp"
#include "ora/shaping.hpp"
#include "ora/synthbench.hpp"

namespace {

using namespace ora;

const synth::World& world() {
  static const synth::World w = [] {
    auto spec = synth::canonical_spec();
    spec.dim = 256;
    spec.classes = 100;
    spec.n_train = 5000;
    spec.n_test = 5000;
    spec.n_ood = 10;
    return synth::generate_world(spec);
  }();
  return w;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(world().id_test.size()));
}

void BM_OraScores(benchmark::State& state) {
  const auto& w = world();
  const auto mu = compute_centering(w.id_train, CenteringStrategy::global_mean);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ora_scores_batch(w.id_test, w.head, mu, Aggregation::max, exec_of(state)));
  }
  label(state);
}
BENCHMARK(BM_OraScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FdbdScores(benchmark::State& state) {
  const auto& w = world();
  const auto mu = compute_centering(w.id_train, CenteringStrategy::global_mean);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fdbd_scores(w.id_test, w.head, mu.vector, exec_of(state)));
  }
  label(state);
}
BENCHMARK(BM_FdbdScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_KnnScores(benchmark::State& state) {
  const auto& w = world();
  const KnnIndex index(w.id_train.data, kDefaultKnnK);
  for (auto _ : state) benchmark::DoNotOptimize(knn_scores(w.id_test, index, exec_of(state)));
  label(state);
}
BENCHMARK(BM_KnnScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ScaleShaping(benchmark::State& state) {
  const auto& w = world();
  const auto cfg = ShapingConfig::with_defaults(ShapeMethod::scale);
  for (auto _ : state) benchmark::DoNotOptimize(shape_features(w.id_test, cfg, exec_of(state)));
  label(state);
}
BENCHMARK(BM_ScaleShaping)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
