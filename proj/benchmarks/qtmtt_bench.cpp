#include <benchmark/benchmark.h>

#include <random>

#include "qtmtt/gbdt.hpp"
#include "qtmtt/harness.hpp"
#include "qtmtt/intra_codec.hpp"
#include "qtmtt/nn.hpp"
#include "qtmtt/rdo_search.hpp"

namespace {

using namespace qtmtt;

const Frame& frame() {
  static const Frame f = harness::synthetic_image(64, 64, 5);
  return f;
}

void BM_LeafCost(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const CuGeometry g{0, 0, side, side, 0};
  for (auto _ : state) benchmark::DoNotOptimize(codec::rd_cost_leaf(frame(), {}, g, 27));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_LeafCost)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void BM_Exhaustive(benchmark::State& state) {
  std::uint64_t nodes = 0;
  for (auto _ : state) {
    const auto r = rdo::rdo_exhaustive(frame(), {}, root_geometry(), 27);
    nodes = r.stats.evaluated_nodes;
    benchmark::DoNotOptimize(r.rd.cost);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_Exhaustive)->Unit(benchmark::kMillisecond);

void BM_PrunedUniform(benchmark::State& state) {
  const rdo::UniformPredictor pred;
  const auto cfg = rdo::TopNConfig::uniform(static_cast<int>(state.range(0)));
  std::uint64_t nodes = 0;
  for (auto _ : state) {
    const auto r = rdo::rdo_pruned(frame(), {}, root_geometry(), 27, pred, cfg);
    nodes = r.stats.evaluated_nodes;
    benchmark::DoNotOptimize(r.rd.cost);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_PrunedUniform)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_CnnForward(benchmark::State& state) {
  const auto spec = nn::NetSpec::desk();
  const auto params = nn::init_params(spec, 1);
  const auto patch = data::extract_patch(frame(), {0, 0});
  for (auto _ : state) benchmark::DoNotOptimize(nn::predict_edges(spec, params, patch, 27));
}
BENCHMARK(BM_CnnForward)->Unit(benchmark::kMicrosecond);

void BM_CnnBackward(benchmark::State& state) {
  const auto spec = nn::NetSpec::desk();
  const auto params = nn::init_params(spec, 1);
  data::BlockSample s;
  s.pixels = data::extract_patch(frame(), {0, 0});
  s.qp = 27;
  const std::vector<nn::Example> batch(static_cast<std::size_t>(state.range(0)), nn::to_example(s));
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward(spec, params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CnnBackward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_GbdtPredict(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<data::HardRecord> recs(2000);
  for (auto& r : recs) {
    r.geometry = CuGeometry{0, 0, 32, 32, 0};
    r.size_id = 1;
    r.features.resize(static_cast<std::size_t>(crop_length(32, 32)));
    for (auto& f : r.features) f = u(rng);
    r.qp = 32;
    r.label = static_cast<SplitType>(std::min(5, static_cast<int>(6 * r.features[0])));
  }
  gbdt::TrainOptions opt;
  opt.rounds = static_cast<int>(state.range(0));
  const auto model = gbdt::train_model(1, recs, opt);
  const auto x = gbdt::feature_vector(recs[0]);
  const SplitSet legal = legal_splits(recs[0].geometry);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x, legal));
}
BENCHMARK(BM_GbdtPredict)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_GbdtTrainRound(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<data::HardRecord> recs(static_cast<std::size_t>(state.range(0)));
  for (auto& r : recs) {
    r.geometry = CuGeometry{0, 0, 16, 16, 0};
    r.size_id = 8;
    r.features.resize(static_cast<std::size_t>(crop_length(16, 16)));
    for (auto& f : r.features) f = u(rng);
    r.qp = 27;
    r.label = static_cast<SplitType>(rng() % 6);
  }
  gbdt::TrainOptions opt;
  opt.rounds = 1;
  for (auto _ : state) benchmark::DoNotOptimize(gbdt::train_model(8, recs, opt));
}
BENCHMARK(BM_GbdtTrainRound)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
