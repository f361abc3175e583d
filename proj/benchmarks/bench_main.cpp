#include <benchmark/benchmark.h>

#include "recnn/baselines.hpp"
#include "recnn/chisq.hpp"
#include "recnn/layers.hpp"
#include "recnn/linalg.hpp"
#include "recnn/model.hpp"
#include "recnn/recurrent.hpp"

using namespace recnn;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.next_double();
  return t;
}

void BM_DilatedConv(benchmark::State& state) {
  Rng rng(1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const DilatedConv2D layer = DilatedConv2D::glorot(rng, 6, 32, 1, 1);
  const Tensor x = random_tensor(rng, {batch, 6, 5, 5});
  for (auto _ : state) {
    Tape tape;
    Binding bind(tape, false);
    benchmark::DoNotOptimize(layer.forward(bind, tape.constant(x)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_DilatedConv)->Arg(1)->Arg(32);

void BM_CellStep(benchmark::State& state) {
  Rng rng(2);
  const auto type = static_cast<CellType>(state.range(0));
  const RecurrentCell cell = make_cell(type, rng, 64, 128, true);
  const Tensor f1 = random_tensor(rng, {64, 32}), f2 = random_tensor(rng, {64, 32});
  for (auto _ : state) {
    Tape tape;
    Binding bind(tape, false);
    const Var feats[] = {tape.constant(f1), tape.constant(f2)};
    benchmark::DoNotOptimize(run_sequence(bind, cell, feats).value().data().data());
  }
  state.SetLabel(std::string(to_string(type)));
}
BENCHMARK(BM_CellStep)->Arg(0)->Arg(1)->Arg(2);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(3);
  ModelConfig config;
  config.cell = static_cast<CellType>(state.range(0));
  ReCNNModel model = ReCNNModel::create(config, rng);
  std::vector<PatchPair> batch;
  for (std::size_t i = 0; i < 32; ++i) {
    batch.push_back({random_tensor(rng, {6, 5, 5}), random_tensor(rng, {6, 5, 5}), i % 2, 0, 0});
  }
  Nadam opt;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, batch, opt));
  state.SetLabel(std::string(to_string(config.cell)));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Jacobi(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigh(a).values.data());
}
BENCHMARK(BM_Jacobi)->Arg(6)->Arg(32);

void BM_ChisqCdf(benchmark::State& state) {
  double z = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chisq_cdf(z, 6.0));
    z = z > 40.0 ? 0.0 : z + 0.37;
  }
}
BENCHMARK(BM_ChisqCdf);

void BM_Irmad(benchmark::State& state) {
  Rng rng(5);
  Raster t1(100, 100, 6), t2(100, 100, 6);
  for (auto& v : t1.data) v = rng.next_double();
  for (std::size_t i = 0; i < t2.data.size(); ++i) t2.data[i] = 0.8 * t1.data[i] + 0.2 * rng.next_double();
  for (auto _ : state) benchmark::DoNotOptimize(irmad(t1, t2, 10).rho.data());
}
BENCHMARK(BM_Irmad)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
