// Serial reference kernels against their OpenMP counterparts. Run with
// OMP_NUM_THREADS set to compare thread counts; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include "qll/ambigen.hpp"
#include "qll/model.hpp"
#include "qll/reference.hpp"
#include "qll/risk.hpp"

namespace {

using namespace qll;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  RngStream rng(seed, 99);
  Matrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

std::vector<ClassIndex> random_labels(std::size_t n, std::uint32_t c) {
  RngStream rng(7, 98);
  std::vector<ClassIndex> y(n);
  for (auto& v : y) v = static_cast<ClassIndex>(rng.uniform_int(c));
  y[0] = 0;
  y[1] = 1;
  return y;
}

Model bench_model() {
  RngStream rng(1, streams::kInit);
  return init_model(ModelKind::kMlp, {64, 256, 10}, rng);
}

void BM_ForwardReference(benchmark::State& st) {
  const Model m = bench_model();
  const Matrix x = random_matrix(static_cast<std::size_t>(st.range(0)), 64, 1);
  for (auto _ : st) benchmark::DoNotOptimize(reference::forward_batch(m, x));
}

void BM_ForwardParallel(benchmark::State& st) {
  const Model m = bench_model();
  const Matrix x = random_matrix(static_cast<std::size_t>(st.range(0)), 64, 1);
  for (auto _ : st) benchmark::DoNotOptimize(forward_batch(m, x, Exec::kParallel));
}

void BM_BackwardReference(benchmark::State& st) {
  const Model m = bench_model();
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix x = random_matrix(n, 64, 1);
  const Matrix dz = random_matrix(n, 10, 2);
  for (auto _ : st) benchmark::DoNotOptimize(reference::backward_batch(m, x, dz));
}

void BM_BackwardParallel(benchmark::State& st) {
  const Model m = bench_model();
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix x = random_matrix(n, 64, 1);
  const Matrix dz = random_matrix(n, 10, 2);
  const BatchCache cache = forward_batch(m, x);
  for (auto _ : st) benchmark::DoNotOptimize(backward_batch(m, x, cache, dz, Exec::kParallel));
}

void BM_CpuRiskReference(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix z = random_matrix(n, 10, 3);
  const auto y = random_labels(n, 10);
  const ClassPriors pri(0.1, 0.2);
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::cpu_risk_with_grad(z, y, pri, BinaryLossKind::scaled_sjs(), 0.25));
  }
}

void BM_CpuRiskParallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix z = random_matrix(n, 10, 3);
  const auto y = random_labels(n, 10);
  const ClassPriors pri(0.1, 0.2);
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        cpu_risk_with_grad(z, y, pri, BinaryLossKind::scaled_sjs(), 0.25, UMode::kComplement, Exec::kParallel));
  }
}

void generate(benchmark::State& st, Exec exec) {
  const AmbiguousDataset base = synth_base(BaseSpec{10, 64, 200, 6.0, 1.0}, RngStream(1, streams::kBaseTrain));
  MixSpec mix;
  mix.m = 3;
  for (auto _ : st) {
    benchmark::DoNotOptimize(generate_ambiguous_dataset(base, mix, static_cast<std::size_t>(st.range(0)),
                                                        RngStream(1, streams::kDatagen), exec));
  }
}

void BM_GenerateSerial(benchmark::State& st) { generate(st, Exec::kSerial); }
void BM_GenerateParallel(benchmark::State& st) { generate(st, Exec::kParallel); }

}  // namespace

BENCHMARK(BM_ForwardReference)->Arg(64)->Arg(1024);
BENCHMARK(BM_ForwardParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_BackwardReference)->Arg(64)->Arg(1024);
BENCHMARK(BM_BackwardParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_CpuRiskReference)->Arg(64)->Arg(1024);
BENCHMARK(BM_CpuRiskParallel)->Arg(64)->Arg(1024);
BENCHMARK(BM_GenerateSerial)->Arg(2000);
BENCHMARK(BM_GenerateParallel)->Arg(2000);

BENCHMARK_MAIN();
