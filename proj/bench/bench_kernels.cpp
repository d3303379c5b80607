// Serial reference vs OpenMP kernels. Arg 0 selects the policy
// (0 = serial, 1 = parallel); the outputs are identical either way.

#include <benchmark/benchmark.h>

#include "mplab/distributions.hpp"
#include "mplab/geometry.hpp"
#include "mplab/process.hpp"

using namespace mplab;

namespace {

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) ? ExecPolicy::kParallel : ExecPolicy::kSerial;
}

void BM_MeanWidthL1CapL2(benchmark::State& state) {
  const auto set = IndexSetSpec::l1_cap_l2(static_cast<int>(state.range(1)), 1.0, 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(gaussian_mean_width(set, 2000, std::nullopt, {1, 0, 0}, policy_of(state)).mean);
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_MeanWidthL1CapL2)->ArgsProduct({{0, 1}, {64, 1024}})->Unit(benchmark::kMillisecond);

void BM_WeightedColumnSums(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  const auto batch = sample_batch(DistributionSpec::make(CoordinateFamily::kStudentT, 8, n),
                                  NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3, 1), n, {2, 0, 0});
  const Eigen::VectorXd w = batch.xi.cwiseProduct(batch.eps);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_column_sums(batch.x, w, policy_of(state)).sum());
}
BENCHMARK(BM_WeightedColumnSums)->ArgsProduct({{0, 1}, {256, 2048}})->Unit(benchmark::kMicrosecond);

void BM_SampleBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  const auto dist = DistributionSpec::make(CoordinateFamily::kStudentT, 8, n);
  const auto noise = NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_batch(dist, noise, n, {3, 0, 0}, BatchRole::kPrimary, policy_of(state)).x.sum());
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_SampleBatch)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
