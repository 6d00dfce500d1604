#include <benchmark/benchmark.h>

#include "msk/finite_n.hpp"
#include "msk/gtbound.hpp"
#include "msk/parisi.hpp"

using namespace msk;

namespace {

SpeciesSystem bench_system(int S) {
  Vec l = Vec::Constant(S, 1.0 / S);
  Mat d(S, S);
  for (int s = 0; s < S; ++s)
    for (int t = 0; t < S; ++t) d(s, t) = s == t ? 1.0 : 0.4;
  return validate_system(l, d, Vec::Constant(S, 0.2));
}

DiscreteOrderedMeasure bench_measure(int S, int r) {
  DiscreteOrderedMeasure mu;
  for (int l = 0; l < r; ++l) mu.zeta.push_back(0.1 + 0.8 * l / (r - 1));
  for (int l = 1; l < r; ++l) mu.q.push_back(Vec::Constant(S, static_cast<double>(l) / r));
  return mu;
}

}  // namespace

static void BM_SolveQstar(benchmark::State& st) {
  const auto sys = bench_system(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_qstar(sys, QuadratureSpec{}));
}
BENCHMARK(BM_SolveQstar)->Arg(1)->Arg(3)->Arg(8);

static void BM_GammaAndAT(benchmark::State& st) {
  const auto sys = bench_system(3);
  for (auto _ : st) benchmark::DoNotOptimize(gamma_and_at(sys, QuadratureSpec{}));
}
BENCHMARK(BM_GammaAndAT);

static void BM_ParisiValue(benchmark::State& st) {
  const auto sys = bench_system(2);
  const auto mu = bench_measure(2, static_cast<int>(st.range(0)));
  const bool grad = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(parisi_value(sys, mu, QuadratureSpec{}, grad));
}
BENCHMARK(BM_ParisiValue)->ArgsProduct({{2, 3, 5, 8}, {0, 1}})->Unit(benchmark::kMicrosecond);

static void BM_MinimizeRsb(benchmark::State& st) {
  const auto sys = validate_system(Vec::Ones(1), Mat::Constant(1, 1, 0.75), Vec::Constant(1, 0.01));
  for (auto _ : st) benchmark::DoNotOptimize(minimize_rsb(sys, 3, QuadratureSpec{}));
}
BENCHMARK(BM_MinimizeRsb)->Unit(benchmark::kMillisecond)->Iterations(1);

static void BM_GTUpperBound(benchmark::State& st) {
  const auto sys = bench_system(2);
  const Vec qs = solve_qstar(sys, QuadratureSpec{}).q_star;
  const Vec u = qs + 0.5 * (Vec::Ones(2) - qs);
  const GTParams p = gt_branch_params(sys, u, qs, GTBranch::Upper);
  for (auto _ : st) benchmark::DoNotOptimize(gt_upper_bound(sys, p, QuadratureSpec{}));
}
BENCHMARK(BM_GTUpperBound)->Unit(benchmark::kMillisecond);

static void BM_ExactFreeEnergy(benchmark::State& st) {
  const int half = static_cast<int>(st.range(0));
  const auto sys = bench_system(2);
  const auto inst = sample_instance(sys, {half, half}, 1.0, 7);
  for (auto _ : st) benchmark::DoNotOptimize(exact_free_energy(inst));
  st.SetItemsProcessed(st.iterations() * (std::int64_t{1} << (2 * half)));
}
BENCHMARK(BM_ExactFreeEnergy)->DenseRange(4, 10, 2)->Unit(benchmark::kMicrosecond);

static void BM_OverlapStatistics(benchmark::State& st) {
  const int half = static_cast<int>(st.range(0));
  const auto inst = sample_instance(bench_system(2), {half, half}, 1.0, 7);
  for (auto _ : st) benchmark::DoNotOptimize(overlap_statistics(inst));
}
BENCHMARK(BM_OverlapStatistics)->DenseRange(4, 10, 2)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
