#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/erm.hpp"
#include "deconv_erm/lowerbound.hpp"

using namespace deconv_erm;

namespace {

struct Data {
  Sample z1, z2;
  DeconvolutionKernel kernel;
};

Data make_data(std::size_t n) {
  const NoiseModel noise = NoiseModel::laplace(2, 0.1);
  SplitBoundary b;
  b.offset = 0.4;
  b.amplitude = 0.1;
  const auto f = boundary_split(b, 0.5, SplitRole::first);
  const auto g = boundary_split(b, 0.5, SplitRole::second);
  Data d;
  d.z1 = add_noise(sample(f, n, 11), noise, 12);
  d.z2 = add_noise(sample(g, n, 13, 2), noise, 14);
  d.kernel = DeconvolutionKernel::build(KernelProfile::flat_top, noise, {0.1, 0.1});
  return d;
}

void BM_KernelBuild(benchmark::State& state) {
  const NoiseModel noise = NoiseModel::laplace(2, 0.1);
  for (auto _ : state) {
    auto k = DeconvolutionKernel::build(KernelProfile::flat_top, noise, {0.1, 0.1});
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_KernelBuild)->Unit(benchmark::kMillisecond);

void BM_PerBinCosts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Data d = make_data(n);
  const CandidateNetwork net(32, 129, 2.0, 4.0);
  for (auto _ : state) {
    auto c = per_bin_costs(d.z1, d.z2, d.kernel, net);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_PerBinCosts)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

void BM_Dp(benchmark::State& state) {
  const auto V = static_cast<std::size_t>(state.range(0));
  const Data d = make_data(500);
  const CandidateNetwork net(32, V, 2.0, 4.0);
  const CostMatrix c = per_bin_costs(d.z1, d.z2, d.kernel, net);
  for (auto _ : state) {
    auto r = minimize_costs(c, net);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Dp)->Arg(65)->Arg(129)->Arg(257)->Arg(513)->Unit(benchmark::kMillisecond);

void BM_Chi2Dirac(benchmark::State& state) {
  FamilyParams p;
  p.M = static_cast<int>(state.range(0));
  const HypothesisFamily fam(p);
  const NoiseModel noise = NoiseModel::dirac(2);
  for (auto _ : state) {
    auto r = chi2(fam, 1, noise);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Chi2Dirac)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
