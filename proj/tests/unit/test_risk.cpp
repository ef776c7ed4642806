#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "deconv_erm/common.hpp"
#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/quadrature.hpp"
#include "deconv_erm/risk.hpp"

using namespace deconv_erm;

namespace {

// int_lo^hi (1/l) K_eta((z - x)/l) dx from the frequency side:
// (1/pi) int_0^2 phi(t)/cf(t/l) [sin(t(z-lo)/l) - sin(t(z-hi)/l)] / t dt.
double window_oracle(const CoordinateNoise& eta, double l, double z, double lo, double hi) {
  auto f = [&](double t) {
    const double a = (z - lo) / l, b = (z - hi) / l;
    const double s = t == 0.0 ? a - b : (std::sin(t * a) - std::sin(t * b)) / t;
    return profile_value(KernelProfile::flat_top, t) / eta.cf(t / l) * s;
  };
  QuadratureOptions opt;
  opt.rel_tol = 1e-10;
  opt.max_depth = 20;
  const std::vector<double> br{0.5, 1.0, 1.5};
  return integrate_1d(f, 0.0, 2.0, br, opt).value / kPi;
}

BoundaryFragment random_fragment(std::mt19937_64& rng, std::size_t J) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<double> lv(J);
  for (auto& v : lv) v = u(rng);
  return BoundaryFragment(lv, 2.0, 1e6);
}

}  // namespace

TEST_CASE("smoothed indicators with dirac noise") {
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::dirac(2),
                                            {0.01, 0.01});
  const std::vector<double> z{0.5, 0.5};
  CHECK(std::abs(h_fragment(z, BoundaryFragment::constant(8, 1.0), k) - 1.0) < 1e-3);
  CHECK(std::abs(h_fragment(z, BoundaryFragment::constant(8, 0.0), k)) < 1e-3);
  CHECK(std::abs(h_complement(z, BoundaryFragment::constant(8, 1.0), k)) < 1e-12);
  CHECK(h_box(z, 8, k) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("h_fragment matches the frequency-side oracle") {
  const NoiseModel noise = NoiseModel::laplace(2, 0.1);
  const std::vector<double> lambda{0.3, 0.2};
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, noise, lambda);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uz(-0.3, 1.3);
  for (int rep = 0; rep < 5; ++rep) {
    const auto b = random_fragment(rng, 6);
    const std::vector<double> z{uz(rng), uz(rng)};
    double oracle = 0.0;
    for (std::size_t j = 0; j < b.bins(); ++j) {
      oracle += window_oracle(noise.coordinate(0), lambda[0], z[0], b.bin_lo(j), b.bin_hi(j)) *
                window_oracle(noise.coordinate(1), lambda[1], z[1], 0.0, b.level(j));
    }
    CHECK(std::abs(h_fragment(z, b, k) - oracle) < 1e-4);
  }
}

TEST_CASE("window matrices reproduce h_fragment") {
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::laplace(2, 0.1),
                                            {0.2, 0.2});
  const auto s = add_noise(sample(uniform_box(Box::unit(2)), 20, 1), NoiseModel::laplace(2, 0.1), 2);
  std::mt19937_64 rng(8);
  const auto b = random_fragment(rng, 5);
  const auto w = bin_windows(s, 5, k);
  const auto h = level_windows(s, b.levels(), k);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 5; ++j) acc += w(i, j) * h(i, j);
    CHECK(acc == doctest::Approx(h_fragment(s.point(i), b, k)).epsilon(1e-12));
  }
}

TEST_CASE("empirical risk") {
  const auto u = uniform_box(Box::unit(2));
  const NoiseModel noise = NoiseModel::laplace(2, 0.1);
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, noise, {0.2, 0.2});
  const auto z1 = add_noise(sample(u, 1, 3), noise, 4);
  const auto z2 = add_noise(sample(u, 1, 5, 2), noise, 6);
  const auto b = BoundaryFragment::constant(4, 0.6);
  const auto r = empirical_risk(z1, z2, b, k);
  CHECK(r.value == doctest::Approx(0.5 * (h_complement(z1.point(0), b, k) +
                                          h_fragment(z2.point(0), b, k))));

  // Free-noise reduction.
  const auto kd = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::dirac(2),
                                             {1e-3, 1e-3});
  SplitBoundary sb;
  sb.offset = 0.4;
  const auto x1 = add_noise(sample(boundary_split(sb, 0.5, SplitRole::first), 100, 7),
                            NoiseModel::dirac(2), 0);
  const auto x2 = add_noise(sample(boundary_split(sb, 0.5, SplitRole::second), 100, 8, 2),
                            NoiseModel::dirac(2), 0);
  std::mt19937_64 rng(9);
  const auto rb = random_fragment(rng, 8);
  CHECK(std::abs(empirical_risk(x1, x2, rb, kd).value - counting_risk(x1, x2, rb)) < 2e-3);

  Sample empty;
  CHECK_THROWS_AS(empirical_risk(empty, z2, b, k), InputError);
  const auto clean = sample(u, 5, 1);
  CHECK_THROWS_AS(empirical_risk(clean, clean, b, k), StateError);
  DeconvolutionKernel unbuilt;
  CHECK_THROWS_AS(empirical_risk(z1, z2, b, unbuilt), StateError);
}

TEST_CASE("smoothed risk") {
  SplitBoundary sb;
  sb.offset = 0.4;
  sb.amplitude = 0.05;
  const auto f = boundary_split(sb, 0.5, SplitRole::first);
  const auto g = boundary_split(sb, 0.5, SplitRole::second);
  std::mt19937_64 rng(10);
  const auto b = random_fragment(rng, 8);
  const auto k0 = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::dirac(2),
                                             {1e-3, 1e-3});
  CHECK(std::abs(smoothed_risk(f, g, b, k0) - bayes_risk(f, g, b)) < 1e-3);

  // bias(K) + bias(empty) = 1 - (1/2) int (f + g) K_l * 1_K, which for
  // f = g = uniform is 1 - prod_i int_{-1}^{1} (1 - |u|) (1/l) K(u/l) du.
  const auto u = uniform_box(Box::unit(2));
  const double l = 0.05;
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::dirac(2), {l, l});
  const double coord =
      2.0 * integrate_1d([&](double x) { return (1.0 - x) * base_kernel_value(KernelProfile::flat_top, x / l) / l; },
                         0.0, 1.0)
                .value;
  const double leak = 1.0 - coord * coord;
  const double sum = bias(u, u, BoundaryFragment::constant(4, 1.0), k) +
                     bias(u, u, BoundaryFragment::constant(4, 0.0), k);
  CHECK(sum == doctest::Approx(leak).epsilon(1e-3));
}
