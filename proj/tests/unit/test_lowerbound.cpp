#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "deconv_erm/common.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/lowerbound.hpp"
#include "deconv_erm/quadrature.hpp"

using namespace deconv_erm;

namespace {

std::vector<double> periodic_breaks(double lo, double hi, double period) {
  std::vector<double> br;
  for (double x = lo; x < hi; x += period) br.push_back(x);
  return br;
}

}  // namespace

TEST_CASE("bumps and boundaries") {
  const HypothesisFamily fam(FamilyParams{});
  const int M = fam.M();
  const double h = std::pow(static_cast<double>(M), -2.0);
  CHECK(fam.height() == doctest::Approx(h));
  for (int j = 1; j <= M; ++j) {
    const double c = (2.0 * j - 1.0) / M;
    CHECK(fam.phi_j(j, c) == doctest::Approx(h));
    CHECK(fam.phi_j(j, c + 1.0 / M) == 0.0);
  }
  CHECK_THROWS_AS(fam.phi_j(0, 0.1), InputError);
  CHECK_THROWS_AS(fam.phi_j(M + 1, 0.1), InputError);

  const std::vector<int> zero(M, 0), ones(M, 1);
  for (double t : {0.0, 0.1, 0.37, 0.99}) CHECK(fam.boundary(t, zero) == 0.5);
  CHECK(fam.boundary(3.0 / M, ones) == doctest::Approx(0.5 + h));
  CHECK_THROWS_AS(fam.boundary(0.2, std::vector<int>(3, 1)), InputError);

  // Hoelder with L = tau sup|bump''| (gamma = 2), sup from finite differences.
  double sup2 = 0.0;
  for (int i = -4000; i <= 4000; ++i) {
    const double t = i / 4000.0, e = 1e-4;
    sup2 = std::max(sup2, std::abs(bump(t + e) - 2.0 * bump(t) + bump(t - e)) / (e * e));
  }
  const auto frag = BoundaryFragment::from_function(
      1024, [&](double t) { return fam.boundary_all(t); }, 2.0, 1.01 * sup2);
  CHECK(holder_check(frag));
}

TEST_CASE("Fejer kernel and its transform") {
  CHECK(fejer(0.0) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
  CHECK(fejer(5e-5) == doctest::Approx((1.0 - std::cos(5e-5)) / (kPi * 2.5e-9)).epsilon(1e-6));
  // int fejer(x) cos(tx) dx = (1 - |t|)_+ on a wide window; the tail
  // beyond W is at most 4 / (pi W).
  const double W = 4000.0;
  const auto br = periodic_breaks(0.0, W, 2.0 * kPi);
  double worst = 0.0;
  for (double t : {0.0, 0.25, 0.5, 0.9, 1.5}) {
    const double v =
        2.0 * integrate_1d([&](double x) { return fejer(x) * std::cos(t * x); }, 0.0, W, br).value;
    worst = std::max(worst, std::abs(v - std::max(0.0, 1.0 - std::abs(t))));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("rho profiles") {
  const HypothesisFamily fam(FamilyParams{});
  // int rho_(2) = 0 over a window of +-1e4 scales; the tail beyond W scales
  // is bounded by 2 * (4 a / (pi W)) * 2 a.
  const double a = fam.rho2_scale(), c = fam.rho2_centre();
  const double W = 1e4 * a;
  const auto br = periodic_breaks(c - W, c + W, kPi * a);
  const double I = integrate_1d([&](double x) { return fam.rho2(x); }, c - W, c + W, br).value;
  CHECK(std::abs(I) < 1e-6);

  // rho_(2) >= 9 / (4 pi^3) between 1/2 and the top of the bumps.
  for (int i = 0; i <= 1000; ++i) {
    const double x2 = 0.5 + fam.height() * i / 1000.0;
    CHECK(fam.rho2(x2) >= 9.0 / (4.0 * kPi * kPi * kPi));
  }

  // Closed-form transforms against quadrature.
  const auto br2 = periodic_breaks(c - 400.0 * a, c + 400.0 * a, kPi * a);
  for (double t : {0.3 / a, 0.9 / a, 1.2 / a}) {
    const double re = integrate_1d([&](double x) { return fam.rho2(x) * std::cos(t * x); },
                                   c - 400.0 * a, c + 400.0 * a, br2)
                          .value;
    const double im = integrate_1d([&](double x) { return fam.rho2(x) * std::sin(t * x); },
                                   c - 400.0 * a, c + 400.0 * a, br2)
                          .value;
    const auto F = fam.rho2_fourier(t);
    CHECK(std::abs(re - F.real()) < 2e-3 * a);
    CHECK(std::abs(im - F.imag()) < 2e-3 * a);
  }
}

TEST_CASE("normalisation and positivity") {
  const HypothesisFamily fam(FamilyParams{});
  std::vector<double> outer;
  for (int k = 0; 2 * k <= fam.M(); ++k) outer.push_back(2.0 * k / fam.M());
  const auto f0 = integrate_2d([&](double a, double b) { return fam.f0(a, b); }, 0.0, 1.0, 0.0,
                               1.0, outer,
                               [&](double x1) { return std::vector<double>{0.5, fam.boundary_all(x1)}; });
  CHECK(f0.value == doctest::Approx(0.75).epsilon(1e-8));

  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> edges{0.0, 1.0};
  const auto f1 = integrate_2d([&](double a, double b) { return fam.f1(a, b); }, -inf, inf, -inf,
                               inf, edges, [&](double) { return edges; });
  CHECK(f1.value == doctest::Approx(0.25).epsilon(1e-7));

  // f_lower bounds every member from below and is non-negative.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  std::bernoulli_distribution coin;
  double lowest = inf;
  for (int i = 0; i < 20000; ++i) {
    const double x1 = u(rng), x2 = u(rng);
    std::vector<int> w(fam.M());
    for (auto& v : w) v = coin(rng);
    CHECK(fam.f_omega(x1, x2, w) >= fam.f_lower(x1, x2) - 1e-15);
    lowest = std::min(lowest, fam.f_lower(x1, x2));
  }
  CHECK(lowest >= 0.0);

  FamilyParams bad;
  bad.eta0 = 0.3;
  CHECK_THROWS_AS(HypothesisFamily{bad}, ConfigError);
}

TEST_CASE("member sampling follows the density") {
  const HypothesisFamily fam(FamilyParams{});
  const std::vector<int> ones(fam.M(), 1);
  const auto f = fam.member(ones);
  const std::size_t n = 20000;
  const auto s = sample(f, n, 5);
  double inside = 0.0, low = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = s.coord(i, 0), x2 = s.coord(i, 1);
    const bool box = x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0;
    inside += box;
    low += box && x2 <= 0.5;
  }
  // P(box) = 3/4; P(x2 <= 1/2 in the box) = (1 + 2 eta0) / 2 since the
  // rho terms integrate to zero in x2 over the whole line only.
  const double p = inside / n;
  CHECK(std::abs(p - 0.75) < 4.0 * std::sqrt(0.75 * 0.25 / n));
  const double se = std::sqrt(0.6 * 0.4 / n);
  const std::vector<double> br{0.5};
  double expect = 0.0;
  {
    std::vector<double> outer;
    for (int k = 0; 2 * k <= fam.M(); ++k) outer.push_back(2.0 * k / fam.M());
    expect = integrate_2d([&](double a, double b) { return fam.f_omega(a, b, ones); }, 0.0, 1.0,
                          0.0, 0.5, outer, {})
                 .value;
  }
  CHECK(std::abs(low / n - expect) < 4.0 * se);
}

TEST_CASE("chi2 with dirac noise against space-domain quadrature") {
  const HypothesisFamily fam(FamilyParams{});
  const int M = fam.M(), j = 2;
  std::vector<int> e(M, 0), zero(M, 0);
  e[j - 1] = 1;
  const double a1 = fam.rho1_scale(), a2 = fam.rho2_scale();
  const double c1 = fam.rho1_centre(j), c2 = fam.rho2_centre();
  const double R1 = 30.0 * a1, R2 = 150.0 * a2;
  auto ratio = [&](double x1, double x2) {
    const double d = fam.f_omega(x1, x2, e) - fam.f_omega(x1, x2, zero);
    return d * d / fam.f_omega(x1, x2, e);
  };
  std::vector<double> outer = periodic_breaks(c1 - R1, c1 + R1, kPi * a1);
  for (int k = 0; 2 * k <= M; ++k) outer.push_back(2.0 * k / M);
  auto inner = [&](double x1) {
    auto br = periodic_breaks(c2 - R2, c2 + R2, kPi * a2);
    br.push_back(0.0);
    br.push_back(0.5);
    br.push_back(1.0);
    if (x1 >= 0.0 && x1 <= 1.0) br.push_back(fam.boundary_all(x1));
    return br;
  };
  QuadratureOptions opt;
  opt.rel_tol = 1e-4;
  const double direct =
      integrate_2d(ratio, c1 - R1, c1 + R1, c2 - R2, c2 + R2, outer, inner, opt).value;
  const auto r = chi2(fam, j, NoiseModel::dirac(2));
  CHECK(r.value == doctest::Approx(direct).epsilon(0.05));
  CHECK(r.denominator_min > 0.0);
}

TEST_CASE("chi2 decreases with M under Laplace noise") {
  const NoiseModel noise = NoiseModel::laplace(2, 1.0);
  Chi2Options opt;
  opt.reach = 32.0;
  opt.band_panels = 16;
  opt.table = 33;
  double prev = std::numeric_limits<double>::infinity();
  for (int M : {4, 8}) {
    FamilyParams p;
    p.M = M;
    const auto r = chi2(HypothesisFamily(p), 1, noise, opt);
    CHECK(r.value > 0.0);
    CHECK(r.value < prev);
    prev = r.value;
  }
  CHECK_THROWS_AS(chi2(HypothesisFamily(FamilyParams{}), 1,
                       NoiseModel({CoordinateNoise{}, CoordinateNoise{NoiseFamily::laplace, 1.0, 1.0}})),
                  InputError);
}

TEST_CASE("rate exponents") {
  const std::vector<double> one{1.0, 1.0}, none{0.0, 0.0};
  CHECK(rate_exponent(RateKind::lower_tau, Metric::d_delta, 1.0, one, 1.0, 2) ==
        doctest::Approx(1.0 / 8.0));
  CHECK(rate_exponent(RateKind::upper_kappa, Metric::d_fg, 1.0, one, 1.0, 2) ==
        doctest::Approx(1.0 / 6.0));
  for (double alpha : {0.5, 1.0, 3.0}) {
    for (double gamma : {1.5, 2.0}) {
      CHECK(rate_exponent(RateKind::upper_kappa, Metric::d_fg, alpha, none, gamma, 2) ==
            doctest::Approx(gamma * (alpha + 1.0) / (gamma * (alpha + 2.0) + alpha)));
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(rate_exponent(RateKind::upper_kappa, Metric::d_fg, inf, none, 2.0, 2) ==
        doctest::Approx(rate_exponent(RateKind::upper_kappa, Metric::d_fg, 1e9, none, 2.0, 2)));
  const auto [x, y] = chi2_exponents(1.0, 2.0, 2.0, 4.0);
  CHECK(x == doctest::Approx(23.0));
  CHECK(y == doctest::Approx(27.0));
}
