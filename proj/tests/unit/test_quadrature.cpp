#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "deconv_erm/common.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/quadrature.hpp"

using namespace deconv_erm;

TEST_CASE("integrate_1d on smooth and broken integrands") {
  const auto r = integrate_1d([](double x) { return std::exp(x); }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));

  auto step = [](double x) { return x < 0.3 ? 1.0 : 2.0; };
  const std::vector<double> br{0.3};
  CHECK(integrate_1d(step, 0.0, 1.0, br).value == doctest::Approx(1.7).epsilon(1e-13));

  const double inf = std::numeric_limits<double>::infinity();
  const auto g = integrate_1d([](double x) { return std::exp(-x * x); }, -inf, inf);
  CHECK(g.value == doctest::Approx(std::sqrt(kPi)).epsilon(1e-10));
}

TEST_CASE("error estimate is absolute on narrow pieces") {
  // A linear piece of width 1e-12 next to a jump must not be reported as divergent.
  auto f = [](double x) { return x <= 0.5 ? 3.0 : 1.0 + (0.5 + 1e-12 - x); };
  const std::vector<double> br{0.5, 0.5 + 1e-12};
  const auto r = integrate_1d(f, 0.0, 1.0, br);
  CHECK(r.value == doctest::Approx(1.5 + 0.5 - 0.125).epsilon(1e-10));
  CHECK(r.error < 1e-10);
}

TEST_CASE("integrate_2d over a triangle via breaks") {
  // Area below x2 = x1 on the unit square, integrand x1 + x2.
  auto f = [](double a, double b) { return b <= a ? a + b : 0.0; };
  const auto r = integrate_2d(f, 0.0, 1.0, 0.0, 1.0, {},
                              [](double x1) { return std::vector<double>{x1}; });
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("split_points frames and deduplicates") {
  const std::vector<double> br{0.5, -1.0, 0.25, 0.5, 2.0};
  const auto p = split_points(0.0, 1.0, br);
  REQUIRE(p.size() == 4);
  CHECK(p[1] == 0.25);
  CHECK(p[2] == 0.5);
}

TEST_CASE("pairwise_sum and seeds") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
}
