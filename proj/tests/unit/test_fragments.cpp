#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "deconv_erm/densities.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/lowerbound.hpp"
#include "deconv_erm/quadrature.hpp"

using namespace deconv_erm;

namespace {

BoundaryFragment random_fragment(std::mt19937_64& rng, std::size_t J) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> lv(J);
  for (auto& v : lv) v = u(rng);
  return BoundaryFragment(lv, 2.0, 1e6);
}

}  // namespace

TEST_CASE("indicator") {
  const auto half = BoundaryFragment::constant(8, 0.5);
  CHECK(indicator(half, std::vector<double>{0.3, 0.2}) == 1);
  CHECK(indicator(half, std::vector<double>{0.3, 0.9}) == 0);
  CHECK_THROWS_AS(indicator(half, std::vector<double>{1.2, 0.2}), InputError);

  const auto line = BoundaryFragment::from_function(10, [](double x) { return x; });
  // Bin [0.5, 0.6) carries the value at its centre, 0.55.
  CHECK(line.at(0.5) == doctest::Approx(0.55));
  CHECK(indicator(line, std::vector<double>{0.5, 0.49}) == 1);
  CHECK(line.bin_of(1.0) == 9);
}

TEST_CASE("Hoelder check") {
  CHECK(holder_check(BoundaryFragment::constant(16, 0.3, 2.0, 1e-3)));
  const auto line = BoundaryFragment::from_function(16, [](double x) { return x; }, 2.0, 0.5);
  CHECK_FALSE(holder_check(line));
  const double L = 0.1 * 4.0 * kPi * kPi;
  const auto wave = BoundaryFragment::from_function(
      64, [](double x) { return 0.5 + 0.1 * std::sin(2.0 * kPi * x); }, 2.0, L);
  CHECK(holder_check(wave));
  CHECK_THROWS_AS(holder_check(BoundaryFragment::constant(4, 0.5, 1.0, 1.0)),
                  UnsupportedRegimeError);
}

TEST_CASE("symmetric difference measure") {
  const auto a = BoundaryFragment::constant(8, 0.5);
  const auto b = BoundaryFragment::constant(8, 0.7);
  CHECK(d_delta(a, a) == 0.0);
  CHECK(d_delta(a, b) == doctest::Approx(0.2));
  CHECK_THROWS_AS(d_delta(a, BoundaryFragment::constant(4, 0.5)), InputError);

  std::mt19937_64 rng(3);
  const auto r1 = random_fragment(rng, 7), r2 = random_fragment(rng, 7);
  const std::size_t N = 1000;
  double hits = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < N; ++k) {
      const std::vector<double> x{(i + 0.5) / N, (k + 0.5) / N};
      hits += indicator(r1, x) != indicator(r2, x);
    }
  }
  CHECK(d_delta(r1, r2) == doctest::Approx(hits / (N * N)).epsilon(1e-4 / d_delta(r1, r2)));
}

TEST_CASE("refine keeps the set") {
  std::mt19937_64 rng(4);
  const auto r = random_fragment(rng, 5);
  const auto f = refine(r, 3);
  CHECK(f.bins() == 15);
  for (double x : {0.01, 0.33, 0.5, 0.77, 0.99}) CHECK(f.at(x) == r.at(x));
}

TEST_CASE("weighted distance") {
  const auto f = uniform_box(Box::unit(2));
  const auto a = BoundaryFragment::constant(8, 0.3);
  const auto b = BoundaryFragment::constant(8, 0.6);
  CHECK(d_fg(f, f, a, b) == 0.0);
  // g = 1/2 on the unit square: f - g = 1/2 throughout K.
  const auto g = uniform_box(Box{{0.0, 0.0}, {2.0, 1.0}});
  CHECK(d_fg(f, g, a, a) == 0.0);
  CHECK(d_fg(f, g, a, b) == doctest::Approx(0.5 * d_delta(a, b)).epsilon(1e-6));
}

TEST_CASE("Bayes set recovery") {
  const auto u = uniform_box(Box::unit(2));
  const auto tie = bayes_set(u, u, 8);
  for (double v : tie.levels()) CHECK(v == 1.0);

  SplitBoundary sb;
  sb.offset = 0.45;
  sb.amplitude = 0.1;
  sb.frequency = 1.0;
  const auto f = boundary_split(sb, 0.5, SplitRole::first);
  const auto g = boundary_split(sb, 0.5, SplitRole::second);
  const auto bs = bayes_set(f, g, 16);
  for (std::size_t j = 0; j < 16; ++j) {
    const double c = (j + 0.5) / 16.0;
    CHECK(bs.level(j) == doctest::Approx(sb(c)).epsilon(1e-7));
  }
  // Q(G_bs delta G*) = sum_j int_bin |b(x) - b(c_j)| dx.
  double gap = 0.0;
  for (std::size_t j = 0; j < 16; ++j) {
    const double lo = j / 16.0, hi = (j + 1) / 16.0, c = 0.5 * (lo + hi);
    gap += integrate_1d([&](double x) { return std::abs(sb(x) - sb(c)); }, lo, hi,
                        std::vector<double>{c})
               .value;
  }
  CHECK(excess_d_delta(f, g, bs) == doctest::Approx(gap).epsilon(1e-5));

  const HypothesisFamily fam(FamilyParams{});
  const std::vector<int> zero(8, 0);
  const auto lb = bayes_set(fam.member(zero), fam.g0(), 64);
  for (std::size_t j = 0; j < 64; ++j) {
    CHECK(lb.level(j) == doctest::Approx(fam.boundary((j + 0.5) / 64.0, zero)).epsilon(1e-6));
  }
}

TEST_CASE("Bayes risk") {
  const auto u = uniform_box(Box::unit(2));
  std::mt19937_64 rng(5);
  CHECK(bayes_risk(u, u, random_fragment(rng, 6)) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(bayes_risk(u, u, BoundaryFragment::constant(6, 1.0)) == doctest::Approx(0.5));

  SplitBoundary sb;
  sb.offset = 0.4;
  const auto f = boundary_split(sb, 0.5, SplitRole::first);
  const auto g = boundary_split(sb, 0.5, SplitRole::second);
  const auto best = BoundaryFragment::constant(4, 0.4);
  CHECK(bayes_risk_optimal(f, g) == doctest::Approx(bayes_risk(f, g, best)).epsilon(1e-7));
  // Excess risk is half the weighted distance.
  const auto other = BoundaryFragment::constant(4, 0.55);
  CHECK(bayes_risk(f, g, other) - bayes_risk(f, g, best) ==
        doctest::Approx(0.5 * d_fg(f, g, other, best, 1e-8)).epsilon(1e-6));
}

TEST_CASE("margin certificates") {
  SplitBoundary sb;
  sb.offset = 0.4;
  const auto f = boundary_split(sb, 0.5, SplitRole::first);
  const auto g = boundary_split(sb, 0.5, SplitRole::second);
  // |f - g| = min(1, 0.4/0.6) on K.
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(check_margin(f, g, inf, 0.6, 0.0, 256).pass);
  CHECK_FALSE(check_margin(f, g, inf, 0.8, 0.0, 256).pass);

  const HypothesisFamily fam(FamilyParams{});
  const std::vector<int> ones(8, 1);
  const auto c = check_margin(fam.member(ones), fam.g0(), fam.params().alpha,
                              fam.params().eta0, fam.params().c2, 512);
  CHECK(c.pass);

  // Equal on the middle half of every column: the measure stays at 1/2.
  const auto a = custom_grid(Box::unit(2), {1, 4}, {1.5, 1.0, 1.0, 0.5});
  const auto b = custom_grid(Box::unit(2), {1, 4}, {0.5, 1.0, 1.0, 1.5});
  CHECK_FALSE(check_margin(a, b, 2.0, 0.5, 1.0, 256).pass);
}

TEST_CASE("fragment csv") {
  std::ostringstream os;
  write_fragment_csv(os, BoundaryFragment::constant(2, 0.25));
  CHECK(os.str() == "bin,level\n0,0.25\n1,0.25\n");
}
