#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/rate_fit.hpp"

using namespace deconv_erm;

namespace {

std::vector<RatePoint> power_law(double slope, double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, noise);
  std::vector<RatePoint> pts;
  for (double n : {250.0, 500.0, 1000.0, 2000.0, 4000.0}) {
    pts.push_back({n, std::pow(n, slope) * std::exp(g(rng)), 0.0, 1});
  }
  return pts;
}

}  // namespace

TEST_CASE("exact power law") {
  std::mt19937_64 rng(1);
  const auto fit = fit_points(power_law(-1.0 / 3.0, 0.0, rng));
  CHECK(std::abs(fit.slope + 1.0 / 3.0) < 1e-12);
  CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("slope standard error is calibrated") {
  // Five points and two parameters: (slope - truth) / stderr is Student t
  // with 3 degrees of freedom, and P(|t_3| <= 1) = 0.6090.
  std::mt19937_64 rng(7);
  const int reps = 400;
  int inside = 0;
  for (int r = 0; r < reps; ++r) {
    const auto fit = fit_points(power_law(-0.5, 0.1, rng));
    inside += std::abs(fit.slope + 0.5) <= fit.stderr_slope;
  }
  const double p = static_cast<double>(inside) / reps;
  CHECK(std::abs(p - 0.6090) < 3.0 * std::sqrt(0.609 * 0.391 / reps));
}

TEST_CASE("degenerate inputs") {
  std::mt19937_64 rng(1);
  auto pts = power_law(-0.5, 0.0, rng);
  pts.resize(2);
  CHECK_THROWS_AS(fit_points(pts), NumericError);
  auto zero = power_law(-0.5, 0.0, rng);
  zero[1].mean = 0.0;
  CHECK_THROWS_AS(fit_points(zero), NumericError);
}

TEST_CASE("records round trip and grouping") {
  std::vector<TrialRecord> recs;
  for (std::size_t n : {100, 200, 400}) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const double v = std::pow(static_cast<double>(n), -0.5) * (1.0 + 0.1 * (s - 1.0));
      recs.push_back({n, n, 0.1, 0.2, s, "deconv", v, 2.0 * v, 1.5});
      recs.push_back({n, n, 0.1, 0.2, s, "naive", 3.0 * v, v, 0.5});
    }
  }
  std::stringstream ss;
  write_records_csv(ss, recs);
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == recs.size());
  CHECK(back[4].excess_dfg == recs[4].excess_dfg);
  CHECK(back[5].estimator == "naive");

  const auto fit = fit_rate(back, "deconv");
  REQUIRE(fit.points.size() == 3);
  CHECK(fit.points[0].count == 3);
  CHECK(fit.points[0].mean == doctest::Approx(0.1));
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit_rate(back, "naive", ExcessMetric::d_delta).slope == doctest::Approx(-0.5));
  CHECK_THROWS_AS(fit_rate(back, "deconv", ExcessMetric::d_fg, 4), NumericError);

  std::stringstream bad("n,m,oops\n1,2,3\n");
  CHECK_THROWS_AS(read_records_csv(bad), InputError);
  std::stringstream row(std::string(kRecordHeader) + "\n1,2,x,4,5,deconv,1,1,1\n");
  CHECK_THROWS_AS(read_records_csv(row), InputError);
}
