#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/experiments.hpp"
#include "deconv_erm/rate_fit.hpp"

using namespace deconv_erm;

namespace {

const std::string kDir = DECONV_ERM_CONFIG_DIR;

ExperimentConfig small_config() {
  ExperimentConfig cfg = parse_config(R"({
    "name": "small",
    "model": {"boundary": {"offset": 0.375}, "amplitude": 0.5},
    "noise": {"family": "laplace", "scale": 0.25},
    "class": {"gamma": 2.0, "L": 4.0, "alpha": "inf", "J": 8, "V": 65},
    "bandwidth": {"c": [2.0, 0.25]},
    "ladder": [100, 200, 400],
    "replications": 2,
    "seed": 5
  })");
  return cfg;
}

bool same_except_runtime(const TrialRecord& a, const TrialRecord& b) {
  return a.n == b.n && a.m == b.m && a.lambda1 == b.lambda1 && a.lambda2 == b.lambda2 &&
         a.seed == b.seed && a.estimator == b.estimator && a.excess_dfg == b.excess_dfg &&
         a.excess_ddelta == b.excess_ddelta;
}

}  // namespace

TEST_CASE("shipped configs load") {
  const auto cfg = load_config(kDir + "/default.json");
  CHECK(std::isinf(cfg.alpha));
  CHECK(cfg.J == 32);
  // e_i = 1 / (2 beta_i + 2 gamma + 2) with beta = 2, gamma = 2.
  const auto e = cfg.exponents();
  CHECK(e[0] == doctest::Approx(0.1));
  const auto l = cfg.lambda(1000, 2000);
  CHECK(l[0] == doctest::Approx(2.0 * std::pow(1000.0, -0.1)));
  CHECK(l[1] == doctest::Approx(0.25 * std::pow(1000.0, -0.1)));
  CHECK(cfg.m_for(1000) == 1000);
  CHECK(expected_exponent(cfg, Expectation::kappa) == doctest::Approx(2.0 / 19.0));
  CHECK(expected_exponent(cfg, Expectation::free) == doctest::Approx(2.0 / 3.0));

  const auto free = load_config(kDir + "/rates_free.json");
  CHECK(free.noise.is_dirac());
  CHECK(free.lambda(4000, 4000)[0] == doctest::Approx(1e-3));
  CHECK(free.replications == 100);
  load_config(kDir + "/rates_laplace.json");

  const auto lb = load_lowerbound_config(kDir + "/lowerbound.json");
  CHECK(lb.sizes == std::vector<int>{4, 8, 16, 32});
  CHECK(lb.noise.beta() == std::vector<double>{2.0, 4.0});
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"ladder": [500, 250, 1000]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replications": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "cauchy"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"class": {"gamma": 3.0}})"), std::exception);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.json"), ConfigError);
  CHECK_THROWS_AS(parse_lowerbound_config(R"({"sizes": [1]})"), ConfigError);
}

TEST_CASE("free-noise trial smoke bound") {
  auto cfg = load_config(kDir + "/rates_free.json");
  const auto pair = run_trial(cfg, 2000, 2000, trial_seed(cfg.seed, 2000, 0));
  CHECK(pair.deconv.estimator == "deconv");
  CHECK(pair.naive.estimator == "naive");
  CHECK(pair.deconv.excess_dfg < 0.05);
  CHECK(pair.deconv.excess_dfg >= -1e-9);
  CHECK(pair.naive.excess_dfg >= -1e-9);
}

TEST_CASE("trials are deterministic") {
  const auto cfg = small_config();
  const auto a = run_trial(cfg, 200, 200, 77);
  const auto b = run_trial(cfg, 200, 200, 77);
  CHECK(same_except_runtime(a.deconv, b.deconv));
  CHECK(same_except_runtime(a.naive, b.naive));
  CHECK(trial_seed(1, 100, 0) != trial_seed(1, 100, 1));
  CHECK(trial_seed(1, 100, 0) != trial_seed(1, 200, 0));

  const auto one = run_experiment(cfg, 1);
  const auto two = run_experiment(cfg, 2);
  REQUIRE(one.size() == 3 * 2 * 2);
  REQUIRE(two.size() == one.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(same_except_runtime(one[i], two[i]));
  for (std::size_t i = 1; i < one.size(); ++i) CHECK(one[i - 1].n <= one[i].n);
}

TEST_CASE("summary and plot data") {
  const auto cfg = small_config();
  const auto recs = run_experiment(cfg, 1);
  const auto j = nlohmann::json::parse(summary_json(cfg, recs));
  CHECK(j.contains("fits"));
  CHECK(j["expected"]["kappa"].get<double>() == doctest::Approx(2.0 / 19.0));

  std::ostringstream os;
  write_plot_csv(os, recs);
  const std::string s = os.str();
  CHECK(s.rfind("estimator,n,count,mean_dfg,se_dfg,mean_ddelta,se_ddelta\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 2 * 3);

  std::stringstream csv;
  write_records_csv(csv, recs);
  CHECK(csv.str().rfind(std::string(kRecordHeader) + "\n", 0) == 0);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK_THROWS_AS(resolve_workers(-1), ConfigError);
  ::setenv("DECONV_ERM_WORKERS", "5", 1);
  CHECK(resolve_workers(std::nullopt) == 5);
  ::setenv("DECONV_ERM_WORKERS", "five", 1);
  CHECK_THROWS_AS(resolve_workers(std::nullopt), ConfigError);
  ::unsetenv("DECONV_ERM_WORKERS");
  CHECK(resolve_workers(std::nullopt) == 1);
}
