#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/erm.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/risk.hpp"

using namespace deconv_erm;

namespace {

// Minimum of path_cost over all admissible paths, first minimiser in
// lexicographic order.
std::pair<std::vector<int>, double> enumerate(const CostMatrix& c, const CandidateNetwork& net) {
  const int J = static_cast<int>(net.bins()), V = static_cast<int>(net.levels());
  std::vector<int> p(J, 0), best;
  double best_v = std::numeric_limits<double>::infinity();
  std::function<void(int)> rec = [&](int j) {
    if (j == J) {
      if (!net.admissible(p)) return;
      const double v = path_cost(c, p);
      if (v < best_v) {
        best_v = v;
        best = p;
      }
      return;
    }
    for (int v = 0; v < V; ++v) {
      p[j] = v;
      rec(j + 1);
    }
  };
  rec(0);
  return {best, best_v};
}

}  // namespace

TEST_CASE("network budgets") {
  // h = 1/8, step = 1/16: L h / step = 2 L, L h^2 / step = L / 4.
  const CandidateNetwork net(8, 17, 2.0, 2.0);
  CHECK(net.first_bound() == 5);
  CHECK(net.second_bound() == 2);
  CHECK(net.admissible({0, 5, 10, 14, 16, 16, 16, 16}));
  CHECK_FALSE(net.admissible({0, 6, 12, 16, 16, 16, 16, 16}));
  CHECK_FALSE(net.admissible({0, 0, 3, 3, 3, 3, 3, 3}));
  CHECK_FALSE(net.admissible({0, 0, 0}));
  CHECK(CandidateNetwork(2, 3, 2.0, 100.0).unconstrained());
  CHECK_THROWS_AS(CandidateNetwork(4, 1, 2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(CandidateNetwork(4, 0, 2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(CandidateNetwork(4, 5, 1.0, 1.0), UnsupportedRegimeError);
}

TEST_CASE("cost matrix reproduces the empirical risk") {
  const NoiseModel noise = NoiseModel::laplace(2, 0.1);
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, noise, {0.25, 0.25});
  const auto u = uniform_box(Box::unit(2));
  const CandidateNetwork net(2, 2, 2.0, 100.0);
  for (std::size_t n : {1, 30}) {
    const auto z1 = add_noise(sample(u, n, 1), noise, 2);
    const auto z2 = add_noise(sample(u, n + 3, 3, 2), noise, 4);
    const auto c = per_bin_costs(z1, z2, k, net);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const std::vector<int> p{a, b};
        CHECK(path_cost(c, p) + c.constant ==
              doctest::Approx(empirical_risk(z1, z2, net.fragment(p), k).value).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("counting costs reproduce the counting risk") {
  const auto u = uniform_box(Box::unit(2));
  const auto x1 = add_noise(sample(u, 40, 1), NoiseModel::laplace(2, 0.2), 5);
  const auto x2 = add_noise(sample(u, 50, 2, 2), NoiseModel::laplace(2, 0.2), 6);
  const CandidateNetwork net(3, 4, 2.0, 100.0);
  const auto c = counting_costs(x1, x2, net);
  for (const std::vector<int>& p : {std::vector<int>{0, 1, 3}, {3, 3, 3}, {2, 0, 1}}) {
    CHECK(path_cost(c, p) + c.constant ==
          doctest::Approx(counting_risk(x1, x2, net.fragment(p))).epsilon(1e-12));
  }
}

TEST_CASE("dynamic programme equals enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dj(1, 6), dv(2, 5), db(0, 4);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 100; ++rep) {
    const auto J = static_cast<std::size_t>(dj(rng)), V = static_cast<std::size_t>(dv(rng));
    CandidateNetwork net(J, V, 2.0, 1.0);
    net.set_bounds(db(rng), db(rng));
    CostMatrix c;
    c.cost.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(V));
    for (Eigen::Index i = 0; i < c.cost.size(); ++i) c.cost.data()[i] = g(rng);
    const auto [best, value] = enumerate(c, net);
    const auto dp = minimize_costs(c, net);
    CHECK(dp.path == best);
    CHECK(dp.value == value);
  }
}

TEST_CASE("dirac kernel ERM agrees with the counting ERM") {
  SplitBoundary sb;
  sb.offset = 0.4;
  const auto f = boundary_split(sb, 0.5, SplitRole::first);
  const auto g = boundary_split(sb, 0.5, SplitRole::second);
  const auto x1 = add_noise(sample(f, 300, 1), NoiseModel::dirac(2), 0);
  const auto x2 = add_noise(sample(g, 300, 2, 2), NoiseModel::dirac(2), 0);
  const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, NoiseModel::dirac(2),
                                            {1e-5, 1e-5});
  const CandidateNetwork net(8, 33, 2.0, 4.0);
  const auto a = minimize(x1, x2, k, net);
  const auto b = naive_minimize(x1, x2, net);
  CHECK(counting_risk(x1, x2, a.boundary) == doctest::Approx(b.risk.value));
}
