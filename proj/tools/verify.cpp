#include "verify.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/erm.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/lowerbound.hpp"
#include "deconv_erm/quadrature.hpp"
#include "deconv_erm/rate_fit.hpp"
#include "deconv_erm/risk.hpp"

namespace deconv_erm::cli {

namespace {

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

// Exhaustive minimiser over admissible paths, for small networks.
double brute_force(const CostMatrix& c, const CandidateNetwork& net, std::vector<int>& best) {
  const int J = static_cast<int>(net.bins()), V = static_cast<int>(net.levels());
  std::vector<int> path(static_cast<std::size_t>(J), 0);
  double best_value = INFINITY;
  for (;;) {
    if (net.admissible(path)) {
      const double v = path_cost(c, path);
      if (v < best_value) {
        best_value = v;
        best = path;
      }
    }
    int k = J - 1;
    while (k >= 0 && ++path[static_cast<std::size_t>(k)] == V) path[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return best_value;
}

}  // namespace

int run_verify(const ExperimentConfig& cfg, std::ostream& os) {
  const DensityModel f = cfg.first(), g = cfg.second();
  std::vector<Check> checks;

  checks.push_back({"kernel: flat-top K(0) = 3/(2 pi), unit mass", [](std::string& msg) {
                      const auto k = DeconvolutionKernel::build(KernelProfile::flat_top,
                                                                NoiseModel::dirac(2), {0.1, 0.1});
                      const auto& t = k.table(0);
                      const double k0 = t.values()[t.size() / 2];
                      const double mass = t.cumulative(t.half_width()) - t.cumulative(-t.half_width());
                      msg = "K(0) = " + std::to_string(k0) + ", mass = " + std::to_string(mass);
                      return std::abs(k0 - 3.0 / (2.0 * kPi)) < 1e-9 && std::abs(mass - 1.0) < 1e-5;
                    }});
  checks.push_back({"kernel: F[K_eta](t) phi_eta(t/lambda) = F[K](t)", [](std::string& msg) {
                      const double lam = 0.2, s = 0.25;
                      const auto noise = NoiseModel::laplace(2, s);
                      const auto k = DeconvolutionKernel::build(KernelProfile::flat_top, noise, {lam, lam});
                      double worst = 0.0;
                      for (double t : {0.0, 0.5, 1.2, 1.7}) {
                        const double lhs = k.fourier(0, t) * noise.coordinate(0).cf(t / lam);
                        worst = std::max(worst, std::abs(lhs - profile_value(KernelProfile::flat_top, t)));
                      }
                      msg = "max deviation " + std::to_string(worst);
                      return worst < 1e-12;
                    }});
  checks.push_back({"fragments: Bayes set of the configured model", [&](std::string& msg) {
                      const auto b = bayes_set(f, g, 16, cfg.gamma, cfg.holder_constant);
                      double worst = 0.0;
                      for (std::size_t j = 0; j < b.bins(); ++j) {
                        const double x1 = (static_cast<double>(j) + 0.5) / 16.0;
                        worst = std::max(worst, std::abs(b.level(j) - cfg.boundary(x1)));
                      }
                      msg = "max level error " + std::to_string(worst);
                      return worst < 1e-6;
                    }});
  checks.push_back({"fragments: excess of the Bayes fragment is small", [&](std::string& msg) {
                      const auto b = BoundaryFragment::from_function(
                          64, [&](double x) { return cfg.boundary(x); }, cfg.gamma, cfg.holder_constant);
                      const double e = excess_d_fg(f, g, b);
                      msg = "excess d_fg " + std::to_string(e);
                      return e >= -1e-9 && e < 1e-2;
                    }});
  checks.push_back({"risk: dirac deconvolution risk = counting risk", [&](std::string& msg) {
                      const auto k = DeconvolutionKernel::build(cfg.profile, NoiseModel::dirac(2), {1e-3, 1e-3});
                      const Sample s1 = add_noise(sample(f, 100, 11), NoiseModel::dirac(2), 12);
                      const Sample s2 = add_noise(sample(g, 100, 13), NoiseModel::dirac(2), 14);
                      const auto b = BoundaryFragment::constant(8, 0.4);
                      const double d = std::abs(empirical_risk(s1, s2, b, k).value - counting_risk(s1, s2, b));
                      msg = "difference " + std::to_string(d);
                      return d < 2e-3;
                    }});
  checks.push_back({"erm: dynamic programme equals enumeration", [](std::string& msg) {
                      Rng rng(7);
                      int bad = 0;
                      for (int trial = 0; trial < 40; ++trial) {
                        const std::size_t J = 2 + trial % 4, V = 2 + trial % 3;
                        CandidateNetwork net(J, V, 2.0, 1.0 + trial % 5);
                        CostMatrix c;
                        c.cost.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(V));
                        for (Eigen::Index a = 0; a < c.cost.rows(); ++a) {
                          for (Eigen::Index b = 0; b < c.cost.cols(); ++b) c.cost(a, b) = rng.uniform(-1.0, 1.0);
                        }
                        std::vector<int> best;
                        const double bf = brute_force(c, net, best);
                        const auto dp = minimize_costs(c, net);
                        if (dp.path != best || path_cost(c, dp.path) != bf) ++bad;
                      }
                      msg = std::to_string(bad) + " mismatches";
                      return bad == 0;
                    }});
  checks.push_back({"lowerbound: exponent formulas", [](std::string& msg) {
                      const double beta[] = {1.0, 1.0};
                      const double t = rate_exponent(RateKind::lower_tau, Metric::d_delta, 1.0, beta, 1.0, 2);
                      const double k = rate_exponent(RateKind::upper_kappa, Metric::d_fg, 1.0, beta, 1.0, 2);
                      msg = "tau = " + std::to_string(t) + ", kappa = " + std::to_string(k);
                      return std::abs(t - 0.125) < 1e-15 && std::abs(k - 1.0 / 6.0) < 1e-15;
                    }});
  checks.push_back({"lowerbound: int f_0 = 3/4", [](std::string& msg) {
                      const HypothesisFamily fam(FamilyParams{});
                      std::vector<double> outer;
                      for (int k = 0; 2 * k <= fam.M(); ++k) outer.push_back(2.0 * k / fam.M());
                      const double v =
                          integrate_2d([&](double a, double b) { return fam.f0(a, b); }, 0.0, 1.0, 0.0, 1.0,
                                       outer,
                                       [&](double x1) { return std::vector<double>{0.5, fam.boundary_all(x1)}; })
                              .value;
                      msg = "integral " + std::to_string(v);
                      return std::abs(v - 0.75) < 1e-6;
                    }});
  checks.push_back({"experiments: exact power law gives the exponent", [](std::string& msg) {
                      std::vector<RatePoint> pts;
                      for (double n : {100.0, 200.0, 400.0, 800.0}) pts.push_back({n, std::pow(n, -1.0 / 3.0), 0.0, 1});
                      const auto fit = fit_points(pts);
                      msg = "slope " + std::to_string(fit.slope);
                      return std::abs(fit.slope + 1.0 / 3.0) < 1e-12;
                    }});
  checks.push_back({"experiments: trials are deterministic", [&](std::string& msg) {
                      const TrialRunner runner(cfg);
                      const auto a = runner.run(200, 200, 99);
                      const auto b = runner.run(200, 200, 99);
                      msg = "excess " + std::to_string(a.deconv.excess_dfg);
                      return a.deconv.excess_dfg == b.deconv.excess_dfg &&
                             a.naive.excess_dfg == b.naive.excess_dfg && a.deconv.excess_dfg >= -1e-9;
                    }});

  int failures = 0;
  for (auto& c : checks) {
    std::string msg;
    bool ok = false;
    try {
      ok = c.run(msg);
    } catch (const std::exception& e) {
      msg = std::string("threw: ") + e.what();
    }
    failures += ok ? 0 : 1;
    os << (ok ? "PASS " : "FAIL ") << c.name << " (" << msg << ")\n";
  }
  return failures;
}

}  // namespace deconv_erm::cli
