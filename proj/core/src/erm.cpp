#include "deconv_erm/erm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "deconv_erm/errors.hpp"

namespace deconv_erm {

CandidateNetwork::CandidateNetwork(std::size_t J, std::size_t V, double gamma,
                                   double holder_constant)
    : J_(J), V_(V), gamma_(gamma), L_(holder_constant) {
  if (J == 0) throw ConfigError("network: J must be positive");
  if (V < 2) throw ConfigError("network: at least two levels are required");
  if (!(gamma > 1.0) || gamma > 2.0) {
    throw UnsupportedRegimeError("network: gamma must lie in (1, 2]");
  }
  if (!(holder_constant > 0.0)) throw ConfigError("network: Hoelder constant must be positive");
  step_ = 1.0 / static_cast<double>(V - 1);
  const double h = 1.0 / static_cast<double>(J);
  // Budgets of holder_check with one rounding step per level, in level steps.
  const double first = std::floor(L_ * h / step_ + 1e-9) + 1.0;
  const double second = std::floor(L_ * std::pow(h, gamma_) / step_ + 1e-9) + 2.0;
  const double cap = static_cast<double>(V - 1);
  first_ = static_cast<int>(std::min(first, cap));
  second_ = static_cast<int>(std::min(second, 2.0 * cap));
}

std::vector<double> CandidateNetwork::level_values() const {
  std::vector<double> out(V_);
  for (std::size_t v = 0; v < V_; ++v) out[v] = level(v);
  return out;
}

bool CandidateNetwork::unconstrained() const {
  return first_ >= static_cast<int>(V_) - 1 && second_ >= 2 * (static_cast<int>(V_) - 1);
}

bool CandidateNetwork::admissible(const std::vector<int>& path) const {
  if (path.size() != J_) return false;
  for (int v : path) {
    if (v < 0 || v >= static_cast<int>(V_)) return false;
  }
  for (std::size_t j = 0; j + 1 < J_; ++j) {
    if (std::abs(path[j + 1] - path[j]) > first_) return false;
  }
  for (std::size_t j = 1; j + 1 < J_; ++j) {
    if (std::abs(path[j + 1] - 2 * path[j] + path[j - 1]) > second_) return false;
  }
  return true;
}

BoundaryFragment CandidateNetwork::fragment(const std::vector<int>& path) const {
  if (path.size() != J_) throw InputError("network: path length differs from J");
  std::vector<double> levels(J_);
  for (std::size_t j = 0; j < J_; ++j) levels[j] = level(static_cast<std::size_t>(path[j]));
  return BoundaryFragment(std::move(levels), gamma_, L_, step_);
}

// ---------------------------------------------------------------------------

CostMatrix per_bin_costs(const Sample& s1, const Sample& s2, const DeconvolutionKernel& k,
                         const CandidateNetwork& net) {
  if (s1.empty() || s2.empty()) throw InputError("per_bin_costs: samples must be non-empty");
  if (!k.noise().is_dirac() && (!s1.noisy || !s2.noisy)) {
    throw StateError("per_bin_costs: deconvolution kernel applied to noise-free samples");
  }
  const auto levels = net.level_values();
  const double n = static_cast<double>(s1.size());
  const double m = static_cast<double>(s2.size());
  const Eigen::MatrixXd w1 = bin_windows(s1, net.bins(), k);
  const Eigen::MatrixXd w2 = bin_windows(s2, net.bins(), k);
  const Eigen::MatrixXd h1 = level_windows(s1, levels, k);
  const Eigen::MatrixXd h2 = level_windows(s2, levels, k);
  CostMatrix c;
  c.cost = (w2.transpose() * h2) / (2.0 * m) - (w1.transpose() * h1) / (2.0 * n);
  // h_K(Z1_i) = sum_j W_j H2(., 1); the top level is exactly 1.
  const Eigen::VectorXd hk = w1.rowwise().sum().cwiseProduct(h1.col(h1.cols() - 1));
  std::vector<double> terms(hk.data(), hk.data() + hk.size());
  c.constant = pairwise_sum(terms) / (2.0 * n);
  return c;
}

CostMatrix counting_costs(const Sample& s1, const Sample& s2, const CandidateNetwork& net) {
  if (s1.empty() || s2.empty()) throw InputError("counting_costs: samples must be non-empty");
  const std::size_t J = net.bins(), V = net.levels();
  const auto levels = net.level_values();
  auto tally = [&](const Sample& s, Eigen::MatrixXd& counts) {
    counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(V));
    double inside = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x1 = s.coord(i, 0), x2 = s.coord(i, 1);
      if (!(x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0)) continue;
      inside += 1.0;
      const double pos = x1 * static_cast<double>(J);
      const std::size_t j = std::min(static_cast<std::size_t>(pos), J - 1);
      // Point is in G for every level >= x2.
      const auto first = static_cast<std::size_t>(
          std::lower_bound(levels.begin(), levels.end(), x2) - levels.begin());
      for (std::size_t v = first; v < V; ++v) {
        counts(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) += 1.0;
      }
    }
    return inside;
  };
  Eigen::MatrixXd c1, c2;
  const double inside1 = tally(s1, c1);
  tally(s2, c2);
  const double n = static_cast<double>(s1.size());
  const double m = static_cast<double>(s2.size());
  CostMatrix c;
  c.cost = c2 / (2.0 * m) - c1 / (2.0 * n);
  c.constant = inside1 / (2.0 * n);
  return c;
}

double path_cost(const CostMatrix& c, const std::vector<int>& path) {
  double acc = 0.0;
  for (std::size_t j = path.size(); j-- > 0;) {
    acc = c.cost(static_cast<Eigen::Index>(j), path[j]) + acc;
  }
  return acc;
}

DpResult minimize_costs(const CostMatrix& c, const CandidateNetwork& net) {
  const int J = static_cast<int>(net.bins());
  const int V = static_cast<int>(net.levels());
  if (c.cost.rows() != J || c.cost.cols() != V) {
    throw InputError("minimize: cost matrix does not match the network");
  }
  const int A = net.first_bound();
  const int B = net.second_bound();
  const int D = 2 * A + 1;  // d = cur - prev in [-A, A]
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto cost = [&](int j, int v) { return c.cost(j, v); };

  DpResult r;
  if (J == 1) {
    int best = 0;
    for (int v = 1; v < V; ++v) {
      if (cost(0, v) < cost(0, best)) best = v;
    }
    for (int v = 0; v < V; ++v) r.ties += (v != best && cost(0, v) == cost(0, best));
    r.path = {best};
    r.value = cost(0, best) + c.constant;
    r.visited_states = static_cast<std::size_t>(V);
    return r;
  }

  // F[j](cur, d) for j = J-1 .. 1; choice[j](cur, d) = best next d'.
  auto at = [&](int cur, int d) { return static_cast<std::size_t>(cur) * D + (d + A); };
  std::vector<double> next(static_cast<std::size_t>(V) * D, kInf);
  std::vector<double> here(next.size(), kInf);
  std::vector<std::vector<std::int16_t>> choice(static_cast<std::size_t>(J));
  for (int cur = 0; cur < V; ++cur) {
    for (int d = -A; d <= A; ++d) {
      const int prev = cur - d;
      if (prev < 0 || prev >= V) continue;
      next[at(cur, d)] = cost(J - 1, cur);
    }
  }
  r.visited_states += next.size();
  for (int j = J - 2; j >= 1; --j) {
    auto& ch = choice[static_cast<std::size_t>(j)];
    ch.assign(here.size(), 0);
    std::fill(here.begin(), here.end(), kInf);
    for (int cur = 0; cur < V; ++cur) {
      for (int d = -A; d <= A; ++d) {
        const int prev = cur - d;
        if (prev < 0 || prev >= V) continue;
        double best = kInf;
        int arg = 0;
        bool tie = false;
        const int lo = std::max(-A, d - B), hi = std::min(A, d + B);
        for (int dn = lo; dn <= hi; ++dn) {
          const int nv = cur + dn;
          if (nv < 0 || nv >= V) continue;
          const double f = next[at(nv, dn)];
          if (f < best) {
            best = f;
            arg = dn;
            tie = false;
          } else if (f == best && f < kInf) {
            tie = true;
          }
        }
        if (best < kInf) {
          here[at(cur, d)] = cost(j, cur) + best;
          ch[at(cur, d)] = static_cast<std::int16_t>(arg);
          r.ties += tie;
        }
      }
    }
    r.visited_states += here.size();
    std::swap(here, next);
  }

  // First two bins.
  double best = kInf;
  int b0 = -1, b1 = -1;
  for (int v0 = 0; v0 < V; ++v0) {
    for (int d = -A; d <= A; ++d) {
      const int v1 = v0 + d;
      if (v1 < 0 || v1 >= V) continue;
      const double f = next[at(v1, d)];
      if (!(f < kInf)) continue;
      const double total = cost(0, v0) + f;
      if (total < best) {
        best = total;
        b0 = v0;
        b1 = v1;
      } else if (total == best) {
        ++r.ties;
      }
    }
  }
  if (b0 < 0) throw ConfigError("minimize: the network admits no fragment");
  r.path.assign(static_cast<std::size_t>(J), 0);
  r.path[0] = b0;
  r.path[1] = b1;
  for (int j = 1; j + 1 < J; ++j) {
    const int cur = r.path[static_cast<std::size_t>(j)];
    const int d = cur - r.path[static_cast<std::size_t>(j - 1)];
    const int dn = choice[static_cast<std::size_t>(j)][at(cur, d)];
    r.path[static_cast<std::size_t>(j + 1)] = cur + dn;
  }
  r.value = best + c.constant;
  return r;
}

namespace {

ErmResult finish(const CostMatrix& costs, const CandidateNetwork& net) {
  const DpResult dp = minimize_costs(costs, net);
  ErmResult out;
  out.boundary = net.fragment(dp.path);
  out.path = dp.path;
  out.costs = costs;
  out.visited_states = dp.visited_states;
  out.ties = dp.ties;
  out.risk.value = dp.value;
  return out;
}

}  // namespace

ErmResult minimize(const Sample& s1, const Sample& s2, const DeconvolutionKernel& k,
                   const CandidateNetwork& net) {
  ErmResult out = finish(per_bin_costs(s1, s2, k, net), net);
  out.risk = empirical_risk(s1, s2, out.boundary, k);
  return out;
}

ErmResult naive_minimize(const Sample& s1, const Sample& s2, const CandidateNetwork& net) {
  ErmResult out = finish(counting_costs(s1, s2, net), net);
  out.risk.value = counting_risk(s1, s2, out.boundary);
  out.risk.n = s1.size();
  out.risk.m = s2.size();
  return out;
}

}  // namespace deconv_erm
