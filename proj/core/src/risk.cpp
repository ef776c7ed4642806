#include "deconv_erm/risk.hpp"

#include <algorithm>
#include <cmath>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/quadrature.hpp"

namespace deconv_erm {

namespace {

void require_kernel(const DeconvolutionKernel& k) {
  if (!k.built()) throw StateError("risk: kernel tables are not built");
  if (k.dim() != 2) throw InputError("risk: fragments need a two-dimensional kernel");
}

double level_window(const DeconvolutionKernel& k, double z2, double c) {
  return k.window(1, z2, 0.0, std::clamp(c, 0.0, 1.0));
}

double bin_window(const DeconvolutionKernel& k, double z1, std::size_t j, std::size_t J) {
  const double inv = 1.0 / static_cast<double>(J);
  return k.window(0, z1, static_cast<double>(j) * inv, static_cast<double>(j + 1) * inv);
}

// Base-kernel smoothing K_l * 1_G at x.
double smooth_fragment(double x1, double x2, const BoundaryFragment& b,
                       const DeconvolutionKernel& k) {
  const std::size_t J = b.bins();
  const double l1 = k.lambda(0);
  const KernelTable& t1 = k.base_table(0);
  const double reach = t1.half_width() * l1;
  double s = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double lo = b.bin_lo(j), hi = b.bin_hi(j);
    if (x1 - hi > reach || lo - x1 > reach) continue;
    s += k.base_window(0, x1, lo, hi) * k.base_window(1, x2, 0.0, b.level(j));
  }
  return s;
}

double smooth_box(double x1, double x2, const DeconvolutionKernel& k) {
  return k.base_window(0, x1, 0.0, 1.0) * k.base_window(1, x2, 0.0, 1.0);
}

}  // namespace

double h_fragment(std::span<const double> z, const BoundaryFragment& b,
                  const DeconvolutionKernel& k) {
  require_kernel(k);
  if (z.size() != 2) throw InputError("h_fragment: point has wrong dimension");
  const std::size_t J = b.bins();
  double s = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    s += bin_window(k, z[0], j, J) * level_window(k, z[1], b.level(j));
  }
  return s;
}

double h_box(std::span<const double> z, std::size_t J, const DeconvolutionKernel& k) {
  require_kernel(k);
  if (z.size() != 2) throw InputError("h_box: point has wrong dimension");
  const double full = level_window(k, z[1], 1.0);
  double s = 0.0;
  for (std::size_t j = 0; j < J; ++j) s += bin_window(k, z[0], j, J) * full;
  return s;
}

double h_complement(std::span<const double> z, const BoundaryFragment& b,
                    const DeconvolutionKernel& k) {
  return h_box(z, b.bins(), k) - h_fragment(z, b, k);
}

RiskEvaluation empirical_risk(const Sample& s1, const Sample& s2, const BoundaryFragment& b,
                              const DeconvolutionKernel& k) {
  require_kernel(k);
  if (s1.empty() || s2.empty()) throw InputError("empirical_risk: samples must be non-empty");
  if (s1.dim != 2 || s2.dim != 2) throw InputError("empirical_risk: samples must be planar");
  if (!k.noise().is_dirac() && (!s1.noisy || !s2.noisy)) {
    throw StateError("empirical_risk: deconvolution kernel applied to noise-free samples");
  }
  std::vector<double> a(s1.size()), c(s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) a[i] = h_complement(s1.point(i), b, k);
  for (std::size_t i = 0; i < s2.size(); ++i) c[i] = h_fragment(s2.point(i), b, k);
  RiskEvaluation r;
  r.n = s1.size();
  r.m = s2.size();
  r.sum1 = pairwise_sum(a);
  r.sum2 = pairwise_sum(c);
  r.value = r.sum1 / (2.0 * static_cast<double>(r.n)) + r.sum2 / (2.0 * static_cast<double>(r.m));
  r.lambda = k.lambda();
  return r;
}

double counting_risk(const Sample& s1, const Sample& s2, const BoundaryFragment& b) {
  if (s1.empty() || s2.empty()) throw InputError("counting_risk: samples must be non-empty");
  auto in_box = [](std::span<const double> x) {
    return x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0;
  };
  double out1 = 0.0, in2 = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    const auto x = s1.point(i);
    if (in_box(x) && !indicator(b, x)) out1 += 1.0;
  }
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const auto x = s2.point(i);
    if (in_box(x) && indicator(b, x)) in2 += 1.0;
  }
  return 0.5 * (out1 / static_cast<double>(s1.size()) + in2 / static_cast<double>(s2.size()));
}

double smoothed_risk(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                     const DeconvolutionKernel& k, double rel_tol) {
  require_kernel(k);
  if (f.unbounded_tails() || g.unbounded_tails()) {
    throw InputError("smoothed_risk: densities must have bounded support");
  }
  const Box fb = f.support(), gb = g.support();
  const double a1 = std::min(fb.lo[0], gb.lo[0]), b1 = std::max(fb.hi[0], gb.hi[0]);
  const double a2 = std::min(fb.lo[1], gb.lo[1]), b2 = std::max(fb.hi[1], gb.hi[1]);

  std::vector<double> outer = f.row_breaks();
  const auto grow = g.row_breaks();
  outer.insert(outer.end(), grow.begin(), grow.end());
  for (std::size_t j = 0; j <= b.bins(); ++j) outer.push_back(b.bin_lo(0) + static_cast<double>(j) * b.bin_width());

  auto inner = [&](double x1) {
    std::vector<double> br = f.column_breaks(x1);
    const auto gcol = g.column_breaks(x1);
    br.insert(br.end(), gcol.begin(), gcol.end());
    br.push_back(0.0);
    br.push_back(1.0);
    const std::size_t j = b.bin_of(std::clamp(x1, 0.0, 1.0));
    for (std::size_t d = (j > 0 ? j - 1 : 0); d <= std::min(j + 1, b.bins() - 1); ++d) {
      br.push_back(b.level(d));
    }
    return br;
  };
  auto integrand = [&](double x1, double x2) {
    const double fv = f(x1, x2), gv = g(x1, x2);
    if (fv == 0.0 && gv == 0.0) return 0.0;
    const double in_g = smooth_fragment(x1, x2, b, k);
    const double in_k = smooth_box(x1, x2, k);
    return fv * (in_k - in_g) + gv * in_g;
  };
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  opt.max_depth = 14;
  return 0.5 * integrate_2d(integrand, a1, b1, a2, b2, outer, inner, opt).value;
}

double bias(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
            const DeconvolutionKernel& k, double rel_tol) {
  return bayes_risk(f, g, b, rel_tol * 0.01) - smoothed_risk(f, g, b, k, rel_tol);
}

Eigen::MatrixXd bin_windows(const Sample& s, std::size_t J, const DeconvolutionKernel& k) {
  require_kernel(k);
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(J));
  // Cumulative values at the J + 1 bin edges, differenced.
  std::vector<double> edge(J + 1);
  const double l1 = k.lambda(0);
  const KernelTable& t = k.table(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = s.coord(static_cast<std::size_t>(i), 0);
    for (std::size_t e = 0; e <= J; ++e) {
      edge[e] = t.cumulative((z - static_cast<double>(e) / static_cast<double>(J)) / l1);
    }
    for (std::size_t j = 0; j < J; ++j) w(i, static_cast<Eigen::Index>(j)) = edge[j] - edge[j + 1];
  }
  return w;
}

Eigen::MatrixXd level_windows(const Sample& s, std::span<const double> levels,
                              const DeconvolutionKernel& k) {
  require_kernel(k);
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd h(n, static_cast<Eigen::Index>(levels.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = s.coord(static_cast<std::size_t>(i), 1);
    for (std::size_t v = 0; v < levels.size(); ++v) {
      h(i, static_cast<Eigen::Index>(v)) = level_window(k, z, levels[v]);
    }
  }
  return h;
}

}  // namespace deconv_erm
