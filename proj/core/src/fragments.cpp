#include "deconv_erm/fragments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/quadrature.hpp"

namespace deconv_erm {

BoundaryFragment::BoundaryFragment(std::vector<double> levels, double gamma,
                                   double holder_constant, double resolution)
    : levels_(std::move(levels)),
      gamma_(gamma),
      holder_constant_(holder_constant),
      resolution_(resolution) {
  if (levels_.empty()) throw InputError("fragment: at least one bin is required");
  for (double v : levels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("fragment: levels must lie in [0, 1]");
  }
  if (!(holder_constant_ >= 0.0) || !(resolution_ >= 0.0)) {
    throw InputError("fragment: Hoelder constant and resolution must be nonnegative");
  }
}

BoundaryFragment BoundaryFragment::constant(std::size_t J, double level, double gamma,
                                            double holder_constant) {
  return BoundaryFragment(std::vector<double>(J, level), gamma, holder_constant);
}

BoundaryFragment BoundaryFragment::from_function(std::size_t J,
                                                 const std::function<double(double)>& b,
                                                 double gamma, double holder_constant) {
  std::vector<double> levels(J);
  for (std::size_t j = 0; j < J; ++j) {
    levels[j] = b((static_cast<double>(j) + 0.5) / static_cast<double>(J));
  }
  return BoundaryFragment(std::move(levels), gamma, holder_constant);
}

std::size_t BoundaryFragment::bin_of(double x1) const {
  const double pos = x1 * static_cast<double>(levels_.size());
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), levels_.size() - 1);
}

int indicator(const BoundaryFragment& b, std::span<const double> x) {
  if (x.size() != 2) throw InputError("indicator: fragments are two-dimensional");
  if (!(x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0)) {
    throw InputError("indicator: point outside [0,1]^2");
  }
  return x[1] <= b.at(x[0]) ? 1 : 0;
}

bool holder_check(const BoundaryFragment& b) {
  const double gamma = b.gamma();
  if (!(gamma > 1.0) || gamma > 2.0) {
    std::ostringstream os;
    os << "holder_check: gamma = " << gamma << " is outside the supported range (1, 2]";
    throw UnsupportedRegimeError(os.str());
  }
  const std::size_t J = b.bins();
  if (J < 2) throw InputError("holder_check: at least two bins are required");
  const double h = b.bin_width();
  const double L = b.holder_constant();
  const double r = b.resolution();
  const double first = L * h + r + 1e-12;
  const double second = L * std::pow(h, gamma) + 2.0 * r + 1e-12;
  const auto& l = b.levels();
  for (std::size_t j = 0; j + 1 < J; ++j) {
    if (std::abs(l[j + 1] - l[j]) > first) return false;
  }
  for (std::size_t j = 1; j + 1 < J; ++j) {
    if (std::abs(l[j + 1] - 2.0 * l[j] + l[j - 1]) > second) return false;
  }
  return true;
}

double d_delta(const BoundaryFragment& b1, const BoundaryFragment& b2) {
  if (b1.bins() != b2.bins()) throw InputError("d_delta: fragments have different bin counts");
  std::vector<double> diff(b1.bins());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = std::abs(b1.level(j) - b2.level(j));
  return pairwise_sum(diff) * b1.bin_width();
}

BoundaryFragment refine(const BoundaryFragment& b, std::size_t factor) {
  if (factor == 0) throw InputError("refine: factor must be positive");
  std::vector<double> levels;
  levels.reserve(b.bins() * factor);
  for (double v : b.levels()) levels.insert(levels.end(), factor, v);
  return BoundaryFragment(std::move(levels), b.gamma(), b.holder_constant(), b.resolution());
}

namespace {

std::vector<double> merged_breaks(const DensityModel& f, const DensityModel& g, double x1) {
  std::vector<double> br = f.column_breaks(x1);
  const auto gb = g.column_breaks(x1);
  br.insert(br.end(), gb.begin(), gb.end());
  return br;
}

std::vector<double> outer_breaks(const DensityModel& f, const DensityModel& g,
                                 std::size_t J) {
  std::vector<double> br = f.row_breaks();
  const auto gb = g.row_breaks();
  br.insert(br.end(), gb.begin(), gb.end());
  for (std::size_t j = 1; j < J; ++j) br.push_back(static_cast<double>(j) / static_cast<double>(J));
  return br;
}

void require_planar(const DensityModel& f, const DensityModel& g) {
  if (!f.valid() || !g.valid() || f.dim() != 2 || g.dim() != 2) {
    throw InputError("fragment quantities need two-dimensional densities");
  }
}

}  // namespace

double d_fg(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b1,
            const BoundaryFragment& b2, double rel_tol) {
  require_planar(f, g);
  if (b1.bins() != b2.bins()) throw InputError("d_fg: fragments have different bin counts");
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  std::vector<double> parts;
  for (std::size_t j = 0; j < b1.bins(); ++j) {
    const double lo = std::min(b1.level(j), b2.level(j));
    const double hi = std::max(b1.level(j), b2.level(j));
    if (hi <= lo) continue;
    auto column = [&](double x1) {
      const auto br = merged_breaks(f, g, x1);
      return integrate_1d([&](double x2) { return std::abs(f(x1, x2) - g(x1, x2)); }, lo, hi,
                          br, opt)
          .value;
    };
    const std::vector<double> row = f.row_breaks();
    parts.push_back(integrate_1d(column, b1.bin_lo(j), b1.bin_hi(j), row, opt).value);
  }
  return pairwise_sum(parts);
}

double bayes_level(const DensityModel& f, const DensityModel& g, double x1) {
  constexpr int kScan = 256;
  std::vector<double> pts = merged_breaks(f, g, x1);
  for (int i = 0; i <= kScan; ++i) pts.push_back(static_cast<double>(i) / kScan);
  pts.erase(std::remove_if(pts.begin(), pts.end(), [](double v) { return v < 0.0 || v > 1.0; }),
            pts.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto member = [&](double x2) { return f(x1, x2) >= g(x1, x2); };

  std::size_t changes = 0;
  std::size_t last_in = pts.size();  // index of the last member before the switch
  bool prev = member(pts[0]);
  if (prev) last_in = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const bool cur = member(pts[i]);
    if (cur != prev) {
      ++changes;
      if (cur) {
        std::ostringstream os;
        os << "bayes_set: column x1 = " << x1 << " enters {f >= g} above x2 = " << pts[i - 1]
           << "; the Bayes set is not a boundary fragment";
        throw ModelError(os.str());
      }
    }
    if (cur && changes == 0) last_in = i;
    prev = cur;
  }
  if (changes > 1) {
    std::ostringstream os;
    os << "bayes_set: column x1 = " << x1 << " has " << changes << " sign changes";
    throw ModelError(os.str());
  }
  if (last_in == pts.size()) return 0.0;
  if (changes == 0) return 1.0;
  double lo = pts[last_in], hi = pts[last_in + 1];
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (member(mid) ? lo : hi) = mid;
  }
  return lo;
}

BoundaryFragment bayes_set(const DensityModel& f, const DensityModel& g, std::size_t J,
                           double gamma, double holder_constant) {
  require_planar(f, g);
  if (J == 0) throw InputError("bayes_set: J must be positive");
  std::vector<double> levels(J);
  for (std::size_t j = 0; j < J; ++j) {
    levels[j] = bayes_level(f, g, (static_cast<double>(j) + 0.5) / static_cast<double>(J));
  }
  return BoundaryFragment(std::move(levels), gamma, holder_constant);
}

namespace {

// int_K w(x1, x2, member_of_G, member_of_G*) over [0,1]^2.
template <class Weight>
double integrate_against_bayes(const DensityModel& f, const DensityModel& g,
                               const BoundaryFragment& b, double rel_tol, Weight weight) {
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = 1e-13;
  opt.max_depth = 16;
  auto column = [&](double x1) {
    auto br = merged_breaks(f, g, x1);
    const double level = b.at(x1);
    br.push_back(level);
    return integrate_1d(
               [&](double x2) {
                 const double fv = f(x1, x2), gv = g(x1, x2);
                 return weight(fv, gv, x2 <= level, fv >= gv);
               },
               0.0, 1.0, br, opt)
        .value;
  };
  return integrate_1d(column, 0.0, 1.0, outer_breaks(f, g, b.bins()), opt).value;
}

}  // namespace

double excess_d_fg(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                   double rel_tol) {
  require_planar(f, g);
  return integrate_against_bayes(f, g, b, rel_tol, [](double fv, double gv, bool in_g, bool in_star) {
    return in_g != in_star ? std::abs(fv - gv) : 0.0;
  });
}

double excess_d_delta(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                      double rel_tol) {
  require_planar(f, g);
  return integrate_against_bayes(f, g, b, rel_tol, [](double, double, bool in_g, bool in_star) {
    return in_g != in_star ? 1.0 : 0.0;
  });
}

double bayes_risk(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                  double rel_tol) {
  require_planar(f, g);
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  std::vector<double> parts;
  for (std::size_t j = 0; j < b.bins(); ++j) {
    const double level = b.level(j);
    auto column = [&](double x1) {
      const auto br = merged_breaks(f, g, x1);
      const double below =
          integrate_1d([&](double x2) { return g(x1, x2); }, 0.0, level, br, opt).value;
      const double above =
          integrate_1d([&](double x2) { return f(x1, x2); }, level, 1.0, br, opt).value;
      return below + above;
    };
    parts.push_back(integrate_1d(column, b.bin_lo(j), b.bin_hi(j), f.row_breaks(), opt).value);
  }
  return 0.5 * pairwise_sum(parts);
}

double bayes_risk_optimal(const DensityModel& f, const DensityModel& g, double rel_tol) {
  require_planar(f, g);
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  auto column = [&](double x1) {
    return integrate_1d([&](double x2) { return std::min(f(x1, x2), g(x1, x2)); }, 0.0, 1.0,
                        merged_breaks(f, g, x1), opt)
        .value;
  };
  return 0.5 * integrate_1d(column, 0.0, 1.0, outer_breaks(f, g, 1), opt).value;
}

MarginCertificate check_margin(const DensityModel& f, const DensityModel& g, double alpha,
                               double t0, double c2, std::size_t grid) {
  require_planar(f, g);
  if (!(alpha > 0.0)) throw InputError("check_margin: alpha must be positive");
  if (!(t0 > 0.0) || grid == 0) throw InputError("check_margin: t0 and grid must be positive");
  std::vector<double> gap(grid * grid);
  const double h = 1.0 / static_cast<double>(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double x1 = (static_cast<double>(i) + 0.5) * h;
    for (std::size_t k = 0; k < grid; ++k) {
      const double x2 = (static_cast<double>(k) + 0.5) * h;
      gap[i * grid + k] = std::abs(f(x1, x2) - g(x1, x2));
    }
  }
  std::sort(gap.begin(), gap.end());
  MarginCertificate c;
  c.alpha = alpha;
  c.t0 = t0;
  c.c2 = c2;
  const bool strong = std::isinf(alpha);
  // t_k = t0 * 2^{-k/4}; the strong case is tested strictly below t0.
  for (int k = strong ? 1 : 0; k <= 80; ++k) {
    const double t = t0 * std::exp2(-0.25 * k);
    const auto count = static_cast<double>(std::upper_bound(gap.begin(), gap.end(), t) - gap.begin());
    const double measure = count * h * h;
    const double ratio = strong ? measure : measure / std::pow(t, alpha);
    if (ratio > c.max_ratio || c.worst_t == 0.0) {
      c.max_ratio = ratio;
      c.worst_t = t;
    }
  }
  c.pass = strong ? c.max_ratio == 0.0 : c.max_ratio <= c2;
  return c;
}

void write_fragment_csv(std::ostream& os, const BoundaryFragment& b) {
  os << "bin,level\n";
  for (std::size_t j = 0; j < b.bins(); ++j) os << j << ',' << b.level(j) << '\n';
}

}  // namespace deconv_erm
