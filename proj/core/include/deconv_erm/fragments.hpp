#ifndef DECONV_ERM_FRAGMENTS_HPP_
#define DECONV_ERM_FRAGMENTS_HPP_

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "deconv_erm/densities.hpp"

namespace deconv_erm {

// G_b = {x in [0,1]^2 : x2 <= b(x1)} with b constant on each of J equal bins
// of [0,1]. `resolution` is the spacing of the level grid the fragment was
// drawn from (0 for exact levels); holder_check allows one rounding step per
// level on top of the Hoelder budget.
class BoundaryFragment {
 public:
  BoundaryFragment() = default;
  BoundaryFragment(std::vector<double> levels, double gamma, double holder_constant,
                   double resolution = 0.0);

  static BoundaryFragment constant(std::size_t J, double level, double gamma = 2.0,
                                   double holder_constant = 1.0);
  // Levels sampled at bin centres.
  static BoundaryFragment from_function(std::size_t J, const std::function<double(double)>& b,
                                        double gamma = 2.0, double holder_constant = 1.0);

  std::size_t bins() const { return levels_.size(); }
  const std::vector<double>& levels() const { return levels_; }
  double level(std::size_t j) const { return levels_[j]; }
  double gamma() const { return gamma_; }
  double holder_constant() const { return holder_constant_; }
  double resolution() const { return resolution_; }
  double bin_width() const { return 1.0 / static_cast<double>(levels_.size()); }
  double bin_lo(std::size_t j) const { return static_cast<double>(j) * bin_width(); }
  double bin_hi(std::size_t j) const { return static_cast<double>(j + 1) * bin_width(); }
  // Bins are [j/J, (j+1)/J); x1 = 1 belongs to the last bin.
  std::size_t bin_of(double x1) const;
  double at(double x1) const { return levels_[bin_of(x1)]; }

 private:
  std::vector<double> levels_;
  double gamma_ = 2.0;
  double holder_constant_ = 1.0;
  double resolution_ = 0.0;
};

// 1 iff x2 <= b(x1). Throws InputError outside [0,1]^2.
int indicator(const BoundaryFragment& b, std::span<const double> x);

// For gamma in (1, 2]: |b_{j+1} - b_j| <= L h + r and
// |b_{j+1} - 2 b_j + b_{j-1}| <= L h^gamma + 2 r, with h = 1/J and r the
// fragment resolution. Throws UnsupportedRegimeError outside (1, 2].
bool holder_check(const BoundaryFragment& b);

// Q(G1 delta G2) = int_0^1 |b1 - b2|. Same J required.
double d_delta(const BoundaryFragment& b1, const BoundaryFragment& b2);

// Each bin split into `factor` equal bins with the same level.
BoundaryFragment refine(const BoundaryFragment& b, std::size_t factor);

// int_K |f - g| 1{G1 delta G2}, adaptive quadrature to rel_tol.
double d_fg(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b1,
            const BoundaryFragment& b2, double rel_tol = 1e-4);

// Distances to the exact Bayes set {f >= g} (not a tabulated fragment):
// int_K |f - g| 1{G_b delta G*} and Q(G_b delta G*).
double excess_d_fg(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                   double rel_tol = 1e-6);
double excess_d_delta(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                      double rel_tol = 1e-6);

// Per-bin level of {f >= g} at the bin centre, by bisection to 1e-8.
// Throws ModelError when the column has more than one sign change.
BoundaryFragment bayes_set(const DensityModel& f, const DensityModel& g, std::size_t J,
                           double gamma = 2.0, double holder_constant = 1.0);

// Level of the Bayes set in the column at x1.
double bayes_level(const DensityModel& f, const DensityModel& g, double x1);

// R_K(G) = (1/2)(int_{K \ G} f + int_G g).
double bayes_risk(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                  double rel_tol = 1e-7);
// Risk of the exact Bayes set.
double bayes_risk_optimal(const DensityModel& f, const DensityModel& g, double rel_tol = 1e-7);

struct MarginCertificate {
  double alpha = 1.0;  // +inf allowed
  double t0 = 0.0;
  double c2 = 0.0;
  double max_ratio = 0.0;
  double worst_t = 0.0;
  bool pass = false;
};

// Q(|f - g| <= t) measured on a grid x grid cell-centre grid for t on a
// log grid in (0, t0].
MarginCertificate check_margin(const DensityModel& f, const DensityModel& g, double alpha,
                               double t0, double c2, std::size_t grid = 2048);

void write_fragment_csv(std::ostream& os, const BoundaryFragment& b);

}  // namespace deconv_erm

#endif  // DECONV_ERM_FRAGMENTS_HPP_
