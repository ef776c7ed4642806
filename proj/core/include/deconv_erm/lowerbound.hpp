#ifndef DECONV_ERM_LOWERBOUND_HPP_
#define DECONV_ERM_LOWERBOUND_HPP_

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deconv_erm/densities.hpp"

namespace deconv_erm {

// C-infinity bump e * exp(-1 / (1 - t^2)) on (-1, 1), phi(0) = 1.
double bump(double t);
// Fejer kernel (1 - cos x) / (pi x^2); its Fourier transform is (1 - |t|)_+.
double fejer(double x);

struct FamilyParams {
  int M = 8;
  double tau = 1.0;
  double gamma = 2.0;
  double alpha = 1.0;  // +inf allowed
  double c2 = 1.0;
  // Margin threshold: f_0 - g_0 is 2 eta0 below the line x2 = 1/2 and at
  // most -eta0 above the bumps.
  double eta0 = 0.1;
  double c_star = 5.0;
};

// Hypotheses (f_omega, g_0) with g_0 uniform on [0,1]^2 and
// f_omega = f_0 + f_1 + sum_j omega_j rho_j. Immutable once built.
class HypothesisFamily {
 public:
  explicit HypothesisFamily(const FamilyParams& p);

  const FamilyParams& params() const { return p_; }
  int M() const { return p_.M; }
  double b0() const { return b0_; }
  double b1() const { return b1_; }
  double C_star() const { return C_star_; }
  // Height of the bumps, tau M^-gamma.
  double height() const { return height_; }
  // c* (tau M^-gamma)^(1/alpha), the amplitude in front of rho_j.
  double rho_amplitude() const { return amp_; }
  // Integral of b(., 1) over [0, 1].
  double boundary_mean() const { return bbar_; }

  double phi_j(int j, double t) const;
  double boundary(double t, std::span<const int> omega) const;
  double boundary_all(double t) const;  // omega = 1

  double rho2(double x2) const;
  double rho1(int j, double x1) const;
  double rho_j(int j, double x1, double x2) const;
  // Centres and scales: rho2(x) = cos(y/a) fejer(y/(2a)) with y = x - centre.
  double rho2_centre() const { return 0.5 * (1.0 + height_); }
  double rho2_scale() const;
  double rho1_centre(int j) const { return static_cast<double>(j) / p_.M; }
  double rho1_scale() const;
  // Closed-form transforms, F[h](t) = int h(x) e^{itx} dx.
  std::complex<double> rho2_fourier(double t) const;
  std::complex<double> rho1_fourier(int j, double t) const;

  double f0(double x1, double x2) const;
  double f1(double x1, double x2) const;
  double f_omega(double x1, double x2, std::span<const int> omega) const;
  // f_0 + f_1 - sum_j |rho_j|, a lower bound of every f_omega.
  double f_lower(double x1, double x2) const;

  DensityModel member(std::vector<int> omega) const;
  DensityModel g0() const;

  // Named parameters and solved constants, for export.
  std::vector<std::pair<std::string, double>> constants() const;

 private:
  void check_omega(std::span<const int> omega) const;

  FamilyParams p_;
  double inv_alpha_ = 1.0;
  double height_ = 0.0;
  double amp_ = 0.0;
  double C_star_ = 0.0;
  double bbar_ = 0.5;
  double b0_ = 0.0;
  double b1_ = 0.0;
};

struct Chi2Options {
  double reach = 256.0;     // half-width of the integration window, in units of the rho scale
  double per_scale = 4.0;   // grid nodes per rho scale
  int band_panels = 64;     // Gauss panels per half of the frequency band
  std::size_t table = 129;  // denominator table nodes per axis (non-degenerate noise)
};

struct Chi2Result {
  double value = 0.0;
  double error = 0.0;  // resolution-halving estimate
  double denominator_min = 0.0;
  std::size_t nodes = 0;
};

// chi^2 between the members omega = e_j and omega = 0 after convolution
// with the noise: int ((rho_j * eta)^2) / (f_{e_j} * eta). Noise must be
// dirac in both coordinates or in neither.
Chi2Result chi2(const HypothesisFamily& fam, int j, const NoiseModel& noise,
                const Chi2Options& opt = {});

// (rho * eta) on a regular grid, from the closed-form transform of rho and
// the noise characteristic function.
struct Profile {
  double x0 = 0.0;
  double dx = 0.0;
  std::vector<double> values;
  double error = 0.0;  // max difference against half the Gauss panels

  double operator()(double x) const;  // cubic interpolation, 0 outside
  double lo() const { return x0; }
  double hi() const { return x0 + dx * static_cast<double>(values.size() - 1); }
};

// Profile of cos(y/a) fejer(y/(2a)), y = x - centre, convolved with the noise.
Profile smoothed_profile(double centre, double scale, const CoordinateNoise& noise,
                         double reach, double per_scale, int band_panels);

enum class RateKind { lower_tau, upper_kappa };
enum class Metric { d_delta, d_fg };

const char* to_string(RateKind kind);
const char* to_string(Metric metric);

// tau_d and kappa_d. alpha may be +inf (limit of the formulas).
double rate_exponent(RateKind kind, Metric metric, double alpha, std::span<const double> beta,
                     double gamma, std::size_t d);

// The two chi^2 decay exponents (d = 2): gamma(2/alpha+1) + 2 beta1 gamma +
// 2 beta2 + 1 and gamma(2/alpha+1) + 2 beta1 + 2 beta2 gamma + 1.
std::pair<double, double> chi2_exponents(double alpha, double gamma, double beta1, double beta2);

// Noise density and distribution function of one coordinate (not dirac).
double noise_density(const CoordinateNoise& c, double x);
double noise_cdf(const CoordinateNoise& c, double x);

}  // namespace deconv_erm

#endif  // DECONV_ERM_LOWERBOUND_HPP_
