#ifndef DECONV_ERM_DECONV_KERNEL_HPP_
#define DECONV_ERM_DECONV_KERNEL_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "deconv_erm/densities.hpp"

namespace deconv_erm {

// Fourier profile of a one-dimensional base kernel. Fourier transforms use
// F[K](t) = int K(x) e^{itx} dx.
enum class KernelProfile {
  triangular,  // (1 - |t|)_+ ; K(x) = (1 - cos x) / (pi x^2)
  flat_top,    // 1 on [-1, 1], quintic smoothstep down to 0 at |t| = 2
};

const char* to_string(KernelProfile profile);

double profile_value(KernelProfile profile, double t);
double profile_support(KernelProfile profile);
// Space-domain base kernel, K(x) = (1/pi) int_0^T F[K](t) cos(tx) dt.
double base_kernel_value(KernelProfile profile, double x);

struct KernelGrid {
  double step = 1.0 / 16.0;   // in units of the bandwidth
  double half_width = 64.0;   // in units of the bandwidth
  std::size_t fft_size = std::size_t{1} << 16;
};

// Tabulation of a single coordinate on u = -half_width + k * step.
class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(double step, double half_width, std::vector<double> value,
              std::vector<double> slope);

  bool built() const { return !value_.empty(); }
  double step() const { return step_; }
  double half_width() const { return half_width_; }
  std::size_t size() const { return value_.size(); }
  double node(std::size_t k) const { return -half_width_ + step_ * static_cast<double>(k); }
  const std::vector<double>& values() const { return value_; }

  // Linear interpolation; zero beyond the half-width.
  double eval(double u) const;
  // int_0^u K, cubic Hermite between nodes, constant beyond the half-width.
  double cumulative(double u) const;
  // Bound on |linear interpolant - K| from the tabulated second differences.
  double interpolation_error() const;

 private:
  double step_ = 0.0;
  double half_width_ = 0.0;
  std::vector<double> value_;
  std::vector<double> slope_;
  std::vector<double> cumulative_;  // int_0^{node(k)} K
};

struct CoordinateDiagnostics {
  double imag_residue = 0.0;      // max |Im| / max |Re| after the inverse FFT
  double truncated_mass = 0.0;    // 1 - int_{-H}^{H} K_eta
  double interpolation_error = 0.0;
};

// Product deconvolution kernel: F[K_eta,i](t) = F[K_i](t) / F[eta_i](t / lambda_i).
// Also tabulates the base kernel so smoothed quantities can use either.
class DeconvolutionKernel {
 public:
  static DeconvolutionKernel build(KernelProfile base, const NoiseModel& noise,
                                   std::vector<double> lambda, const KernelGrid& grid = {});

  DeconvolutionKernel() = default;

  bool built() const { return tables_ != nullptr; }
  std::size_t dim() const { return lambda_.size(); }
  KernelProfile base() const { return base_; }
  const NoiseModel& noise() const { return noise_; }
  const std::vector<double>& lambda() const { return lambda_; }
  double lambda(std::size_t i) const { return lambda_.at(i); }
  const KernelGrid& grid() const { return grid_; }

  // prod_i K_eta,i(u_i), linear interpolation per coordinate.
  double eval(std::span<const double> u) const;
  double eval_coord(std::size_t i, double u) const;
  double cumulative(std::size_t i, double u) const;
  // int_a^b (1/lambda_i) K_eta,i((z - x) / lambda_i) dx.
  double window(std::size_t i, double z, double a, double b) const;
  // Same quantities for the base kernel K (no deconvolution).
  double base_eval_coord(std::size_t i, double u) const;
  double base_window(std::size_t i, double z, double a, double b) const;

  // Exact Fourier transform of K_eta,i in the dimensionless variable.
  double fourier(std::size_t i, double t) const;
  const KernelTable& table(std::size_t i) const;
  const KernelTable& base_table(std::size_t i) const;
  const CoordinateDiagnostics& diagnostics(std::size_t i) const { return diag_.at(i); }

 private:
  KernelProfile base_ = KernelProfile::flat_top;
  NoiseModel noise_;
  std::vector<double> lambda_;
  KernelGrid grid_;
  std::shared_ptr<const std::vector<KernelTable>> tables_;       // deconvolution
  std::shared_ptr<const std::vector<KernelTable>> base_tables_;  // base kernel
  std::vector<CoordinateDiagnostics> diag_;
};

struct K1Certificate {
  // Per coordinate.
  std::vector<double> sup_fourier;   // sup_t |F[K_eta,i](t)|
  std::vector<double> l2_norm;       // ||K_eta,i||_2^2 (dimensionless)
  std::vector<double> scaled_l2;     // ||(1/lambda) K_eta,i(./lambda)||_2^2
  std::vector<double> constant;      // declared C_i
  // Products over coordinates.
  double sup_bound = 0.0;
  double l2_bound = 0.0;
  double declared_constant = 0.0;
  bool pass = false;
};

// sup over the frequency grid and L2 norm by Parseval on the tabulation;
// pass iff both are within the declared constant times prod lambda_i^{-beta_i}
// (respectively lambda_i^{-2 beta_i}).
K1Certificate certify_k1(const DeconvolutionKernel& k);

}  // namespace deconv_erm

#endif  // DECONV_ERM_DECONV_KERNEL_HPP_
