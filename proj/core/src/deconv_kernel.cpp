#include "deconv_erm/deconv_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/quadrature.hpp"

namespace deconv_erm {

const char* to_string(KernelProfile profile) {
  switch (profile) {
    case KernelProfile::triangular: return "triangular";
    case KernelProfile::flat_top: return "flat-top";
  }
  return "unknown";
}

double profile_value(KernelProfile profile, double t) {
  const double a = std::abs(t);
  switch (profile) {
    case KernelProfile::triangular:
      return a < 1.0 ? 1.0 - a : 0.0;
    case KernelProfile::flat_top: {
      if (a <= 1.0) return 1.0;
      if (a >= 2.0) return 0.0;
      const double s = a - 1.0;
      return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    }
  }
  return 0.0;
}

double profile_support(KernelProfile profile) {
  return profile == KernelProfile::triangular ? 1.0 : 2.0;
}

double base_kernel_value(KernelProfile profile, double x) {
  const double a = std::abs(x);
  if (profile == KernelProfile::triangular) {
    if (a < 1e-4) return (0.5 - a * a / 24.0) / kPi;
    return (1.0 - std::cos(a)) / (kPi * a * a);
  }
  // int_0^1 cos(tx) dt in closed form, the taper by quadrature.
  const double flat = a < 1e-8 ? 1.0 : std::sin(a) / a;
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  opt.max_depth = 20;
  const double taper =
      integrate_1d([&](double t) { return profile_value(profile, t) * std::cos(t * a); },
                   1.0, 2.0, {}, opt)
          .value;
  return (flat + taper) / kPi;
}

// ---------------------------------------------------------------------------
// KernelTable

KernelTable::KernelTable(double step, double half_width, std::vector<double> value,
                         std::vector<double> slope)
    : step_(step), half_width_(half_width), value_(std::move(value)), slope_(std::move(slope)) {
  const std::size_t n = value_.size();
  const std::size_t centre = (n - 1) / 2;
  cumulative_.assign(n, 0.0);
  const double h = step_;
  auto piece = [&](std::size_t i, std::size_t j) {
    // Hermite-corrected trapezoid, exact for cubics.
    return h * (value_[i] + value_[j]) / 2.0 + h * h * (slope_[i] - slope_[j]) / 12.0;
  };
  for (std::size_t k = centre + 1; k < n; ++k) {
    cumulative_[k] = cumulative_[k - 1] + piece(k - 1, k);
  }
  for (std::size_t k = centre; k-- > 0;) {
    cumulative_[k] = cumulative_[k + 1] - piece(k, k + 1);
  }
}

double KernelTable::eval(double u) const {
  if (!(std::abs(u) <= half_width_)) return 0.0;
  const double pos = (u + half_width_) / step_;
  auto k = static_cast<std::size_t>(pos);
  if (k >= value_.size() - 1) return value_.back();
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * value_[k] + w * value_[k + 1];
}

double KernelTable::cumulative(double u) const {
  if (u >= half_width_) return cumulative_.back();
  if (u <= -half_width_) return cumulative_.front();
  const double pos = (u + half_width_) / step_;
  auto k = static_cast<std::size_t>(pos);
  if (k >= value_.size() - 1) return cumulative_.back();
  const double s = pos - static_cast<double>(k);
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * cumulative_[k] + h10 * step_ * value_[k] + h01 * cumulative_[k + 1] +
         h11 * step_ * value_[k + 1];
}

double KernelTable::interpolation_error() const {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < value_.size(); ++k) {
    worst = std::max(worst, std::abs(value_[k + 1] - 2.0 * value_[k] + value_[k - 1]));
  }
  return worst / 8.0;
}

// ---------------------------------------------------------------------------
// Tabulation by FFT

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Tabulated {
  KernelTable table;
  double imag_residue = 0.0;
};

// K(u) = (1/2pi) int F(t) e^{-itu} dt sampled on the table nodes, together
// with K'(u). Sampling F on the grid t_m = 2 pi m / (N du) turns the integral
// into a DFT; the error is the aliasing sum over shifts of N du.
template <class Fourier>
Tabulated tabulate(const Fourier& fourier, double support, const KernelGrid& grid) {
  const std::size_t n = grid.fft_size;
  const double du = grid.step;
  const double period = static_cast<double>(n) * du;
  const double dt = 2.0 * kPi / period;
  const auto half_nodes = static_cast<std::size_t>(std::llround(grid.half_width / du));

  fftw_complex* in = fftw_alloc_complex(2 * n);
  fftw_complex* out = fftw_alloc_complex(2 * n);
  if (in == nullptr || out == nullptr) {
    fftw_free(in);
    fftw_free(out);
    throw NumericError("kernel tabulation: FFT buffer allocation failed");
  }
  std::fill(reinterpret_cast<double*>(in), reinterpret_cast<double*>(in) + 4 * n, 0.0);
  const auto m_max = static_cast<std::ptrdiff_t>(std::ceil(support / dt));
  for (std::ptrdiff_t m = -m_max; m <= m_max; ++m) {
    const double t = static_cast<double>(m) * dt;
    const double v = fourier(t);
    const std::size_t idx = static_cast<std::size_t>((m + static_cast<std::ptrdiff_t>(n)) %
                                                     static_cast<std::ptrdiff_t>(n));
    in[idx][0] = v;           // K
    in[n + idx][1] = -t * v;  // K' : multiply by -it
  }
  const int sizes[1] = {static_cast<int>(n)};
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_many_dft(1, sizes, 2, in, nullptr, 1, static_cast<int>(n), out, nullptr, 1,
                              static_cast<int>(n), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  const std::size_t count = 2 * half_nodes + 1;
  std::vector<double> value(count), slope(count);
  double max_re = 0.0, max_im = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(half_nodes);
    const auto idx = static_cast<std::size_t>((shift + static_cast<std::ptrdiff_t>(n)) %
                                              static_cast<std::ptrdiff_t>(n));
    value[k] = out[idx][0] / period;
    slope[k] = out[n + idx][0] / period;
    max_re = std::max(max_re, std::abs(out[idx][0]));
    max_im = std::max(max_im, std::abs(out[idx][1]));
  }
  fftw_free(in);
  fftw_free(out);

  Tabulated t;
  t.imag_residue = max_re > 0.0 ? max_im / max_re : 0.0;
  t.table = KernelTable(du, static_cast<double>(half_nodes) * du, std::move(value),
                        std::move(slope));
  return t;
}

}  // namespace

DeconvolutionKernel DeconvolutionKernel::build(KernelProfile base, const NoiseModel& noise,
                                               std::vector<double> lambda,
                                               const KernelGrid& grid) {
  if (lambda.empty() || lambda.size() != noise.dim()) {
    throw ConfigError("kernel: bandwidth vector does not match the noise dimension");
  }
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("kernel: bandwidths must be positive");
  }
  if (!(grid.step > 0.0) || !(grid.half_width > 0.0)) {
    throw ConfigError("kernel: grid step and half-width must be positive");
  }
  if (grid.step > 1.0 / 8.0) {
    std::ostringstream os;
    os << "kernel: grid step " << grid.step
       << " bandwidths cannot resolve the kernel (must be at most 1/8)";
    throw ResolutionError(os.str());
  }
  if (static_cast<double>(grid.fft_size) * grid.step < 8.0 * grid.half_width ||
      (grid.fft_size & (grid.fft_size - 1)) != 0) {
    throw ConfigError("kernel: FFT size must be a power of two covering 8 half-widths");
  }

  DeconvolutionKernel k;
  k.base_ = base;
  k.noise_ = noise;
  k.lambda_ = std::move(lambda);
  k.grid_ = grid;
  const double support = profile_support(base);
  auto tables = std::make_shared<std::vector<KernelTable>>();
  auto base_tables = std::make_shared<std::vector<KernelTable>>();
  for (std::size_t i = 0; i < k.lambda_.size(); ++i) {
    const CoordinateNoise& eta = noise.coordinate(i);
    const double l = k.lambda_[i];
    for (double t = -support; t <= support; t += support / 1024.0) {
      if (!(eta.cf(t / l) != 0.0)) throw NumericError("kernel: noise CF vanishes on the grid");
    }
    auto deconv = tabulate(
        [&](double t) { return profile_value(base, t) / eta.cf(t / l); }, support, grid);
    auto plain = tabulate([&](double t) { return profile_value(base, t); }, support, grid);
    CoordinateDiagnostics d;
    d.imag_residue = deconv.imag_residue;
    const KernelTable& tab = deconv.table;
    d.truncated_mass = 1.0 - (tab.cumulative(tab.half_width()) - tab.cumulative(-tab.half_width()));
    d.interpolation_error = tab.interpolation_error();
    if (d.imag_residue > 1e-8) {
      throw NumericError("kernel: inverse transform left an imaginary residue above 1e-8");
    }
    k.diag_.push_back(d);
    tables->push_back(std::move(deconv.table));
    base_tables->push_back(std::move(plain.table));
  }
  k.tables_ = std::move(tables);
  k.base_tables_ = std::move(base_tables);
  return k;
}

const KernelTable& DeconvolutionKernel::table(std::size_t i) const {
  if (!built()) throw StateError("kernel: not built");
  return tables_->at(i);
}

const KernelTable& DeconvolutionKernel::base_table(std::size_t i) const {
  if (!built()) throw StateError("kernel: not built");
  return base_tables_->at(i);
}

double DeconvolutionKernel::eval(std::span<const double> u) const {
  if (u.size() != dim()) throw InputError("kernel: evaluation point has wrong dimension");
  double v = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i) v *= table(i).eval(u[i]);
  return v;
}

double DeconvolutionKernel::eval_coord(std::size_t i, double u) const {
  return table(i).eval(u);
}

double DeconvolutionKernel::cumulative(std::size_t i, double u) const {
  return table(i).cumulative(u);
}

double DeconvolutionKernel::window(std::size_t i, double z, double a, double b) const {
  const KernelTable& t = table(i);
  const double l = lambda_[i];
  return t.cumulative((z - a) / l) - t.cumulative((z - b) / l);
}

double DeconvolutionKernel::base_eval_coord(std::size_t i, double u) const {
  return base_table(i).eval(u);
}

double DeconvolutionKernel::base_window(std::size_t i, double z, double a, double b) const {
  const KernelTable& t = base_table(i);
  const double l = lambda_[i];
  return t.cumulative((z - a) / l) - t.cumulative((z - b) / l);
}

double DeconvolutionKernel::fourier(std::size_t i, double t) const {
  return profile_value(base_, t) / noise_.coordinate(i).cf(t / lambda_.at(i));
}

// ---------------------------------------------------------------------------
// K1

K1Certificate certify_k1(const DeconvolutionKernel& k) {
  if (!k.built()) throw StateError("certify_k1: kernel not built");
  K1Certificate c;
  c.sup_bound = 1.0;
  c.l2_bound = 1.0;
  c.declared_constant = 1.0;
  double rate_sup = 1.0, rate_l2 = 1.0;
  const double support = profile_support(k.base());
  constexpr int kFreq = 8192;
  for (std::size_t i = 0; i < k.dim(); ++i) {
    double sup = 0.0;
    for (int m = -kFreq; m <= kFreq; ++m) {
      const double t = support * static_cast<double>(m) / kFreq;
      sup = std::max(sup, std::abs(k.fourier(i, t)));
    }
    const KernelTable& tab = k.table(i);
    std::vector<double> sq(tab.size());
    for (std::size_t j = 0; j < tab.size(); ++j) sq[j] = tab.values()[j] * tab.values()[j];
    const double l2 = pairwise_sum(sq) * tab.step();
    const double l = k.lambda(i);
    const CoordinateNoise& eta = k.noise().coordinate(i);
    const double shape = eta.family == NoiseFamily::dirac ? 0.0 : eta.shape;
    const double ci = std::pow(std::max(1.0, l * l) + 4.0 * eta.scale * eta.scale, shape);
    c.sup_fourier.push_back(sup);
    c.l2_norm.push_back(l2);
    c.scaled_l2.push_back(l2 / l);
    c.constant.push_back(ci);
    c.sup_bound *= sup;
    c.l2_bound *= l2;
    c.declared_constant *= ci * ci;
    rate_sup *= std::pow(l, -eta.beta());
    rate_l2 *= std::pow(l, -2.0 * eta.beta());
  }
  c.pass = c.sup_bound <= c.declared_constant * rate_sup * (1.0 + 1e-12) &&
           c.l2_bound <= c.declared_constant * rate_l2 * (1.0 + 1e-12);
  return c;
}

}  // namespace deconv_erm
