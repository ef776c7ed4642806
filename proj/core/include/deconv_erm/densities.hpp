#ifndef DECONV_ERM_DENSITIES_HPP_
#define DECONV_ERM_DENSITIES_HPP_

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deconv_erm/common.hpp"

namespace deconv_erm {

// Random source owned by a single sampling call. Uniforms are built from the
// raw 64-bit stream so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double laplace(double scale);
  double gamma(double shape, double scale);

 private:
  std::mt19937_64 engine_;
};

// A finite collection of d-dimensional points from one class.
struct Sample {
  std::size_t dim = 2;
  std::vector<double> coords;  // row-major, size() * dim entries
  int label = 1;
  bool noisy = false;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  bool empty() const { return coords.empty(); }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * dim, dim};
  }
  double coord(std::size_t i, std::size_t axis) const {
    return coords[i * dim + axis];
  }
};

enum class DensityKind { uniform_box, boundary_split, lower_bound_member, custom_grid };

const char* to_string(DensityKind kind);

// Boundary used by the boundary-split model: offset + slope (x - 1/2) +
// amplitude sin(2 pi frequency x).
struct SplitBoundary {
  double offset = 0.5;
  double slope = 0.0;
  double amplitude = 0.0;
  double frequency = 1.0;

  double operator()(double x1) const;
  double mean() const;  // integral over [0, 1]
  double max_abs_derivative() const;
  double max_abs_second_derivative() const;
};

// Interface implemented by every density. Implementations are immutable.
class DensityImpl {
 public:
  virtual ~DensityImpl() = default;

  virtual DensityKind kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double eval(std::span<const double> x) const = 0;
  // Declared support; eval is zero outside it unless unbounded_tails().
  virtual Box support() const = 0;
  virtual bool unbounded_tails() const { return false; }
  // Upper bound of the density on the sampling box (rejection envelope).
  virtual std::optional<double> envelope() const = 0;
  virtual Box sampling_box() const { return support(); }
  // Draw one point. The default is rejection against the box-uniform proposal.
  virtual void draw(Rng& rng, std::span<double> out) const;
  // x2 locations where a column x1 -> f(x1, .) may jump (d = 2 only).
  virtual std::vector<double> column_breaks(double /*x1*/) const { return {}; }
  // x1 locations where column structure changes (d = 2 only).
  virtual std::vector<double> row_breaks() const { return {}; }
  virtual std::optional<std::complex<double>> characteristic_function(
      std::span<const double> /*t*/) const {
    return std::nullopt;
  }
  virtual std::string describe() const = 0;
};

// Value handle around an immutable density implementation.
class DensityModel {
 public:
  DensityModel() = default;
  explicit DensityModel(std::shared_ptr<const DensityImpl> impl)
      : impl_(std::move(impl)) {}

  bool valid() const { return impl_ != nullptr; }
  DensityKind kind() const { return impl_->kind(); }
  std::size_t dim() const { return impl_->dim(); }
  // Throws InputError on non-finite x or dimension mismatch.
  double eval(std::span<const double> x) const;
  double operator()(double x1, double x2) const;
  Box support() const { return impl_->support(); }
  bool unbounded_tails() const { return impl_->unbounded_tails(); }
  std::optional<double> envelope() const { return impl_->envelope(); }
  Box sampling_box() const { return impl_->sampling_box(); }
  std::vector<double> column_breaks(double x1) const {
    return impl_->column_breaks(x1);
  }
  std::vector<double> row_breaks() const { return impl_->row_breaks(); }
  std::optional<std::complex<double>> characteristic_function(
      std::span<const double> t) const {
    return impl_->characteristic_function(t);
  }
  std::string describe() const { return impl_->describe(); }
  const DensityImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const DensityImpl> impl_;
};

double eval_density(const DensityModel& model, std::span<const double> x);

DensityModel uniform_box(Box box);

enum class SplitRole { first, second };

// Two-class model on [0,1]^2 with Bayes boundary `boundary`: the first class
// has density 1 + a s(x), the second 1 - a s(x), with s = 1 below the boundary
// and s = -A/(1-A) above (A the area below). |f - g| is bounded below, so the
// pair satisfies the strong margin condition.
DensityModel boundary_split(const SplitBoundary& boundary, double amplitude,
                            SplitRole role);

// Piecewise-constant density on a regular grid over `box` (values are
// normalised on construction). Values are row-major with the last axis
// fastest.
DensityModel custom_grid(Box box, std::vector<std::size_t> shape,
                         std::vector<double> values);

// n i.i.d. draws, deterministic in (model, n, seed). Throws InputError for
// n == 0 and ConfigError when the model has no rejection envelope.
Sample sample(const DensityModel& model, std::size_t n, std::uint64_t seed,
              int label = 1);

enum class NoiseFamily { dirac, laplace, gamma_symmetric };

const char* to_string(NoiseFamily family);

// One coordinate of an ordinary-smooth noise law. gamma_symmetric is the
// difference of two independent Gamma(shape, scale) variables, whose
// characteristic function is (1 + scale^2 t^2)^(-shape); laplace is shape 1.
struct CoordinateNoise {
  NoiseFamily family = NoiseFamily::dirac;
  double scale = 0.0;
  double shape = 1.0;

  double beta() const;
  double cf(double t) const;  // real and even for every supported family
  double variance() const;
  double draw(Rng& rng) const;
};

class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(std::vector<CoordinateNoise> coords);

  static NoiseModel dirac(std::size_t d);
  static NoiseModel laplace(std::size_t d, double scale);

  std::size_t dim() const { return coords_.size(); }
  const CoordinateNoise& coordinate(std::size_t i) const { return coords_.at(i); }
  std::vector<double> beta() const;
  bool is_dirac() const;
  std::string describe() const;

 private:
  std::vector<CoordinateNoise> coords_;
};

std::complex<double> noise_cf(const NoiseModel& noise, std::size_t coord, double t);

// Z = X + eps with eps drawn per coordinate. Throws StateError when the
// sample is already noisy.
Sample add_noise(const Sample& s, const NoiseModel& noise, std::uint64_t seed);

}  // namespace deconv_erm

#endif  // DECONV_ERM_DENSITIES_HPP_
