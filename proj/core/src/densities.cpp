#include "deconv_erm/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "deconv_erm/errors.hpp"

namespace deconv_erm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input error";
    case ErrorKind::state: return "state error";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::model: return "model error";
    case ErrorKind::resolution: return "resolution error";
    case ErrorKind::unsupported_regime: return "unsupported regime";
  }
  return "error";
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

Box Box::unit(std::size_t d) {
  return Box{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Rng

double Rng::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::laplace(double scale) {
  const double u = uniform() - 0.5;
  return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
}

double Rng::gamma(double shape, double scale) {
  if (shape < 1.0) {
    // Gamma(k) = Gamma(k + 1) * U^(1/k)
    const double g = gamma(shape + 1.0, 1.0);
    return scale * g * std::pow(uniform(), 1.0 / shape);
  }
  // Marsaglia & Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      const double u1 = uniform();
      const double u2 = uniform();
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

// ---------------------------------------------------------------------------
// DensityModel

const char* to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::uniform_box: return "uniform-box";
    case DensityKind::boundary_split: return "boundary-split";
    case DensityKind::lower_bound_member: return "lower-bound-member";
    case DensityKind::custom_grid: return "custom-grid";
  }
  return "unknown";
}

void DensityImpl::draw(Rng& rng, std::span<double> out) const {
  const auto env = envelope();
  if (!env) throw ConfigError(describe() + ": no rejection envelope available");
  const Box box = sampling_box();
  const std::size_t d = dim();
  while (true) {
    for (std::size_t i = 0; i < d; ++i) out[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (rng.uniform() * *env <= eval(out)) return;
  }
}

double DensityModel::eval(std::span<const double> x) const {
  if (x.size() != dim()) throw InputError("density evaluated with wrong dimension");
  if (!all_finite(x)) throw InputError("density evaluated at a non-finite point");
  return impl_->eval(x);
}

double DensityModel::operator()(double x1, double x2) const {
  const double x[2] = {x1, x2};
  return impl_->eval(x);
}

double eval_density(const DensityModel& model, std::span<const double> x) {
  return model.eval(x);
}

namespace {

class UniformBox final : public DensityImpl {
 public:
  explicit UniformBox(Box box) : box_(std::move(box)), value_(1.0 / box_.volume()) {}

  DensityKind kind() const override { return DensityKind::uniform_box; }
  std::size_t dim() const override { return box_.dim(); }
  double eval(std::span<const double> x) const override {
    return box_.contains(x) ? value_ : 0.0;
  }
  Box support() const override { return box_; }
  std::optional<double> envelope() const override { return value_; }
  void draw(Rng& rng, std::span<double> out) const override {
    for (std::size_t i = 0; i < box_.dim(); ++i) out[i] = rng.uniform(box_.lo[i], box_.hi[i]);
  }
  std::vector<double> column_breaks(double) const override {
    return {box_.lo.back(), box_.hi.back()};
  }
  std::vector<double> row_breaks() const override { return {box_.lo[0], box_.hi[0]}; }
  std::optional<std::complex<double>> characteristic_function(
      std::span<const double> t) const override {
    // E exp(i t.X) factorises over coordinates.
    std::complex<double> out{1.0, 0.0};
    for (std::size_t i = 0; i < box_.dim(); ++i) {
      const double a = box_.lo[i], b = box_.hi[i];
      if (std::abs(t[i]) < 1e-12) continue;
      const std::complex<double> num =
          std::exp(std::complex<double>(0.0, t[i] * b)) -
          std::exp(std::complex<double>(0.0, t[i] * a));
      out *= num / std::complex<double>(0.0, t[i] * (b - a));
    }
    return out;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "uniform-box[";
    for (std::size_t i = 0; i < box_.dim(); ++i) {
      os << (i ? " x " : "") << "[" << box_.lo[i] << "," << box_.hi[i] << "]";
    }
    os << "]";
    return os.str();
  }

 private:
  Box box_;
  double value_;
};

class BoundarySplit final : public DensityImpl {
 public:
  BoundarySplit(const SplitBoundary& boundary, double amplitude, SplitRole role)
      : boundary_(boundary), amplitude_(amplitude), role_(role) {
    area_below_ = boundary_.mean();
    if (!(area_below_ > 0.0 && area_below_ < 1.0)) {
      throw ConfigError("boundary-split: boundary must enclose an area in (0,1)");
    }
    above_ratio_ = area_below_ / (1.0 - area_below_);
    if (!(amplitude_ > 0.0) || amplitude_ > 1.0 || amplitude_ * above_ratio_ > 1.0) {
      throw ConfigError("boundary-split: amplitude makes a density negative");
    }
  }

  DensityKind kind() const override { return DensityKind::boundary_split; }
  std::size_t dim() const override { return 2; }
  double eval(std::span<const double> x) const override {
    if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > 1.0) return 0.0;
    const double s = x[1] <= boundary_(x[0]) ? 1.0 : -above_ratio_;
    const double sign = role_ == SplitRole::first ? 1.0 : -1.0;
    return 1.0 + sign * amplitude_ * s;
  }
  Box support() const override { return Box::unit(2); }
  std::optional<double> envelope() const override {
    return 1.0 + amplitude_ * std::max(1.0, above_ratio_);
  }
  std::vector<double> column_breaks(double x1) const override {
    return {0.0, std::clamp(boundary_(x1), 0.0, 1.0), 1.0};
  }
  std::vector<double> row_breaks() const override { return {0.0, 1.0}; }
  std::string describe() const override {
    std::ostringstream os;
    os << "boundary-split(" << (role_ == SplitRole::first ? "f" : "g")
       << ", offset=" << boundary_.offset << ", slope=" << boundary_.slope
       << ", amp=" << boundary_.amplitude << ", freq=" << boundary_.frequency
       << ", a=" << amplitude_ << ")";
    return os.str();
  }

 private:
  SplitBoundary boundary_;
  double amplitude_;
  SplitRole role_;
  double area_below_ = 0.5;
  double above_ratio_ = 1.0;
};

class CustomGrid final : public DensityImpl {
 public:
  CustomGrid(Box box, std::vector<std::size_t> shape, std::vector<double> values)
      : box_(std::move(box)), shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.size() != box_.dim()) throw ConfigError("custom-grid: shape/box mismatch");
    const std::size_t cells = std::accumulate(shape_.begin(), shape_.end(),
                                              std::size_t{1}, std::multiplies<>());
    if (cells != values_.size() || cells == 0) {
      throw ConfigError("custom-grid: value count does not match shape");
    }
    double mass = 0.0;
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("custom-grid: negative value");
      mass += v;
    }
    if (!(mass > 0.0)) throw ConfigError("custom-grid: zero mass");
    const double cell_volume = box_.volume() / static_cast<double>(cells);
    for (double& v : values_) v /= mass * cell_volume;
    max_ = *std::max_element(values_.begin(), values_.end());
  }

  DensityKind kind() const override { return DensityKind::custom_grid; }
  std::size_t dim() const override { return box_.dim(); }
  double eval(std::span<const double> x) const override {
    if (!box_.contains(x)) return 0.0;
    std::size_t index = 0;
    for (std::size_t i = 0; i < box_.dim(); ++i) {
      const double rel = (x[i] - box_.lo[i]) / (box_.hi[i] - box_.lo[i]);
      auto cell = static_cast<std::size_t>(rel * static_cast<double>(shape_[i]));
      cell = std::min(cell, shape_[i] - 1);
      index = index * shape_[i] + cell;
    }
    return values_[index];
  }
  Box support() const override { return box_; }
  std::optional<double> envelope() const override { return max_; }
  std::vector<double> column_breaks(double) const override {
    std::vector<double> out;
    const std::size_t last = box_.dim() - 1;
    for (std::size_t k = 0; k <= shape_[last]; ++k) {
      out.push_back(box_.lo[last] + (box_.hi[last] - box_.lo[last]) *
                                        static_cast<double>(k) /
                                        static_cast<double>(shape_[last]));
    }
    return out;
  }
  std::vector<double> row_breaks() const override {
    std::vector<double> out;
    for (std::size_t k = 0; k <= shape_[0]; ++k) {
      out.push_back(box_.lo[0] + (box_.hi[0] - box_.lo[0]) * static_cast<double>(k) /
                                     static_cast<double>(shape_[0]));
    }
    return out;
  }
  std::string describe() const override { return "custom-grid"; }

 private:
  Box box_;
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
  double max_ = 0.0;
};

}  // namespace

double SplitBoundary::operator()(double x1) const {
  return offset + slope * (x1 - 0.5) + amplitude * std::sin(2.0 * kPi * frequency * x1);
}

double SplitBoundary::mean() const {
  const double w = 2.0 * kPi * frequency;
  return offset + amplitude * (1.0 - std::cos(w)) / w;
}

double SplitBoundary::max_abs_derivative() const {
  return std::abs(slope) + std::abs(amplitude) * 2.0 * kPi * frequency;
}

double SplitBoundary::max_abs_second_derivative() const {
  const double w = 2.0 * kPi * frequency;
  return std::abs(amplitude) * w * w;
}

DensityModel uniform_box(Box box) {
  if (box.dim() == 0 || box.hi.size() != box.dim()) throw ConfigError("uniform-box: bad box");
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (!(box.hi[i] > box.lo[i])) throw ConfigError("uniform-box: empty box");
  }
  return DensityModel(std::make_shared<UniformBox>(std::move(box)));
}

DensityModel boundary_split(const SplitBoundary& boundary, double amplitude,
                            SplitRole role) {
  for (double x = 0.0; x <= 1.0; x += 1.0 / 1024) {
    const double b = boundary(x);
    if (b < 0.0 || b > 1.0) throw ConfigError("boundary-split: boundary leaves [0,1]");
  }
  return DensityModel(std::make_shared<BoundarySplit>(boundary, amplitude, role));
}

DensityModel custom_grid(Box box, std::vector<std::size_t> shape,
                         std::vector<double> values) {
  return DensityModel(
      std::make_shared<CustomGrid>(std::move(box), std::move(shape), std::move(values)));
}

Sample sample(const DensityModel& model, std::size_t n, std::uint64_t seed, int label) {
  if (n == 0) throw InputError("sample: n must be at least 1");
  if (!model.valid()) throw ConfigError("sample: empty density model");
  Sample out;
  out.dim = model.dim();
  out.label = label;
  out.coords.resize(n * out.dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    model.impl().draw(rng, std::span<double>(out.coords.data() + i * out.dim, out.dim));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise

const char* to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::dirac: return "dirac";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::gamma_symmetric: return "gamma-symmetric";
  }
  return "unknown";
}

double CoordinateNoise::beta() const {
  switch (family) {
    case NoiseFamily::dirac: return 0.0;
    case NoiseFamily::laplace: return 2.0;
    case NoiseFamily::gamma_symmetric: return 2.0 * shape;
  }
  return 0.0;
}

double CoordinateNoise::cf(double t) const {
  switch (family) {
    case NoiseFamily::dirac: return 1.0;
    case NoiseFamily::laplace: return 1.0 / (1.0 + scale * scale * t * t);
    case NoiseFamily::gamma_symmetric:
      return std::pow(1.0 + scale * scale * t * t, -shape);
  }
  return 1.0;
}

double CoordinateNoise::variance() const {
  switch (family) {
    case NoiseFamily::dirac: return 0.0;
    case NoiseFamily::laplace: return 2.0 * scale * scale;
    case NoiseFamily::gamma_symmetric: return 2.0 * shape * scale * scale;
  }
  return 0.0;
}

double CoordinateNoise::draw(Rng& rng) const {
  switch (family) {
    case NoiseFamily::dirac: return 0.0;
    case NoiseFamily::laplace: return rng.laplace(scale);
    case NoiseFamily::gamma_symmetric:
      return rng.gamma(shape, scale) - rng.gamma(shape, scale);
  }
  return 0.0;
}

NoiseModel::NoiseModel(std::vector<CoordinateNoise> coords) : coords_(std::move(coords)) {
  for (const auto& c : coords_) {
    if (c.family == NoiseFamily::dirac) continue;
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) {
      throw ConfigError("noise: scale must be positive");
    }
    if (c.family == NoiseFamily::gamma_symmetric && !(c.shape > 0.0)) {
      throw ConfigError("noise: gamma shape must be positive");
    }
  }
}

NoiseModel NoiseModel::dirac(std::size_t d) {
  return NoiseModel(std::vector<CoordinateNoise>(d));
}

NoiseModel NoiseModel::laplace(std::size_t d, double scale) {
  return NoiseModel(std::vector<CoordinateNoise>(
      d, CoordinateNoise{NoiseFamily::laplace, scale, 1.0}));
}

std::vector<double> NoiseModel::beta() const {
  std::vector<double> out;
  for (const auto& c : coords_) out.push_back(c.beta());
  return out;
}

bool NoiseModel::is_dirac() const {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](const CoordinateNoise& c) { return c.family == NoiseFamily::dirac; });
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    os << (i ? " x " : "") << to_string(coords_[i].family);
    if (coords_[i].family != NoiseFamily::dirac) os << "(" << coords_[i].scale;
    if (coords_[i].family == NoiseFamily::gamma_symmetric) os << "," << coords_[i].shape;
    if (coords_[i].family != NoiseFamily::dirac) os << ")";
  }
  return os.str();
}

std::complex<double> noise_cf(const NoiseModel& noise, std::size_t coord, double t) {
  if (coord >= noise.dim()) throw InputError("noise_cf: coordinate out of range");
  return {noise.coordinate(coord).cf(t), 0.0};
}

Sample add_noise(const Sample& s, const NoiseModel& noise, std::uint64_t seed) {
  if (s.noisy) throw StateError("add_noise: sample is already corrupted");
  if (!s.empty() && noise.dim() != s.dim) throw InputError("add_noise: dimension mismatch");
  Sample out = s;
  out.noisy = true;
  Rng rng(seed);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t a = 0; a < s.dim; ++a) {
      out.coords[i * s.dim + a] += noise.coordinate(a).draw(rng);
    }
  }
  return out;
}

}  // namespace deconv_erm
