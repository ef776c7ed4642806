#include "deconv_erm/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/quadrature.hpp"

namespace deconv_erm {

double bump(double t) {
  const double s = 1.0 - t * t;
  if (!(s > 0.0)) return 0.0;
  return std::exp(1.0 - 1.0 / s);
}

double fejer(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return (0.5 - x2 / 24.0 + x2 * x2 / 720.0) / kPi;
  }
  return (1.0 - std::cos(x)) / (kPi * x * x);
}

namespace {

// min(1/(2 pi), 2/(pi x^2)) >= |fejer(x)|.
double fejer_majorant(double x) {
  const double tail = x == 0.0 ? 1.0 / (2.0 * kPi) : 2.0 / (kPi * x * x);
  return std::min(1.0 / (2.0 * kPi), tail);
}

}  // namespace

HypothesisFamily::HypothesisFamily(const FamilyParams& p) : p_(p) {
  if (p.M < 2) throw ConfigError("family: M must be at least 2");
  if (!(p.tau > 0.0) || !(p.gamma > 0.0) || !(p.alpha > 0.0) || !(p.c2 > 0.0) ||
      !(p.c_star > 0.0)) {
    throw ConfigError("family: tau, gamma, alpha, c2 and c* must be positive");
  }
  if (!(p.eta0 > 0.0 && p.eta0 < 0.25)) throw ConfigError("family: eta0 must lie in (0, 1/4)");
  inv_alpha_ = std::isinf(p.alpha) ? 0.0 : 1.0 / p.alpha;
  const double M = static_cast<double>(p.M);
  height_ = p.tau * std::pow(M, -p.gamma);
  amp_ = p.c_star * std::pow(height_, inv_alpha_);
  C_star_ = 1.5 * std::pow(p.tau / p.c2, inv_alpha_);
  if (!(height_ < 0.5)) throw ConfigError("family: bumps leave the unit square");

  std::vector<double> breaks;
  for (int k = 0; 2 * k <= p.M; ++k) breaks.push_back(2.0 * k / M);
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-15;
  bbar_ = integrate_1d([&](double t) { return boundary_all(t); }, 0.0, 1.0, breaks, opt).value;

  // Middle branch, integrated in x2 in closed form.
  const double shift = C_star_ * std::pow(M, -p.gamma * inv_alpha_);
  const double q = 1.0 + inv_alpha_;
  const double cq = std::pow(p.c2, -inv_alpha_);
  const double mid = integrate_1d(
                         [&](double t) {
                           const double h = boundary_all(t) - 0.5;
                           return h * (1.0 - shift) + cq * std::pow(h, q) / q;
                         },
                         0.0, 1.0, breaks, opt)
                         .value;
  // int f0 = 3/4 is linear in b0.
  const double upper = 1.0 - bbar_;
  b0_ = (0.5 * (1.0 + 2.0 * p.eta0) + mid + upper * (1.0 - p.eta0) - 0.75) / upper;
  if (!(b0_ > 0.0) || !(1.0 - p.eta0 - b0_ >= 0.0)) {
    throw ConfigError("family: no admissible b0 for these parameters");
  }
  // int over R^2 \ [0,1]^2 of 1/((1+x1^2)(1+x2^2)) = pi^2 - (pi/4)^2.
  b1_ = 0.25 / (kPi * kPi * 15.0 / 16.0);
}

double HypothesisFamily::phi_j(int j, double t) const {
  if (j < 1 || j > p_.M) throw InputError("phi_j: index outside 1..M");
  return height_ * bump(p_.M * t - (2.0 * j - 1.0));
}

void HypothesisFamily::check_omega(std::span<const int> omega) const {
  if (omega.size() != static_cast<std::size_t>(p_.M)) {
    throw InputError("family: omega must have length M");
  }
}

double HypothesisFamily::boundary(double t, std::span<const int> omega) const {
  check_omega(omega);
  const double u = p_.M * t;
  const int j = static_cast<int>(std::floor(u / 2.0)) + 1;
  if (j < 1 || j > p_.M || omega[static_cast<std::size_t>(j - 1)] == 0) return 0.5;
  return 0.5 + height_ * bump(u - (2.0 * j - 1.0));
}

double HypothesisFamily::boundary_all(double t) const {
  const double u = p_.M * t;
  const int j = static_cast<int>(std::floor(u / 2.0)) + 1;
  if (j < 1 || j > p_.M) return 0.5;
  return 0.5 + height_ * bump(u - (2.0 * j - 1.0));
}

double HypothesisFamily::rho2_scale() const { return 1.5 * height_ / kPi; }
double HypothesisFamily::rho1_scale() const { return 3.0 / (kPi * p_.M); }

double HypothesisFamily::rho2(double x2) const {
  const double a = rho2_scale();
  const double y = x2 - rho2_centre();
  return std::cos(y / a) * fejer(y / (2.0 * a));
}

double HypothesisFamily::rho1(int j, double x1) const {
  if (j < 1 || j > p_.M) throw InputError("rho_j: index outside 1..M");
  const double a = rho1_scale();
  const double v = x1 - rho1_centre(j);
  return std::cos(v / a) * fejer(v / (2.0 * a));
}

double HypothesisFamily::rho_j(int j, double x1, double x2) const {
  return amp_ * rho2(x2) * rho1(j, x1);
}

namespace {

std::complex<double> modulated_fejer_fourier(double centre, double a, double t) {
  auto hat = [](double s) { return std::max(0.0, 1.0 - std::abs(s)); };
  const double h = a * (hat(2.0 * a * t - 2.0) + hat(2.0 * a * t + 2.0));
  return std::polar(h, t * centre);
}

}  // namespace

std::complex<double> HypothesisFamily::rho2_fourier(double t) const {
  return modulated_fejer_fourier(rho2_centre(), rho2_scale(), t);
}

std::complex<double> HypothesisFamily::rho1_fourier(int j, double t) const {
  if (j < 1 || j > p_.M) throw InputError("rho_j: index outside 1..M");
  return modulated_fejer_fourier(rho1_centre(j), rho1_scale(), t);
}

double HypothesisFamily::f0(double x1, double x2) const {
  if (!(x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0)) return 0.0;
  if (x2 <= 0.5) return 1.0 + 2.0 * p_.eta0;
  const double b = boundary_all(x1);
  if (x2 >= b) return 1.0 - p_.eta0 - b0_;
  return 1.0 + std::pow((b - x2) / p_.c2, inv_alpha_) -
         C_star_ * std::pow(static_cast<double>(p_.M), -p_.gamma * inv_alpha_);
}

double HypothesisFamily::f1(double x1, double x2) const {
  if (x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0) return 0.0;
  return b1_ / ((1.0 + x1 * x1) * (1.0 + x2 * x2));
}

double HypothesisFamily::f_omega(double x1, double x2, std::span<const int> omega) const {
  check_omega(omega);
  double s = 0.0;
  for (int j = 1; j <= p_.M; ++j) {
    if (omega[static_cast<std::size_t>(j - 1)] != 0) s += rho1(j, x1);
  }
  const double pert = s == 0.0 ? 0.0 : amp_ * rho2(x2) * s;
  return f0(x1, x2) + f1(x1, x2) + pert;
}

double HypothesisFamily::f_lower(double x1, double x2) const {
  double s = 0.0;
  for (int j = 1; j <= p_.M; ++j) s += std::abs(rho1(j, x1));
  return f0(x1, x2) + f1(x1, x2) - amp_ * std::abs(rho2(x2)) * s;
}

namespace {

class LowerBoundMember final : public DensityImpl {
 public:
  LowerBoundMember(std::shared_ptr<const HypothesisFamily> fam, std::vector<int> omega)
      : fam_(std::move(fam)), omega_(std::move(omega)) {
    envelope_ = proposal_ratio_bound();
  }

  DensityKind kind() const override { return DensityKind::lower_bound_member; }
  std::size_t dim() const override { return 2; }
  double eval(std::span<const double> x) const override {
    return fam_->f_omega(x[0], x[1], omega_);
  }
  Box support() const override { return Box::unit(2); }
  bool unbounded_tails() const override { return true; }
  std::optional<double> envelope() const override { return std::nullopt; }

  // Rejection from q = (3/4) 1_[0,1]^2 + f_1, whose outer part is a
  // product Cauchy law conditioned to leave the square.
  void draw(Rng& rng, std::span<double> out) const override {
    for (;;) {
      double x1, x2, q;
      if (rng.uniform() < 0.75) {
        x1 = rng.uniform();
        x2 = rng.uniform();
        q = 0.75;
      } else {
        do {
          x1 = std::tan(kPi * (rng.uniform() - 0.5));
          x2 = std::tan(kPi * (rng.uniform() - 0.5));
        } while (x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0);
        q = fam_->f1(x1, x2);
      }
      const double f = fam_->f_omega(x1, x2, omega_);
      if (rng.uniform() * envelope_ * q <= f) {
        out[0] = x1;
        out[1] = x2;
        return;
      }
    }
  }

  std::vector<double> column_breaks(double x1) const override {
    return {0.0, 0.5, fam_->boundary_all(x1), 1.0};
  }
  std::vector<double> row_breaks() const override {
    std::vector<double> br;
    const int M = fam_->M();
    for (int k = 0; 2 * k <= M; ++k) br.push_back(2.0 * k / M);
    return br;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "lower-bound member M=" << fam_->M() << " omega=";
    for (int w : omega_) os << w;
    return os.str();
  }

 private:
  // sup f_omega / q, from majorants of |rho_(2)| and sum_j |rho_j,(1)|.
  double proposal_ratio_bound() const {
    const auto& p = fam_->params();
    const double M = static_cast<double>(p.M);
    const double a2 = fam_->rho2_scale();
    const double a1 = fam_->rho1_scale();
    auto row_sum = [&](double x1) {
      double s = 0.0;
      for (int j = 1; j <= p.M; ++j) s += fejer_majorant((x1 - j / M) / (2.0 * a1));
      return s;
    };
    // Inside the square.
    double s1 = 0.0;
    for (int i = 0; i <= 4096; ++i) s1 = std::max(s1, row_sum(i / 4096.0));
    const double inside = (1.0 + 2.0 * p.eta0 + fam_->rho_amplitude() * s1 / (2.0 * kPi)) / 0.75;
    // Outside: (1 + x^2) times the majorants, on a symmetric log grid.
    double r1 = 0.0, r2 = 0.0;
    for (int i = -400; i <= 400; ++i) {
      const double mag = std::pow(10.0, i / 50.0);
      for (double sgn : {-1.0, 1.0}) {
        const double x = sgn * mag;
        r1 = std::max(r1, (1.0 + x * x) * row_sum(x));
        r1 = std::max(r1, (1.0 + (1.0 + x) * (1.0 + x)) * row_sum(1.0 + x));
        const double y2 = x;
        r2 = std::max(r2, (1.0 + (fam_->rho2_centre() + y2) * (fam_->rho2_centre() + y2)) *
                              fejer_majorant(y2 / (2.0 * a2)));
      }
    }
    for (int i = 0; i <= 4096; ++i) {
      const double x = i / 4096.0;
      r1 = std::max(r1, (1.0 + x * x) * row_sum(x));
      r2 = std::max(r2, (1.0 + x * x) * fejer_majorant((x - fam_->rho2_centre()) / (2.0 * a2)));
    }
    const double outside = 1.0 + fam_->rho_amplitude() * r1 * r2 / fam_->b1();
    return 1.1 * std::max(inside, outside);
  }

  std::shared_ptr<const HypothesisFamily> fam_;
  std::vector<int> omega_;
  double envelope_ = 1.0;
};

}  // namespace

DensityModel HypothesisFamily::member(std::vector<int> omega) const {
  check_omega(omega);
  for (int w : omega) {
    if (w != 0 && w != 1) throw InputError("family: omega entries must be 0 or 1");
  }
  return DensityModel(std::make_shared<LowerBoundMember>(
      std::make_shared<const HypothesisFamily>(*this), std::move(omega)));
}

DensityModel HypothesisFamily::g0() const { return uniform_box(Box::unit(2)); }

std::vector<std::pair<std::string, double>> HypothesisFamily::constants() const {
  return {{"M", static_cast<double>(p_.M)},
          {"tau", p_.tau},
          {"gamma", p_.gamma},
          {"alpha", p_.alpha},
          {"c2", p_.c2},
          {"eta0", p_.eta0},
          {"c_star", p_.c_star},
          {"C_star", C_star_},
          {"b0", b0_},
          {"b1", b1_},
          {"height", height_},
          {"rho_amplitude", amp_},
          {"boundary_mean", bbar_}};
}

// ---------------------------------------------------------------------------
// Noise laws

double noise_density(const CoordinateNoise& c, double x) {
  const double s = c.scale;
  const double ax = std::abs(x);
  switch (c.family) {
    case NoiseFamily::dirac:
      throw InputError("noise_density: dirac noise has no density");
    case NoiseFamily::laplace:
      return std::exp(-ax / s) / (2.0 * s);
    case NoiseFamily::gamma_symmetric:
      if (c.shape == 1.0) return std::exp(-ax / s) / (2.0 * s);
      if (c.shape == 2.0) return (s + ax) * std::exp(-ax / s) / (4.0 * s * s);
      {
        const double nu = c.shape - 0.5;
        return std::pow(ax / (2.0 * s), nu) * boost::math::cyl_bessel_k(nu, ax / s) /
               (s * std::sqrt(kPi) * boost::math::tgamma(c.shape));
      }
  }
  return 0.0;
}

double noise_cdf(const CoordinateNoise& c, double x) {
  const double s = c.scale;
  const double ax = std::abs(x);
  double upper = 0.0;  // P(eps > |x|)
  switch (c.family) {
    case NoiseFamily::dirac:
      throw InputError("noise_cdf: dirac noise has no density");
    case NoiseFamily::laplace:
      upper = 0.5 * std::exp(-ax / s);
      break;
    case NoiseFamily::gamma_symmetric:
      if (c.shape == 1.0) {
        upper = 0.5 * std::exp(-ax / s);
      } else if (c.shape == 2.0) {
        upper = (2.0 * s + ax) * std::exp(-ax / s) / (4.0 * s);
      } else {
        upper = 0.5 - integrate_1d([&](double y) { return noise_density(c, y); }, 0.0, ax).value;
      }
      break;
  }
  return x >= 0.0 ? 1.0 - upper : upper;
}

// ---------------------------------------------------------------------------
// chi^2

double Profile::operator()(double x) const {
  const double u = (x - x0) / dx;
  const auto n = static_cast<long>(values.size());
  const long i = static_cast<long>(std::floor(u));
  if (i < -1 || i > n - 1) return 0.0;
  auto v = [&](long k) { return (k < 0 || k >= n) ? 0.0 : values[static_cast<std::size_t>(k)]; };
  const double t = u - static_cast<double>(i);
  const double p0 = v(i - 1), p1 = v(i), p2 = v(i + 1), p3 = v(i + 2);
  // Catmull-Rom.
  return p1 + 0.5 * t *
                  (p2 - p0 +
                   t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

namespace {

double coordinate_cf(const CoordinateNoise& c, double t) {
  return c.family == NoiseFamily::dirac ? 1.0 : c.cf(t);
}

// (1/pi) int_0^inf H(t) cf(t) cos(t y) dt on the band [1/(2a), 3/(2a)],
// where H is the hat a (1 - |2at - 2|).
std::vector<double> profile_values(double a, const CoordinateNoise& noise,
                                   const std::vector<double>& offsets, int panels) {
  using Gauss = boost::math::quadrature::gauss<double, 16>;
  const auto& abs = Gauss::abscissa();
  const auto& wts = Gauss::weights();
  std::vector<double> t, w;
  for (int half = 0; half < 2; ++half) {
    const double lo = (0.5 + 0.5 * half) / a;
    const double width = 0.5 / a / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * width;
      for (std::size_t k = 0; k < abs.size(); ++k) {
        for (double sgn : {-1.0, 1.0}) {
          if (abs[k] == 0.0 && sgn < 0.0) continue;
          const double tk = mid + sgn * abs[k] * 0.5 * width;
          t.push_back(tk);
          const double hat = a * std::max(0.0, 1.0 - std::abs(2.0 * a * tk - 2.0));
          w.push_back(wts[k] * 0.5 * width * hat * coordinate_cf(noise, tk) / kPi);
        }
      }
    }
  }
  std::vector<double> out(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) s += w[k] * std::cos(t[k] * offsets[i]);
    out[i] = s;
  }
  return out;
}

}  // namespace

Profile smoothed_profile(double centre, double scale, const CoordinateNoise& noise,
                         double reach, double per_scale, int band_panels) {
  if (!(scale > 0.0) || !(reach > 0.0) || !(per_scale > 0.0) || band_panels < 2) {
    throw InputError("smoothed_profile: invalid resolution");
  }
  Profile p;
  p.dx = scale / per_scale;
  const auto half = static_cast<std::size_t>(std::ceil(reach * per_scale));
  p.x0 = centre - static_cast<double>(half) * p.dx;
  std::vector<double> offsets(2 * half + 1);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    offsets[i] = (static_cast<double>(i) - static_cast<double>(half)) * p.dx;
  }
  p.values = profile_values(scale, noise, offsets, band_panels);
  const auto coarse = profile_values(scale, noise, offsets, band_panels / 2);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    p.error = std::max(p.error, std::abs(p.values[i] - coarse[i]));
  }
  if (!all_finite(p.values)) throw NumericError("smoothed_profile: non-finite values");
  return p;
}

namespace {

struct Node {
  double x;
  double w;
};

// Composite Gauss-Legendre nodes on [lo, hi], panels of width <= h, split at
// the breaks.
std::vector<Node> composite_nodes(double lo, double hi, double h, std::span<const double> breaks,
                                  int order) {
  static const double a2[] = {0.5773502691896257};
  static const double w2[] = {1.0};
  static const double a4[] = {0.3399810435848563, 0.8611363115940526};
  static const double w4[] = {0.6521451548625461, 0.3478548451374538};
  const double* ab = order == 4 ? a4 : a2;
  const double* wt = order == 4 ? w4 : w2;
  const int half = order / 2;
  std::vector<Node> out;
  const auto pts = split_points(lo, hi, breaks);
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double len = pts[s + 1] - pts[s];
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h)));
    const double width = len / static_cast<double>(count);
    for (std::size_t p = 0; p < count; ++p) {
      const double mid = pts[s] + (static_cast<double>(p) + 0.5) * width;
      for (int k = 0; k < half; ++k) {
        out.push_back({mid - ab[k] * 0.5 * width, wt[k] * 0.5 * width});
        out.push_back({mid + ab[k] * 0.5 * width, wt[k] * 0.5 * width});
      }
    }
  }
  return out;
}

Chi2Result chi2_dirac(const HypothesisFamily& fam, int j, const Profile& p1, const Profile& p2,
                      int order) {
  std::vector<int> omega(static_cast<std::size_t>(fam.M()), 0);
  omega[static_cast<std::size_t>(j - 1)] = 1;
  const double amp = fam.rho_amplitude();
  std::vector<double> outer_breaks = {0.0, 1.0};
  for (int k = 1; 2 * k < fam.M(); ++k) outer_breaks.push_back(2.0 * k / fam.M());
  const auto outer = composite_nodes(p1.lo(), p1.hi(), p1.dx, outer_breaks, order);
  Chi2Result r;
  r.denominator_min = std::numeric_limits<double>::infinity();
  std::vector<double> rows;
  rows.reserve(outer.size());
  for (const Node& n1 : outer) {
    const double u1 = p1(n1.x);
    const std::vector<double> br = {0.0, 0.5, fam.boundary_all(n1.x), 1.0};
    const auto inner = composite_nodes(p2.lo(), p2.hi(), p2.dx, br, order);
    std::vector<double> terms;
    terms.reserve(inner.size());
    for (const Node& n2 : inner) {
      const double d = fam.f_omega(n1.x, n2.x, omega);
      if (!(d > 0.0)) throw NumericError("chi2: density of the alternative is not positive");
      r.denominator_min = std::min(r.denominator_min, d);
      const double num = amp * u1 * p2(n2.x);
      terms.push_back(n2.w * num * num / d);
    }
    r.nodes += inner.size();
    rows.push_back(n1.w * pairwise_sum(terms));
  }
  r.value = pairwise_sum(rows);
  return r;
}

// f_0 * eta + f_1 * eta on a sinh-stretched table around the bump.
class DenominatorTable {
 public:
  DenominatorTable(const HypothesisFamily& fam, const NoiseModel& noise, double c1, double a1,
                   double c2, double a2, double reach, std::size_t size)
      : fam_(fam), n1_(noise.coordinate(0)), n2_(noise.coordinate(1)), size_(size) {
    axis_[0] = {c1, a1, std::asinh(reach)};
    axis_[1] = {c2, a2, std::asinh(reach)};
    std::vector<double> xs[2];
    for (int ax = 0; ax < 2; ++ax) {
      xs[ax].resize(size);
      for (std::size_t i = 0; i < size; ++i) xs[ax][i] = node(ax, i);
    }
    std::vector<double> q1(size), p1(size), q2(size), p2(size);
    for (std::size_t i = 0; i < size; ++i) {
      q1[i] = cauchy_conv(n1_, xs[0][i], false);
      p1[i] = cauchy_conv(n1_, xs[0][i], true);
      q2[i] = cauchy_conv(n2_, xs[1][i], false);
      p2[i] = cauchy_conv(n2_, xs[1][i], true);
    }
    values_.resize(size * size);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t k = 0; k < size; ++k) {
        values_[i * size + k] = f0_conv(xs[0][i], xs[1][k]) +
                                fam.b1() * (q1[i] * q2[k] - p1[i] * p2[k]);
      }
    }
  }

  // Fractional table coordinate of x along an axis.
  double locate(int ax, double x) const {
    const Axis& a = axis_[ax];
    const double s = std::asinh((x - a.centre) / a.scale) / a.stretch;  // in [-1, 1]
    return std::clamp((s + 1.0) * 0.5 * static_cast<double>(size_ - 1), 0.0,
                      static_cast<double>(size_ - 1));
  }

  double at(double u, double v) const {
    const auto i = std::min(static_cast<std::size_t>(u), size_ - 2);
    const auto k = std::min(static_cast<std::size_t>(v), size_ - 2);
    const double fu = u - static_cast<double>(i), fv = v - static_cast<double>(k);
    const double* r0 = &values_[i * size_];
    const double* r1 = &values_[(i + 1) * size_];
    return (1.0 - fu) * ((1.0 - fv) * r0[k] + fv * r0[k + 1]) +
           fu * ((1.0 - fv) * r1[k] + fv * r1[k + 1]);
  }

 private:
  struct Axis {
    double centre, scale, stretch;
  };

  double node(int ax, std::size_t i) const {
    const Axis& a = axis_[ax];
    const double s = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(size_ - 1);
    return a.centre + a.scale * std::sinh(a.stretch * s);
  }

  // int p(y) eta(x - y) dy over R (or over [0, 1]), p(y) = 1/(1 + y^2).
  static double cauchy_conv(const CoordinateNoise& n, double x, bool unit) {
    auto f = [&](double y) { return noise_density(n, x - y) / (1.0 + y * y); };
    const double br[] = {x, 0.0, 1.0};
    QuadratureOptions opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-14;
    opt.max_depth = 16;
    const double inf = std::numeric_limits<double>::infinity();
    return unit ? integrate_1d(f, 0.0, 1.0, br, opt).value
                : integrate_1d(f, -inf, inf, br, opt).value;
  }

  double f0_conv(double x1, double x2) const {
    using Gauss = boost::math::quadrature::gauss<double, 8>;
    const auto& p = fam_.params();
    const double lower = 1.0 + 2.0 * p.eta0;
    const double upper = 1.0 - p.eta0 - fam_.b0();
    const double inv_alpha = std::isinf(p.alpha) ? 0.0 : 1.0 / p.alpha;
    const double shift = fam_.C_star() * std::pow(static_cast<double>(p.M), -p.gamma * inv_alpha);
    auto F2 = [&](double u) { return noise_cdf(n2_, u); };
    auto column = [&](double y1) {
      const double b = fam_.boundary_all(y1);
      double g = lower * (F2(x2) - F2(x2 - 0.5)) + upper * (F2(x2 - b) - F2(x2 - 1.0));
      if (b > 0.5) {
        g += Gauss::integrate(
            [&](double y2) {
              const double m = 1.0 + std::pow((b - y2) / p.c2, inv_alpha) - shift;
              return m * noise_density(n2_, x2 - y2);
            },
            0.5, b);
      }
      return noise_density(n1_, x1 - y1) * g;
    };
    std::vector<double> br = {x1};
    for (int k = 1; 2 * k < p.M; ++k) br.push_back(2.0 * k / p.M);
    QuadratureOptions opt;
    opt.rel_tol = 1e-7;
    opt.abs_tol = 1e-13;
    opt.max_depth = 14;
    return integrate_1d(column, 0.0, 1.0, br, opt).value;
  }

  const HypothesisFamily& fam_;
  CoordinateNoise n1_, n2_;
  std::size_t size_;
  Axis axis_[2];
  std::vector<double> values_;
};

Chi2Result chi2_smooth(const HypothesisFamily& fam, const Profile& p1, const Profile& p2,
                       const DenominatorTable& table, std::size_t stride) {
  const double amp = fam.rho_amplitude();
  const std::size_t n1 = p1.values.size(), n2 = p2.values.size();
  std::vector<double> v2(n2);
  for (std::size_t k = 0; k < n2; k += stride) {
    v2[k] = table.locate(1, p2.x0 + static_cast<double>(k) * p2.dx);
  }
  Chi2Result r;
  r.denominator_min = std::numeric_limits<double>::infinity();
  std::vector<double> rows, terms;
  for (std::size_t i = 0; i < n1; i += stride) {
    const double x1 = p1.x0 + static_cast<double>(i) * p1.dx;
    const double u1 = p1.values[i];
    const double loc = table.locate(0, x1);
    terms.clear();
    for (std::size_t k = 0; k < n2; k += stride) {
      const double num = amp * u1 * p2.values[k];
      const double d = table.at(loc, v2[k]) + num;
      if (!(d > 0.0)) throw NumericError("chi2: smoothed density is not positive");
      r.denominator_min = std::min(r.denominator_min, d);
      terms.push_back(num * num / d);
    }
    r.nodes += terms.size();
    rows.push_back(pairwise_sum(terms));
  }
  const double h1 = p1.dx * static_cast<double>(stride), h2 = p2.dx * static_cast<double>(stride);
  r.value = pairwise_sum(rows) * h1 * h2;
  return r;
}

}  // namespace

Chi2Result chi2(const HypothesisFamily& fam, int j, const NoiseModel& noise,
                const Chi2Options& opt) {
  if (j < 1 || j > fam.M()) throw InputError("chi2: index outside 1..M");
  if (noise.dim() != 2) throw InputError("chi2: noise must be two-dimensional");
  const bool d1 = noise.coordinate(0).family == NoiseFamily::dirac;
  const bool d2 = noise.coordinate(1).family == NoiseFamily::dirac;
  if (d1 != d2) throw InputError("chi2: noise must be dirac in both coordinates or in neither");

  const double a1 = fam.rho1_scale(), a2 = fam.rho2_scale();
  const double c1 = fam.rho1_centre(j), c2 = fam.rho2_centre();
  // Without noise the profiles decay like x^-2 and a quarter of the window suffices.
  const double reach = d1 ? opt.reach / 4.0 : opt.reach;
  const Profile p1 = smoothed_profile(c1, a1, noise.coordinate(0), reach, opt.per_scale,
                                      opt.band_panels);
  const Profile p2 = smoothed_profile(c2, a2, noise.coordinate(1), reach, opt.per_scale,
                                      opt.band_panels);
  auto peak = [](const Profile& p) {
    double m = 0.0;
    for (double v : p.values) m = std::max(m, std::abs(v));
    return m;
  };
  const double profile_rel = p1.error / peak(p1) + p2.error / peak(p2);

  Chi2Result fine, coarse;
  if (d1) {
    fine = chi2_dirac(fam, j, p1, p2, 4);
    coarse = chi2_dirac(fam, j, p1, p2, 2);
  } else {
    const DenominatorTable table(fam, noise, c1, a1, c2, a2, reach, opt.table);
    fine = chi2_smooth(fam, p1, p2, table, 1);
    coarse = chi2_smooth(fam, p1, p2, table, 2);
  }
  if (!std::isfinite(fine.value)) throw NumericError("chi2: non-finite value");
  fine.error = std::abs(fine.value - coarse.value) + 2.0 * profile_rel * fine.value;
  return fine;
}

// ---------------------------------------------------------------------------
// Rate exponents

const char* to_string(RateKind kind) {
  return kind == RateKind::lower_tau ? "tau" : "kappa";
}

const char* to_string(Metric metric) { return metric == Metric::d_delta ? "d_delta" : "d_fg"; }

double rate_exponent(RateKind kind, Metric metric, double alpha, std::span<const double> beta,
                     double gamma, std::size_t d) {
  if (d == 0 || beta.size() != d) throw InputError("rate_exponent: beta must have length d");
  if (!(alpha > 0.0) || !(gamma > 0.0) || std::isinf(gamma)) {
    throw InputError("rate_exponent: alpha and gamma must be positive");
  }
  for (double b : beta) {
    if (!(b >= 0.0) || std::isinf(b)) throw InputError("rate_exponent: beta must be non-negative");
  }
  const double dm1 = static_cast<double>(d - 1);
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) head += beta[i];
  const double last = beta[d - 1];
  const double all = head + last;
  const bool inf = std::isinf(alpha);
  if (kind == RateKind::lower_tau) {
    if (inf) return gamma / (gamma + dm1 + 2.0 * head + 2.0 * last * gamma);
    const double den = gamma * (2.0 + alpha) + dm1 * alpha + 2.0 * alpha * head +
                       2.0 * alpha * last * gamma;
    return (metric == Metric::d_delta ? gamma * alpha : gamma * (alpha + 1.0)) / den;
  }
  if (inf) return gamma / (gamma + dm1 + 2.0 * gamma * all);
  const double den = gamma * (alpha + 2.0) + dm1 * alpha + 2.0 * gamma * (alpha + 1.0) * all;
  return (metric == Metric::d_delta ? gamma * alpha : gamma * (alpha + 1.0)) / den;
}

std::pair<double, double> chi2_exponents(double alpha, double gamma, double beta1, double beta2) {
  const double inv_alpha = std::isinf(alpha) ? 0.0 : 1.0 / alpha;
  const double base = gamma * (2.0 * inv_alpha + 1.0) + 1.0;
  return {base + 2.0 * beta1 * gamma + 2.0 * beta2, base + 2.0 * beta1 + 2.0 * beta2 * gamma};
}

}  // namespace deconv_erm
