#include "deconv_erm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "deconv_erm/errors.hpp"

namespace deconv_erm {

std::vector<double> split_points(double a, double b, std::span<const double> breaks) {
  std::vector<double> pts{a};
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin() + 1, pts.end() - 1);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

QuadratureResult integrate_1d(const Fn1& f, double a, double b,
                              std::span<const double> breaks,
                              const QuadratureOptions& opt) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  QuadratureResult out;
  if (!(b > a)) return out;
  const auto pts = split_points(a, b, breaks);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    double v = 0.0;
    try {
      v = GK::integrate(f, pts[i], pts[i + 1], opt.max_depth, opt.rel_tol, &err);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "quadrature failed on [" << pts[i] << ", " << pts[i + 1] << "]: " << e.what();
      throw NumericError(os.str());
    }
    // Boost reports the error on the reference interval [-1, 1].
    if (std::isfinite(pts[i]) && std::isfinite(pts[i + 1])) err *= 0.5 * (pts[i + 1] - pts[i]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "quadrature produced a non-finite value on [" << pts[i] << ", " << pts[i + 1]
         << "]";
      throw NumericError(os.str());
    }
    out.value += v;
    out.error += err;
    ++out.pieces;
  }
  const double limit = std::max({1e-10, opt.abs_tol * static_cast<double>(out.pieces),
                                 1e3 * opt.rel_tol * std::abs(out.value)});
  if (out.error > limit) {
    std::ostringstream os;
    os << "quadrature did not converge on [" << a << ", " << b << "]: value " << out.value
       << ", error estimate " << out.error;
    throw NumericError(os.str());
  }
  return out;
}

QuadratureResult integrate_2d(const Fn2& f, double a1, double b1, double a2,
                              double b2, std::span<const double> outer_breaks,
                              const BreakFn& inner_breaks,
                              const QuadratureOptions& opt) {
  QuadratureOptions inner_opt = opt;
  inner_opt.rel_tol = opt.rel_tol * 0.1;
  double inner_error = 0.0;
  auto column = [&](double x1) {
    const std::vector<double> br = inner_breaks ? inner_breaks(x1) : std::vector<double>{};
    auto g = [&](double x2) { return f(x1, x2); };
    const auto r = integrate_1d(g, a2, b2, br, inner_opt);
    inner_error = std::max(inner_error, r.error);
    return r.value;
  };
  auto out = integrate_1d(column, a1, b1, outer_breaks, opt);
  out.error += inner_error * (b1 - a1);
  return out;
}

}  // namespace deconv_erm
