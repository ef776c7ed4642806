#ifndef DECONV_ERM_QUADRATURE_HPP_
#define DECONV_ERM_QUADRATURE_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace deconv_erm {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;   // summed Kronrod error estimates
  std::size_t pieces = 0;
};

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-11;
  unsigned max_depth = 12;
};

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;
// Breakpoints of the inner integrand for a given outer coordinate.
using BreakFn = std::function<std::vector<double>(double)>;

// Adaptive Gauss-Kronrod (15 point) on [a, b], split at every breakpoint
// strictly inside the interval. Infinite endpoints are allowed.
QuadratureResult integrate_1d(const Fn1& f, double a, double b,
                              std::span<const double> breaks = {},
                              const QuadratureOptions& opt = {});

// Iterated integral over [a1,b1] x [a2,b2]: outer in x1 split at
// outer_breaks, inner in x2 split at inner_breaks(x1).
QuadratureResult integrate_2d(const Fn2& f, double a1, double b1, double a2,
                              double b2, std::span<const double> outer_breaks,
                              const BreakFn& inner_breaks,
                              const QuadratureOptions& opt = {});

// Sorted, deduplicated points of `breaks` lying strictly inside (a, b),
// framed by a and b.
std::vector<double> split_points(double a, double b, std::span<const double> breaks);

}  // namespace deconv_erm

#endif  // DECONV_ERM_QUADRATURE_HPP_
