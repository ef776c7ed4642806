#ifndef DECONV_ERM_RISK_HPP_
#define DECONV_ERM_RISK_HPP_

#include <span>
#include <vector>

#include <Eigen/Core>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/fragments.hpp"

namespace deconv_erm {

// h_{G_b}(z) = sum_j W_j(z1) H2(z2, level_j) with
// W_j(z1) = int_{bin j} (1/l1) K_eta,1((z1 - x1)/l1) dx1 and
// H2(z2, c) = int_0^c (1/l2) K_eta,2((z2 - x2)/l2) dx2.
double h_fragment(std::span<const double> z, const BoundaryFragment& b,
                  const DeconvolutionKernel& k);
// Smoothed indicator of the whole box, sum_j W_j(z1) H2(z2, 1).
double h_box(std::span<const double> z, std::size_t J, const DeconvolutionKernel& k);
// h_box - h_fragment.
double h_complement(std::span<const double> z, const BoundaryFragment& b,
                    const DeconvolutionKernel& k);

struct RiskEvaluation {
  double value = 0.0;
  double sum1 = 0.0;  // sum of h_complement over the first sample
  double sum2 = 0.0;  // sum of h_fragment over the second sample
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> lambda;
};

// R_{n,m}(G) = (1/2)[(1/n) sum h_{K\G}(Z1_i) + (1/m) sum h_G(Z2_i)].
RiskEvaluation empirical_risk(const Sample& s1, const Sample& s2, const BoundaryFragment& b,
                              const DeconvolutionKernel& k);

// (1/2)[(1/n) #{X1_i in K \ G} + (1/m) #{X2_i in G}], points read as they are.
double counting_risk(const Sample& s1, const Sample& s2, const BoundaryFragment& b);

// R^lambda(G) = (1/2)[int f (K_l * 1_{K\G}) + int g (K_l * 1_G)] with the
// base kernel K.
double smoothed_risk(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
                     const DeconvolutionKernel& k, double rel_tol = 1e-5);

// bayes_risk - smoothed_risk.
double bias(const DensityModel& f, const DensityModel& g, const BoundaryFragment& b,
            const DeconvolutionKernel& k, double rel_tol = 1e-5);

// W_j(Z_i1) for every point of the sample: n x J.
Eigen::MatrixXd bin_windows(const Sample& s, std::size_t J, const DeconvolutionKernel& k);
// H2(Z_i2, c) for every point and every level in `levels`: n x levels.size().
Eigen::MatrixXd level_windows(const Sample& s, std::span<const double> levels,
                              const DeconvolutionKernel& k);

}  // namespace deconv_erm

#endif  // DECONV_ERM_RISK_HPP_
