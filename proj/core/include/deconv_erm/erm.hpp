#ifndef DECONV_ERM_ERM_HPP_
#define DECONV_ERM_ERM_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/risk.hpp"

namespace deconv_erm {

// Fragments with J bins and levels v / (V - 1), v = 0..V-1, whose first and
// second differences satisfy the (rounded) Hoelder budget of holder_check:
// |dv| <= first_bound, |d2v| <= second_bound in level steps.
class CandidateNetwork {
 public:
  CandidateNetwork(std::size_t J, std::size_t V, double gamma, double holder_constant);

  std::size_t bins() const { return J_; }
  std::size_t levels() const { return V_; }
  double gamma() const { return gamma_; }
  double holder_constant() const { return L_; }
  double step() const { return step_; }
  double level(std::size_t v) const {
    return static_cast<double>(v) / static_cast<double>(V_ - 1);
  }
  std::vector<double> level_values() const;
  int first_bound() const { return first_; }
  int second_bound() const { return second_; }
  // No constraint at all when both bounds cover the whole level range.
  bool unconstrained() const;

  bool admissible(const std::vector<int>& path) const;
  BoundaryFragment fragment(const std::vector<int>& path) const;

  // Override the derived bounds (tests of the separable case).
  void set_bounds(int first, int second) {
    first_ = first;
    second_ = second;
  }

 private:
  std::size_t J_;
  std::size_t V_;
  double gamma_;
  double L_;
  double step_;
  int first_ = 0;
  int second_ = 0;
};

// Empirical risk of the fragment with level indices p is
// sum_j cost(j, p_j) + constant.
struct CostMatrix {
  Eigen::MatrixXd cost;  // J x V
  double constant = 0.0;
};

CostMatrix per_bin_costs(const Sample& s1, const Sample& s2, const DeconvolutionKernel& k,
                         const CandidateNetwork& net);
// Same decomposition for the counting risk on the observed points.
CostMatrix counting_costs(const Sample& s1, const Sample& s2, const CandidateNetwork& net);

// sum_j cost(j, p_j), accumulated right to left (the order used by the DP).
double path_cost(const CostMatrix& c, const std::vector<int>& path);

struct DpResult {
  std::vector<int> path;
  double value = 0.0;  // path_cost(path) + constant
  std::size_t visited_states = 0;
  std::size_t ties = 0;
};

// Exact minimiser of path_cost over admissible paths. Ties go to the
// lexicographically smallest path (lower level index first, earliest bin
// first).
DpResult minimize_costs(const CostMatrix& c, const CandidateNetwork& net);

struct ErmResult {
  BoundaryFragment boundary;
  std::vector<int> path;
  RiskEvaluation risk;
  CostMatrix costs;
  std::size_t visited_states = 0;
  std::size_t ties = 0;
};

ErmResult minimize(const Sample& s1, const Sample& s2, const DeconvolutionKernel& k,
                   const CandidateNetwork& net);
// Counting-cost ERM on the noisy points, without deconvolution.
ErmResult naive_minimize(const Sample& s1, const Sample& s2, const CandidateNetwork& net);

}  // namespace deconv_erm

#endif  // DECONV_ERM_ERM_HPP_
