#ifndef DECONV_ERM_EXPERIMENTS_HPP_
#define DECONV_ERM_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/densities.hpp"
#include "deconv_erm/erm.hpp"
#include "deconv_erm/lowerbound.hpp"
#include "deconv_erm/rate_fit.hpp"

namespace deconv_erm {

struct ExperimentConfig {
  std::string name = "experiment";
  // Boundary-split pair on [0,1]^2.
  SplitBoundary boundary;
  double amplitude = 0.5;
  NoiseModel noise = NoiseModel::dirac(2);
  KernelProfile profile = KernelProfile::flat_top;
  // Class and candidate network.
  double gamma = 2.0;
  double holder_constant = 4.0;
  double alpha = std::numeric_limits<double>::infinity();
  std::size_t J = 32;
  std::size_t V = 513;
  // lambda_i(n) = c_i n^{-e_i}; e_i = 1 / (2 beta_i + 2 gamma + 2) unless given.
  std::vector<double> bandwidth_c = {0.5, 0.5};
  std::vector<double> bandwidth_exponent;
  std::vector<std::size_t> ladder = {250, 500, 1000, 2000, 4000};
  double m_ratio = 1.0;
  std::size_t replications = 30;
  std::uint64_t seed = 1;
  std::string records_path;
  std::string summary_path;
  std::string plot_path;

  // Throws ConfigError.
  void validate() const;
  std::vector<double> exponents() const;
  std::vector<double> lambda(std::size_t n, std::size_t m) const;
  std::size_t m_for(std::size_t n) const;
  DensityModel first() const;
  DensityModel second() const;
};

// JSON text or file; unknown keys are rejected. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct TrialPair {
  TrialRecord deconv;
  TrialRecord naive;
};

// Shares densities, network and per-size kernels across trials. Thread-safe.
class TrialRunner {
 public:
  explicit TrialRunner(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }
  const CandidateNetwork& network() const { return net_; }
  TrialPair run(std::size_t n, std::size_t m, std::uint64_t seed) const;
  std::shared_ptr<const DeconvolutionKernel> kernel(std::size_t n, std::size_t m) const;

 private:
  ExperimentConfig cfg_;
  DensityModel f_, g_;
  CandidateNetwork net_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const DeconvolutionKernel>>
      kernels_;
};

TrialPair run_trial(const ExperimentConfig& cfg, std::size_t n, std::size_t m, std::uint64_t seed);

// Seed of replication r at size n.
std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t r);

using Progress = std::function<void(std::size_t done, std::size_t total)>;

// All ladder sizes x replications on `workers` threads (0 -> 1). Records
// are sorted by (n, seed, estimator).
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, std::size_t workers,
                                        const Progress& progress = {});

// --workers, else DECONV_ERM_WORKERS, else 1. Throws ConfigError on a bad value.
std::size_t resolve_workers(std::optional<long long> flag);

enum class Expectation { tau, kappa, free };

// Exponent of the d_fg excess for the configured class and noise.
double expected_exponent(const ExperimentConfig& cfg, Expectation which);

// Lower-bound diagnostics: family parameters, noise and the M ladder of the
// chi^2 table. Default noise is Laplace(1) on x1 and symmetric Gamma(2, 1)
// on x2.
struct LowerBoundConfig {
  FamilyParams family;
  NoiseModel noise;
  std::vector<int> sizes = {4, 8, 16, 32};
  int j = 1;
};

LowerBoundConfig default_lowerbound_config();
LowerBoundConfig parse_lowerbound_config(const std::string& json_text);
LowerBoundConfig load_lowerbound_config(const std::string& path);

std::string summary_json(const ExperimentConfig& cfg, std::span<const TrialRecord> records);
// estimator,n,count,mean_dfg,se_dfg,mean_ddelta,se_ddelta
void write_plot_csv(std::ostream& os, std::span<const TrialRecord> records);

}  // namespace deconv_erm

#endif  // DECONV_ERM_EXPERIMENTS_HPP_
