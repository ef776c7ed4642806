#ifndef DECONV_ERM_RATE_FIT_HPP_
#define DECONV_ERM_RATE_FIT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace deconv_erm {

// One estimator run on one pair of samples.
struct TrialRecord {
  std::size_t n = 0;
  std::size_t m = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint64_t seed = 0;
  std::string estimator;  // "deconv" or "naive"
  double excess_dfg = 0.0;
  double excess_ddelta = 0.0;
  double runtime_ms = 0.0;
};

inline constexpr const char* kRecordHeader =
    "n,m,lambda1,lambda2,seed,estimator,excess_dfg,excess_ddelta,runtime_ms";

void write_records_csv(std::ostream& os, std::span<const TrialRecord> records);
// Throws InputError on a malformed header or row.
std::vector<TrialRecord> read_records_csv(std::istream& is);

// Mean excess at one sample size.
struct RatePoint {
  double n = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

// log(mean) = intercept + slope log(n), ordinary least squares.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  std::vector<RatePoint> points;
};

enum class ExcessMetric { d_fg, d_delta };

// Groups records of one estimator by n. Throws NumericError with fewer
// than three sizes, fewer than `min_replications` records at a size, or a
// non-positive mean.
RateFit fit_rate(std::span<const TrialRecord> records, const std::string& estimator,
                 ExcessMetric metric = ExcessMetric::d_fg, std::size_t min_replications = 1);

// Same fit on precomputed points.
RateFit fit_points(std::vector<RatePoint> points);

}  // namespace deconv_erm

#endif  // DECONV_ERM_RATE_FIT_HPP_
