#include "deconv_erm/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "deconv_erm/common.hpp"
#include "deconv_erm/errors.hpp"

namespace deconv_erm {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("records: bad number '" + s + "'");
  }
  if (used != s.size()) throw InputError("records: bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw InputError("records: bad integer '" + s + "'");
  }
  if (used != s.size()) throw InputError("records: bad integer '" + s + "'");
  return v;
}

}  // namespace

void write_records_csv(std::ostream& os, std::span<const TrialRecord> records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << r.m << ',' << format_double(r.lambda1) << ','
       << format_double(r.lambda2) << ',' << r.seed << ',' << r.estimator << ','
       << format_double(r.excess_dfg) << ',' << format_double(r.excess_ddelta) << ','
       << format_double(r.runtime_ms) << '\n';
  }
}

std::vector<TrialRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordHeader) {
    throw InputError("records: missing or unexpected header");
  }
  std::vector<TrialRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw InputError("records: row with " + std::to_string(f.size()) + " fields");
    TrialRecord r;
    r.n = static_cast<std::size_t>(parse_u64(f[0]));
    r.m = static_cast<std::size_t>(parse_u64(f[1]));
    r.lambda1 = parse_double(f[2]);
    r.lambda2 = parse_double(f[3]);
    r.seed = parse_u64(f[4]);
    r.estimator = f[5];
    r.excess_dfg = parse_double(f[6]);
    r.excess_ddelta = parse_double(f[7]);
    r.runtime_ms = parse_double(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

RateFit fit_points(std::vector<RatePoint> points) {
  std::sort(points.begin(), points.end(),
            [](const RatePoint& a, const RatePoint& b) { return a.n < b.n; });
  if (points.size() < 3) throw NumericError("fit_rate: at least three sample sizes are needed");
  for (const auto& p : points) {
    if (!(p.mean > 0.0) || !(p.n > 0.0)) throw NumericError("fit_rate: non-positive mean excess");
  }
  const auto k = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += std::log(p.n);
    sy += std::log(p.mean);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.n) - mx, dy = std::log(p.mean) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw NumericError("fit_rate: sample sizes are not distinct");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& p : points) {
    const double e = std::log(p.mean) - (fit.intercept + fit.slope * std::log(p.n));
    sse += e * e;
  }
  fit.stderr_slope = k > 2.0 ? std::sqrt(sse / (k - 2.0) / sxx) : 0.0;
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.points = std::move(points);
  return fit;
}

RateFit fit_rate(std::span<const TrialRecord> records, const std::string& estimator,
                 ExcessMetric metric, std::size_t min_replications) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : records) {
    if (r.estimator != estimator) continue;
    by_n[r.n].push_back(metric == ExcessMetric::d_fg ? r.excess_dfg : r.excess_ddelta);
  }
  std::vector<RatePoint> pts;
  for (auto& [n, v] : by_n) {
    if (v.size() < min_replications) {
      throw NumericError("fit_rate: too few replications at n = " + std::to_string(n));
    }
    RatePoint p;
    p.n = static_cast<double>(n);
    p.count = v.size();
    const double c = static_cast<double>(v.size());
    p.mean = pairwise_sum(v) / c;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - p.mean) * (x - p.mean);
      p.stderr_mean = std::sqrt(ss / (c - 1.0) / c);
    }
    pts.push_back(p);
  }
  return fit_points(std::move(pts));
}

}  // namespace deconv_erm
