#include "deconv_erm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "deconv_erm/errors.hpp"
#include "deconv_erm/fragments.hpp"
#include "deconv_erm/lowerbound.hpp"

namespace deconv_erm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (!(amplitude > 0.0 && amplitude < 1.0)) throw ConfigError("config: amplitude must lie in (0, 1)");
  if (noise.dim() != 2) throw ConfigError("config: noise must have two coordinates");
  if (!(gamma > 1.0) || gamma > 2.0) throw ConfigError("config: gamma must lie in (1, 2]");
  if (!(holder_constant > 0.0)) throw ConfigError("config: L must be positive");
  if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
  if (J < 1) throw ConfigError("config: J must be positive");
  if (V < 2) throw ConfigError("config: V must be at least 2");
  if (bandwidth_c.size() != 2) throw ConfigError("config: bandwidth c needs two entries");
  for (double c : bandwidth_c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("config: bandwidth c must be positive");
  }
  if (!bandwidth_exponent.empty()) {
    if (bandwidth_exponent.size() != 2) throw ConfigError("config: bandwidth exponent needs two entries");
    for (double e : bandwidth_exponent) {
      // A negative exponent would make lambda increase with n.
      if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("config: bandwidth exponent must be >= 0");
    }
  }
  if (ladder.empty()) throw ConfigError("config: empty sample-size ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] == 0) throw ConfigError("config: sample sizes must be positive");
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw ConfigError("config: ladder must be strictly increasing");
  }
  if (!(m_ratio > 0.0)) throw ConfigError("config: m_ratio must be positive");
  if (replications < 1) throw ConfigError("config: replications must be >= 1");
  for (int i = 0; i <= 64; ++i) {
    const double b = boundary(i / 64.0);
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("config: boundary leaves (0, 1)");
  }
}

std::vector<double> ExperimentConfig::exponents() const {
  if (!bandwidth_exponent.empty()) return bandwidth_exponent;
  const auto beta = noise.beta();
  std::vector<double> e(2);
  for (std::size_t i = 0; i < 2; ++i) e[i] = 1.0 / (2.0 * beta[i] + 2.0 * gamma + 2.0);
  return e;
}

std::size_t ExperimentConfig::m_for(std::size_t n) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(m_ratio * static_cast<double>(n))));
}

std::vector<double> ExperimentConfig::lambda(std::size_t n, std::size_t m) const {
  const auto e = exponents();
  const double size = static_cast<double>(std::min(n, m));
  return {bandwidth_c[0] * std::pow(size, -e[0]), bandwidth_c[1] * std::pow(size, -e[1])};
}

DensityModel ExperimentConfig::first() const {
  return boundary_split(boundary, amplitude, SplitRole::first);
}

DensityModel ExperimentConfig::second() const {
  return boundary_split(boundary, amplitude, SplitRole::second);
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string("config: ") + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(std::string("config: unknown key '") + key + "' in " + where);
    }
  }
}

double number(const json& v, const char* what) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) throw ConfigError(std::string("config: ") + what + " must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const char* what) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, what));
    return out;
  }
  const double x = number(v, what);
  return {x, x};
}

CoordinateNoise parse_noise(const json& v) {
  check_keys(v, {"family", "scale", "shape"}, "noise");
  CoordinateNoise c;
  const auto fam = v.value("family", std::string("dirac"));
  if (fam == "dirac") {
    c.family = NoiseFamily::dirac;
  } else if (fam == "laplace") {
    c.family = NoiseFamily::laplace;
  } else if (fam == "gamma_symmetric") {
    c.family = NoiseFamily::gamma_symmetric;
  } else {
    throw ConfigError("config: unknown noise family '" + fam + "'");
  }
  if (v.contains("scale")) c.scale = number(v["scale"], "noise scale");
  if (v.contains("shape")) c.shape = number(v["shape"], "noise shape");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    check_keys(j, {"name", "model", "noise", "kernel", "class", "bandwidth", "ladder", "m_ratio",
                   "replications", "seed", "output"},
               "top level");
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m, {"boundary", "amplitude"}, "model");
      if (m.contains("boundary")) {
        const auto& b = m["boundary"];
        check_keys(b, {"offset", "slope", "amplitude", "frequency"}, "boundary");
        cfg.boundary.offset = number(b.value("offset", json(0.5)), "offset");
        cfg.boundary.slope = number(b.value("slope", json(0.0)), "slope");
        cfg.boundary.amplitude = number(b.value("amplitude", json(0.0)), "amplitude");
        cfg.boundary.frequency = number(b.value("frequency", json(1.0)), "frequency");
      }
      if (m.contains("amplitude")) cfg.amplitude = number(m["amplitude"], "model amplitude");
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      std::vector<CoordinateNoise> coords;
      if (n.is_array()) {
        for (const auto& c : n) coords.push_back(parse_noise(c));
      } else {
        const auto c = parse_noise(n);
        coords = {c, c};
      }
      cfg.noise = NoiseModel(std::move(coords));
    }
    if (j.contains("kernel")) {
      const auto& k = j["kernel"];
      check_keys(k, {"profile"}, "kernel");
      const auto p = k.value("profile", std::string("flat_top"));
      if (p == "flat_top") {
        cfg.profile = KernelProfile::flat_top;
      } else if (p == "triangular") {
        cfg.profile = KernelProfile::triangular;
      } else {
        throw ConfigError("config: unknown kernel profile '" + p + "'");
      }
    }
    if (j.contains("class")) {
      const auto& c = j["class"];
      check_keys(c, {"gamma", "L", "alpha", "J", "V"}, "class");
      if (c.contains("gamma")) cfg.gamma = number(c["gamma"], "gamma");
      if (c.contains("L")) cfg.holder_constant = number(c["L"], "L");
      if (c.contains("alpha")) cfg.alpha = number(c["alpha"], "alpha");
      if (c.contains("J")) cfg.J = c["J"].get<std::size_t>();
      if (c.contains("V")) cfg.V = c["V"].get<std::size_t>();
    }
    if (j.contains("bandwidth")) {
      const auto& b = j["bandwidth"];
      check_keys(b, {"c", "exponent"}, "bandwidth");
      if (b.contains("c")) cfg.bandwidth_c = numbers(b["c"], "bandwidth c");
      if (b.contains("exponent")) cfg.bandwidth_exponent = numbers(b["exponent"], "bandwidth exponent");
    }
    if (j.contains("ladder")) cfg.ladder = j["ladder"].get<std::vector<std::size_t>>();
    if (j.contains("m_ratio")) cfg.m_ratio = number(j["m_ratio"], "m_ratio");
    if (j.contains("replications")) cfg.replications = j["replications"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output")) {
      const auto& o = j["output"];
      check_keys(o, {"records", "summary", "plot"}, "output");
      cfg.records_path = o.value("records", std::string());
      cfg.summary_path = o.value("summary", std::string());
      cfg.plot_path = o.value("plot", std::string());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

LowerBoundConfig default_lowerbound_config() {
  LowerBoundConfig cfg;
  cfg.noise = NoiseModel({CoordinateNoise{NoiseFamily::laplace, 1.0, 1.0},
                          CoordinateNoise{NoiseFamily::gamma_symmetric, 1.0, 2.0}});
  return cfg;
}

LowerBoundConfig parse_lowerbound_config(const std::string& json_text) {
  LowerBoundConfig cfg = default_lowerbound_config();
  try {
    const json j = json::parse(json_text);
    check_keys(j, {"family", "noise", "sizes", "j"}, "top level");
    if (j.contains("family")) {
      const auto& f = j["family"];
      check_keys(f, {"M", "tau", "gamma", "alpha", "c2", "eta0", "c_star"}, "family");
      if (f.contains("M")) cfg.family.M = f["M"].get<int>();
      if (f.contains("tau")) cfg.family.tau = number(f["tau"], "tau");
      if (f.contains("gamma")) cfg.family.gamma = number(f["gamma"], "gamma");
      if (f.contains("alpha")) cfg.family.alpha = number(f["alpha"], "alpha");
      if (f.contains("c2")) cfg.family.c2 = number(f["c2"], "c2");
      if (f.contains("eta0")) cfg.family.eta0 = number(f["eta0"], "eta0");
      if (f.contains("c_star")) cfg.family.c_star = number(f["c_star"], "c_star");
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      std::vector<CoordinateNoise> coords;
      if (n.is_array()) {
        for (const auto& c : n) coords.push_back(parse_noise(c));
      } else {
        const auto c = parse_noise(n);
        coords = {c, c};
      }
      if (coords.size() != 2) throw ConfigError("config: noise must have two coordinates");
      cfg.noise = NoiseModel(std::move(coords));
    }
    if (j.contains("sizes")) cfg.sizes = j["sizes"].get<std::vector<int>>();
    if (j.contains("j")) cfg.j = j["j"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.sizes.empty()) throw ConfigError("config: empty M ladder");
  for (int M : cfg.sizes) {
    if (M < 2) throw ConfigError("config: M must be at least 2");
    if (cfg.j < 1 || cfg.j > M) throw ConfigError("config: j must lie in 1..M for every M");
  }
  // Validates the family parameters.
  static_cast<void>(HypothesisFamily(cfg.family));
  return cfg;
}

LowerBoundConfig load_lowerbound_config(const std::string& path) {
  return parse_lowerbound_config(read_file(path));
}

// ---------------------------------------------------------------------------
// Trials

TrialRunner::TrialRunner(ExperimentConfig cfg)
    : cfg_(std::move(cfg)),
      f_(cfg_.first()),
      g_(cfg_.second()),
      net_(cfg_.J, cfg_.V, cfg_.gamma, cfg_.holder_constant) {
  cfg_.validate();
}

std::shared_ptr<const DeconvolutionKernel> TrialRunner::kernel(std::size_t n, std::size_t m) const {
  const std::lock_guard<std::mutex> lock(mu_);
  auto& slot = kernels_[{n, m}];
  if (!slot) {
    slot = std::make_shared<const DeconvolutionKernel>(
        DeconvolutionKernel::build(cfg_.profile, cfg_.noise, cfg_.lambda(n, m)));
  }
  return slot;
}

TrialPair TrialRunner::run(std::size_t n, std::size_t m, std::uint64_t seed) const {
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  try {
    const Sample x1 = sample(f_, n, derive_seed(seed, 1, 0), 1);
    const Sample x2 = sample(g_, m, derive_seed(seed, 2, 0), 2);
    const Sample z1 = add_noise(x1, cfg_.noise, derive_seed(seed, 3, 0));
    const Sample z2 = add_noise(x2, cfg_.noise, derive_seed(seed, 4, 0));
    const auto k = kernel(n, m);

    TrialPair out;
    auto fill = [&](TrialRecord& r, const char* tag, const BoundaryFragment& b, double elapsed) {
      r.n = n;
      r.m = m;
      r.lambda1 = k->lambda(0);
      r.lambda2 = k->lambda(1);
      r.seed = seed;
      r.estimator = tag;
      r.excess_dfg = excess_d_fg(f_, g_, b);
      r.excess_ddelta = excess_d_delta(f_, g_, b);
      r.runtime_ms = elapsed;
    };
    auto t0 = Clock::now();
    const ErmResult d = minimize(z1, z2, *k, net_);
    fill(out.deconv, "deconv", d.boundary, ms(Clock::now() - t0));
    t0 = Clock::now();
    const ErmResult nv = naive_minimize(z1, z2, net_);
    fill(out.naive, "naive", nv.boundary, ms(Clock::now() - t0));
    return out;
  } catch (const Error& e) {
    std::ostringstream ctx;
    ctx << "trial n=" << n << " m=" << m << " seed=" << seed << ": " << e.what();
    throw Error(e.kind(), ctx.str());
  }
}

TrialPair run_trial(const ExperimentConfig& cfg, std::size_t n, std::size_t m, std::uint64_t seed) {
  return TrialRunner(cfg).run(n, m, seed);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t r) {
  return derive_seed(master, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, std::size_t workers,
                                        const Progress& progress) {
  const TrialRunner runner(cfg);
  struct Task {
    std::size_t n, m;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t n : cfg.ladder) {
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      tasks.push_back({n, cfg.m_for(n), trial_seed(cfg.seed, n, r)});
    }
  }
  std::vector<TrialPair> results(tasks.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size() || failed.load()) return;
      try {
        results[i] = runner.run(tasks[i].n, tasks[i].m, tasks[i].seed);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) {
        const std::lock_guard<std::mutex> lock(mu);
        progress(d, tasks.size());
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  if (count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<TrialRecord> records;
  records.reserve(2 * results.size());
  for (const auto& p : results) {
    records.push_back(p.deconv);
    records.push_back(p.naive);
  }
  std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.estimator < b.estimator;
  });
  return records;
}

std::size_t resolve_workers(std::optional<long long> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--workers must be at least 1");
    return static_cast<std::size_t>(*flag);
  }
  const char* env = std::getenv("DECONV_ERM_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("DECONV_ERM_WORKERS must be a positive integer");
  return static_cast<std::size_t>(v);
}

double expected_exponent(const ExperimentConfig& cfg, Expectation which) {
  auto beta = cfg.noise.beta();
  switch (which) {
    case Expectation::tau:
      return rate_exponent(RateKind::lower_tau, Metric::d_fg, cfg.alpha, beta, cfg.gamma, 2);
    case Expectation::kappa:
      return rate_exponent(RateKind::upper_kappa, Metric::d_fg, cfg.alpha, beta, cfg.gamma, 2);
    case Expectation::free:
      std::fill(beta.begin(), beta.end(), 0.0);
      return rate_exponent(RateKind::upper_kappa, Metric::d_fg, cfg.alpha, beta, cfg.gamma, 2);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Output

namespace {

json fit_json(const RateFit& f) {
  json pts = json::array();
  for (const auto& p : f.points) {
    pts.push_back({{"n", p.n}, {"mean", p.mean}, {"stderr", p.stderr_mean}, {"count", p.count}});
  }
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"stderr", f.stderr_slope},
          {"r2", f.r2},
          {"points", pts}};
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string summary_json(const ExperimentConfig& cfg, std::span<const TrialRecord> records) {
  nlohmann::ordered_json out;
  out["name"] = cfg.name;
  out["seed"] = cfg.seed;
  out["replications"] = cfg.replications;
  out["ladder"] = cfg.ladder;
  out["noise"] = cfg.noise.describe();
  out["gamma"] = cfg.gamma;
  out["alpha"] = finite_or_string(cfg.alpha);
  out["J"] = cfg.J;
  out["V"] = cfg.V;
  out["bandwidth_exponent"] = cfg.exponents();
  out["expected"] = {{"tau", expected_exponent(cfg, Expectation::tau)},
                     {"kappa", expected_exponent(cfg, Expectation::kappa)},
                     {"free", expected_exponent(cfg, Expectation::free)}};
  std::set<std::string> tags;
  for (const auto& r : records) tags.insert(r.estimator);
  nlohmann::ordered_json fits;
  for (const auto& tag : tags) {
    for (auto [metric, key] : {std::pair{ExcessMetric::d_fg, "d_fg"},
                               std::pair{ExcessMetric::d_delta, "d_delta"}}) {
      try {
        fits[tag][key] = fit_json(fit_rate(records, tag, metric));
      } catch (const NumericError& e) {
        fits[tag][key] = {{"error", e.what()}};
      }
    }
  }
  out["fits"] = fits;
  return out.dump(2) + "\n";
}

void write_plot_csv(std::ostream& os, std::span<const TrialRecord> records) {
  os << "estimator,n,count,mean_dfg,se_dfg,mean_ddelta,se_ddelta\n";
  std::map<std::pair<std::string, std::size_t>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) groups[{r.estimator, r.n}].push_back(&r);
  for (const auto& [key, rs] : groups) {
    auto stats = [&](auto field) {
      std::vector<double> v;
      for (const auto* r : rs) v.push_back(field(*r));
      const double c = static_cast<double>(v.size());
      const double mean = pairwise_sum(v) / c;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double se = v.size() > 1 ? std::sqrt(ss / (c - 1.0) / c) : 0.0;
      return std::pair{mean, se};
    };
    const auto [mf, sf] = stats([](const TrialRecord& r) { return r.excess_dfg; });
    const auto [md, sd] = stats([](const TrialRecord& r) { return r.excess_ddelta; });
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.10g,%.10g,%.10g,%.10g\n", key.first.c_str(),
                  key.second, rs.size(), mf, sf, md, sd);
    os << buf;
  }
}

}  // namespace deconv_erm
