#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deconv_erm/deconv_kernel.hpp"
#include "deconv_erm/errors.hpp"
#include "deconv_erm/experiments.hpp"
#include "deconv_erm/lowerbound.hpp"
#include "deconv_erm/rate_fit.hpp"
#include "verify.hpp"

namespace de = deconv_erm;
using nlohmann::ordered_json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int exit_code(de::ErrorKind kind) {
  switch (kind) {
    case de::ErrorKind::input:
    case de::ErrorKind::configuration:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw de::ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long long> workers;
};

int cmd_simulate(const Common& c) {
  if (c.config.empty()) throw de::ConfigError("simulate: --config is required");
  de::ExperimentConfig cfg = de::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  const std::string records = !c.out.empty() ? c.out : cfg.records_path;
  if (records.empty()) throw de::ConfigError("simulate: no output path (--out or output.records)");
  const std::size_t workers = de::resolve_workers(c.workers);
  const auto recs = de::run_experiment(cfg, workers, [](std::size_t done, std::size_t total) {
    if (done == total || done % 50 == 0) std::fprintf(stderr, "\r%zu/%zu trials", done, total);
    if (done == total) std::fprintf(stderr, "\n");
  });
  {
    std::ofstream out(records);
    if (!out) throw de::ConfigError("cannot write '" + records + "'");
    de::write_records_csv(out, recs);
  }
  const std::string summary = cfg.summary_path.empty() ? sibling(records, ".summary.json") : cfg.summary_path;
  write_text(summary, de::summary_json(cfg, recs));
  const std::string plot = cfg.plot_path.empty() ? sibling(records, ".plot.csv") : cfg.plot_path;
  std::ostringstream ps;
  de::write_plot_csv(ps, recs);
  write_text(plot, ps.str());
  std::cout << "wrote " << recs.size() << " records to " << records << "\n";
  return 0;
}

int cmd_rates(const Common& c, const std::string& in, const std::string& expect, double tolerance,
              const std::string& estimator, const std::string& metric) {
  if (in.empty()) throw de::ConfigError("rates: --in is required");
  std::ifstream is(in);
  if (!is) throw de::ConfigError("rates: cannot open '" + in + "'");
  const auto recs = de::read_records_csv(is);
  const auto m = metric == "d_delta" ? de::ExcessMetric::d_delta : de::ExcessMetric::d_fg;
  const auto fit = de::fit_rate(recs, estimator, m);
  std::cout << "estimator " << estimator << ", metric " << metric << "\n";
  for (const auto& p : fit.points) {
    std::printf("  n = %-8.0f mean = %.6g  stderr = %.3g  (%zu runs)\n", p.n, p.mean, p.stderr_mean, p.count);
  }
  std::printf("slope %.4f +- %.4f, R^2 %.4f\n", fit.slope, fit.stderr_slope, fit.r2);
  if (expect.empty()) return 0;
  if (c.config.empty()) throw de::ConfigError("rates: --expect needs --config for the class and noise");
  const auto cfg = de::load_config(c.config);
  const auto which = expect == "tau" ? de::Expectation::tau
                     : expect == "kappa" ? de::Expectation::kappa
                                         : de::Expectation::free;
  const double target = -de::expected_exponent(cfg, which);
  const bool ok = std::abs(fit.slope - target) <= tolerance * std::abs(target);
  std::printf("expected %s slope %.4f, tolerance %.0f%%: %s\n", expect.c_str(), target, 100.0 * tolerance,
              ok ? "PASS" : "FAIL");
  return ok ? 0 : kExitFail;
}

int cmd_verify(const Common& c) {
  const auto cfg = c.config.empty() ? de::parse_config("{}") : de::load_config(c.config);
  const int failures = deconv_erm::cli::run_verify(cfg, std::cout);
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << "\n";
  return failures == 0 ? 0 : kExitFail;
}

int cmd_lowerbound(const Common& c) {
  const auto cfg = c.config.empty() ? de::default_lowerbound_config() : de::load_lowerbound_config(c.config);
  ordered_json out;
  out["noise"] = cfg.noise.describe();
  out["j"] = cfg.j;
  ordered_json rows = ordered_json::array();
  std::vector<de::RatePoint> pts;
  for (int M : cfg.sizes) {
    de::FamilyParams p = cfg.family;
    p.M = M;
    const de::HypothesisFamily fam(p);
    const auto r = de::chi2(fam, cfg.j, cfg.noise);
    ordered_json consts;
    for (const auto& [k, v] : fam.constants()) consts[k] = v;
    rows.push_back({{"M", M}, {"chi2", r.value}, {"error", r.error},
                    {"denominator_min", r.denominator_min}, {"constants", consts}});
    pts.push_back({static_cast<double>(M), r.value, r.error, 1});
    std::printf("M = %-4d chi2 = %.6e  (error %.2e)\n", M, r.value, r.error);
  }
  out["table"] = rows;
  const auto beta = cfg.noise.beta();
  const auto [e1, e2] = de::chi2_exponents(cfg.family.alpha, cfg.family.gamma, beta[0], beta[1]);
  out["candidates"] = {-e1, -e2};
  if (pts.size() >= 3) {
    const auto fit = de::fit_points(pts);
    out["slope"] = fit.slope;
    out["r2"] = fit.r2;
    std::printf("slope %.4f (R^2 %.5f); candidates %.4f and %.4f\n", fit.slope, fit.r2, -e1, -e2);
  }
  if (!c.out.empty()) write_text(c.out, out.dump(2) + "\n");
  return 0;
}

int cmd_kernel_dump(const Common& c, double lambda, const std::string& noise, double scale,
                    double shape, const std::string& profile) {
  de::CoordinateNoise cn;
  if (noise == "laplace") {
    cn = {de::NoiseFamily::laplace, scale, 1.0};
  } else if (noise == "gamma_symmetric") {
    cn = {de::NoiseFamily::gamma_symmetric, scale, shape};
  } else {
    cn = {de::NoiseFamily::dirac, 0.0, 1.0};
  }
  const auto prof = profile == "triangular" ? de::KernelProfile::triangular : de::KernelProfile::flat_top;
  const auto k = de::DeconvolutionKernel::build(prof, de::NoiseModel({cn}), {lambda});
  std::ostringstream os;
  os << "u,kernel,cumulative,base\n";
  const auto& t = k.table(0);
  const auto& b = k.base_table(0);
  char buf[160];
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = t.node(i);
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.12g\n", u, t.values()[i], t.cumulative(u),
                  b.values()[i]);
    os << buf;
  }
  if (c.out.empty()) {
    std::cout << os.str();
  } else {
    write_text(c.out, os.str());
  }
  const auto& d = k.diagnostics(0);
  std::fprintf(stderr, "imaginary residue %.3g, truncated mass %.3g, interpolation error %.3g\n",
               d.imag_residue, d.truncated_mass, d.interpolation_error);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deconvolution ERM for classification with noisy inputs"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration");
    sub->add_option("--out", common.out, "Output path");
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--workers", common.workers, "Worker threads (else DECONV_ERM_WORKERS)");
  };
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment and write records");
  add_common(simulate);
  auto* rates = app.add_subcommand("rates", "Fit log excess against log n and compare to theory");
  add_common(rates);
  std::string in, expect, estimator = "deconv", metric = "d_fg";
  double tolerance = 0.25;
  rates->add_option("--in", in, "Records CSV");
  rates->add_option("--expect", expect, "Reference exponent")->check(CLI::IsMember({"tau", "kappa", "free"}));
  rates->add_option("--tolerance", tolerance, "Relative tolerance on the slope")->check(CLI::PositiveNumber);
  rates->add_option("--estimator", estimator, "deconv or naive")->check(CLI::IsMember({"deconv", "naive"}));
  rates->add_option("--metric", metric, "d_fg or d_delta")->check(CLI::IsMember({"d_fg", "d_delta"}));
  auto* verify = app.add_subcommand("verify", "Run quick property checks of every module");
  add_common(verify);
  auto* lowerbound = app.add_subcommand("lowerbound", "Hypothesis family constants and chi^2 table");
  add_common(lowerbound);
  auto* dump = app.add_subcommand("kernel-dump", "Tabulated deconvolution kernel as CSV");
  add_common(dump);
  double lambda = 0.1, scale = 0.25, shape = 1.0;
  std::string noise = "laplace", profile = "flat_top";
  dump->add_option("--lambda", lambda, "Bandwidth")->check(CLI::PositiveNumber);
  dump->add_option("--noise", noise, "dirac, laplace or gamma_symmetric")
      ->check(CLI::IsMember({"dirac", "laplace", "gamma_symmetric"}));
  dump->add_option("--scale", scale, "Noise scale")->check(CLI::PositiveNumber);
  dump->add_option("--shape", shape, "Gamma shape")->check(CLI::PositiveNumber);
  dump->add_option("--profile", profile, "flat_top or triangular")
      ->check(CLI::IsMember({"flat_top", "triangular"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    if (*simulate) return cmd_simulate(common);
    if (*rates) return cmd_rates(common, in, expect, tolerance, estimator, metric);
    if (*verify) return cmd_verify(common);
    if (*lowerbound) return cmd_lowerbound(common);
    if (*dump) return cmd_kernel_dump(common, lambda, noise, scale, shape, profile);
  } catch (const de::Error& e) {
    std::cerr << "error (" << de::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
