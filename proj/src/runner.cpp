#include "slipstokes/runner.hpp"

#include "slipstokes/control.hpp"
#include "slipstokes/field_io.hpp"
#include "slipstokes/observability.hpp"
#include "slipstokes/random.hpp"
#include "slipstokes/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace slipstokes {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kSingleModeMargin = 1e-14;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Collects every file an experiment writes; names are plain file names
/// inside the output directory.
class Artifacts {
 public:
  explicit Artifacts(const RunConfig& config) : config_(config), dir_(config.out_dir) {
    fs::create_directories(dir_);
  }

  bool wants(std::string_view format) const { return config_.wants(format); }

  std::ofstream open(const std::string& name, bool binary = false) {
    names_.push_back(name);
    std::ofstream out(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::Internal, "cannot write artifact '" + name + "'");
    return out;
  }

  void field(const std::string& stem, const VelocityField& u) {
    if (wants("bin")) {
      auto out = open(stem + ".bin", true);
      write_binary(out, u);
    }
    if (wants("csv")) {
      auto out = open(stem + ".csv");
      write_csv(out, u);
    }
  }

  void report(const std::string& name, const json& body) {
    if (!wants("json")) return;
    auto out = open(name);
    out << body.dump(2) << "\n";
  }

  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  const RunConfig& config_;
  fs::path dir_;
  std::vector<std::string> names_;
};

class Checks {
 public:
  void at_most(const std::string& name, double value, double limit) {
    add(name, value, limit, "<=", value <= limit);
  }
  void at_least(const std::string& name, double value, double limit) {
    add(name, value, limit, ">=", value >= limit);
  }
  void holds(const std::string& name, bool ok) {
    list_.push_back({{"name", name}, {"passed", ok}});
    passed_ = passed_ && ok;
  }

  const json& list() const { return list_; }
  bool passed() const { return passed_; }

 private:
  void add(const std::string& name, double value, double limit, const char* op, bool ok) {
    ok = ok && std::isfinite(value);
    list_.push_back({{"name", name},
                     {"value", std::isfinite(value) ? json(value) : json(nullptr)},
                     {"limit", limit},
                     {"relation", op},
                     {"passed", ok}});
    passed_ = passed_ && ok;
  }

  json list_ = json::array();
  bool passed_ = true;
};

struct Setup {
  Grid grid;
  OperatorSet ops;
  std::optional<EigenBasis> basis;
  RegionMask region;

  explicit Setup(const RunConfig& c)
      : grid(build_grid(c.n)),
        ops(grid),
        region(build_region_mask(grid, region_shape(c.region))) {
    if (c.n <= kMaxSpectralN) basis.emplace(eigendecompose(ops));
  }
};

TimeSet time_set_of(const RunConfig& c) { return build_time_set(c.time_set, c.horizon); }

/// Initial stream coefficients: unit-velocity mode, or a seeded random draw
/// on stream `stream`.
Eigen::VectorXd initial_modal(const RunConfig& c, const EigenBasis& basis, std::uint64_t stream) {
  if (c.initial.kind == "mode") {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(c.initial.mode + 1);
    a[c.initial.mode] = 1.0 / std::sqrt(basis.eigenvalue(c.initial.mode));
    return a;
  }
  SampleRng rng(c.seed, stream);
  return random_stream_modal(basis, rng, std::min(c.initial.modes, basis.size()));
}

/// Tensor sine modes ordered by their closed-form eigenvalue, for grids
/// beyond the eigenbasis limit.
NodeField sine_stream(const RunConfig& c, const Grid& grid) {
  const int n = grid.n;
  const double h = grid.h;
  struct Mode {
    double lambda;
    int j, k;
  };
  std::vector<Mode> modes;
  for (int k = 1; k <= n; ++k) {
    for (int j = 1; j <= n; ++j) {
      const double sj = std::sin(j * M_PI * h / 2.0), sk = std::sin(k * M_PI * h / 2.0);
      modes.push_back({4.0 / (h * h) * (sj * sj + sk * sk), j, k});
    }
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.lambda < b.lambda; });
  const int count = c.initial.kind == "mode" ? 1 : std::min(c.initial.modes, n * n);
  SampleRng rng(c.seed, 0);
  NodeField psi = NodeField::zeros(grid);
  for (int m = 0; m < count; ++m) {
    const Mode& mode = modes[c.initial.kind == "mode" ? c.initial.mode : m];
    const double coeff =
        (c.initial.kind == "mode" ? 1.0 : rng.normal()) / std::sqrt(mode.lambda);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        psi.values[grid.node_index(i, j)] += coeff * 2.0 * std::sin(mode.j * M_PI * grid.line(i + 1)) *
                                             std::sin(mode.k * M_PI * grid.line(j + 1));
      }
    }
  }
  return psi;
}

json tolerance_json(const Tolerances& t) {
  return {{"energy", t.energy},
          {"log_convexity", t.log_convexity},
          {"single_mode_margin", kSingleModeMargin},
          {"duality", t.duality},
          {"rho", t.rho},
          {"bang_bang", t.bang_bang},
          {"dispersion", t.dispersion},
          {"holdout_violations", t.holdout_violations},
          {"refit_growth", t.refit_growth},
          {"stream_recovery", kStreamTolerance}};
}

// ---------------------------------------------------------------------------

void run_simulate(const RunConfig& c, Setup& s, Artifacts& out, json& metrics, Checks& checks) {
  const std::vector<double> samples = uniform_schedule(c.horizon, c.simulate.samples);
  SolveTrace trace;
  std::vector<double> residual(samples.size(), std::numeric_limits<double>::quiet_NaN());
  if (s.basis) {
    const EigenBasis& basis = *s.basis;
    const Eigen::VectorXd a0 = initial_modal(c, basis, 0);
    const VelocityField u0 = velocity_from_modal(basis, s.ops, a0);
    trace = solve_stokes_free(basis, s.ops, u0, c.horizon, samples, &s.region);
    const Eigen::ArrayXd lambda = basis.eigenvalues().head(a0.size()).array();
    const Eigen::ArrayXd weight = lambda * a0.array().square();
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const double dissipated = (weight * -(-2.0 * lambda * samples[k]).unaryExpr(
                                                  [](double x) { return std::expm1(x); }))
                                    .sum();
      residual[k] = std::abs(trace.norm_domain[k] * trace.norm_domain[k] + dissipated -
                             trace.data_energy) /
                    trace.data_energy;
    }
    const double energy = energy_identity_residual(trace);
    metrics["method"] = "eigenbasis";
    metrics["energy_residual"] = energy;
    checks.at_most("energy_identity", energy, c.tolerances.energy);
    if (c.initial.kind == "mode") {
      const double lambda_k = basis.eigenvalue(c.initial.mode);
      const double expected = std::exp(-lambda_k * c.horizon);
      const double ratio = trace.norm_domain.back() / trace.norm_domain.front();
      const double rel = std::abs(ratio - expected) / expected;
      metrics["decay_ratio"] = ratio;
      metrics["decay_relative_error"] = rel;
      checks.at_most("mode_decay_rate", rel, 1e-10);
    }
  } else {
    const NodeField psi0 = sine_stream(c, s.grid);
    const VelocityField u0 = s.ops.curl(psi0);
    trace = solve_stokes_free_stepping(s.ops, u0, c.horizon, c.simulate.steps, samples, &s.region);
    metrics["method"] = "crank-nicolson";
    metrics["steps"] = c.simulate.steps;
    bool decreasing = true;
    for (std::size_t k = 1; k < trace.norm_domain.size(); ++k) {
      decreasing = decreasing && trace.norm_domain[k] <= trace.norm_domain[k - 1] * (1 + 1e-12);
    }
    checks.holds("energy_nonincreasing", decreasing);
  }
  metrics["initial_norm"] = trace.norm_domain.front();
  metrics["final_norm"] = trace.norm_domain.back();
  metrics["final_norm_region"] = trace.norm_region.back();

  if (out.wants("csv")) {
    auto csv = out.open("trace.csv");
    csv << "t,norm_domain,norm_region,energy_residual\n";
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      csv << fmt(trace.times[k]) << ',' << fmt(trace.norm_domain[k]) << ','
          << fmt(trace.norm_region[k]) << ',' << fmt(residual[k]) << '\n';
    }
  }
  out.field("velocity_T", trace.velocity(trace.times.size() - 1, s.ops));
}

void run_diagnostics(const RunConfig& c, Setup& s, Artifacts& out, json& metrics,
                     Checks& checks) {
  const EigenBasis& basis = *s.basis;
  const std::vector<double> times = uniform_schedule(c.horizon, c.diagnostics.time_samples);
  double min_margin = std::numeric_limits<double>::infinity();
  int monotone_failures = 0;
  int chain_failures = 0;
  std::ostringstream csv;
  csv << "case,t1,t2,margin,monotone,chain_ok,smoothing,interpolation,elliptic,midpoint,terminal\n";
  for (int k = 0; k < c.diagnostics.cases; ++k) {
    SampleRng rng(c.seed, static_cast<std::uint64_t>(k));
    const NodeField psi0 =
        basis.synthesize(random_stream_modal(basis, rng, std::min(c.initial.modes, basis.size())));
    const EnergySeries series = energy_series(basis, psi0, times);
    const double margin = log_convexity_margin(series);
    const bool monotone = gradient_energy_monotonicity(series).ok();
    min_margin = std::min(min_margin, margin);
    monotone_failures += monotone ? 0 : 1;

    const double t1 = rng.uniform(0.0, 0.5 * c.horizon);
    const double t2 = std::min(c.horizon, t1 + rng.uniform(0.05 * c.horizon, 0.5 * c.horizon));
    const ChainReport chain = interpolation_chain_check(basis, s.ops, psi0, t1, t2, s.region);
    chain_failures += chain.all_satisfied() ? 0 : 1;
    csv << k << ',' << fmt(t1) << ',' << fmt(t2) << ',' << fmt(margin) << ',' << monotone << ','
        << chain.all_satisfied();
    for (const auto& check : chain.checks) csv << ',' << fmt(check.lhs / check.rhs);
    csv << '\n';
  }
  const EnergySeries single = energy_series(basis, basis.mode(0), times);
  const double single_margin = log_convexity_margin(single);

  metrics["cases"] = c.diagnostics.cases;
  metrics["min_log_convexity_margin"] = min_margin;
  metrics["single_mode_margin"] = single_margin;
  metrics["monotonicity_failures"] = monotone_failures;
  metrics["chain_violations"] = chain_failures;
  checks.at_least("log_convexity", min_margin, -c.tolerances.log_convexity);
  checks.at_most("single_mode_margin", std::abs(single_margin), kSingleModeMargin);
  checks.at_most("energy_monotonicity_failures", monotone_failures, 0);
  checks.at_most("interpolation_chain_violations", chain_failures, 0);
  if (out.wants("csv")) out.open("diagnostics.csv") << csv.str();
}

void run_uc_fit(const RunConfig& c, Setup& s, Artifacts& out, json& metrics, Checks& checks) {
  const EigenBasis& basis = *s.basis;
  UCSampler sampler;
  sampler.modes = c.uc_fit.modes;
  sampler.horizon = c.horizon;
  const auto fit_set = draw_uc_batch(basis, s.ops, s.region, sampler, c.seed, 0, c.uc_fit.samples);
  const auto holdout = draw_uc_batch(basis, s.ops, s.region, sampler, c.seed,
                                     static_cast<std::uint64_t>(c.uc_fit.samples), c.uc_fit.holdout);
  const UCFit fit = fit_uc_constants(fit_set);
  const auto violations = uc_violations(fit, holdout);
  double refit = fit.n_const;
  for (std::size_t i : violations) refit = std::max(refit, required_constant(holdout[i], fit.alpha));
  const double growth = refit / fit.n_const - 1.0;

  metrics["alpha"] = fit.alpha;
  metrics["N"] = fit.n_const;
  metrics["samples_used"] = fit.used;
  metrics["samples_excluded"] = fit.excluded;
  metrics["holdout"] = c.uc_fit.holdout;
  metrics["holdout_violations"] = violations.size();
  metrics["refit_N"] = refit;
  metrics["refit_growth"] = growth;
  checks.holds("alpha_in_open_unit_interval", fit.alpha > 0.0 && fit.alpha < 1.0);
  checks.holds("N_finite", std::isfinite(fit.n_const) && fit.n_const > 0.0);
  checks.at_most("holdout_violations", static_cast<double>(violations.size()),
                 c.tolerances.holdout_violations);
  checks.at_most("refit_growth", growth, c.tolerances.refit_growth);

  json table = json::array();
  for (const auto& [alpha, n_const] : fit.table) table.push_back({alpha, n_const});
  out.report("uc_fit.json", {{"alpha", fit.alpha},
                             {"N", fit.n_const},
                             {"samples", fit.used},
                             {"excluded", fit.excluded},
                             {"holdout_violations", violations.size()},
                             {"alpha_table", table}});
  if (out.wants("csv")) {
    auto csv = out.open("uc_samples.csv");
    csv << "set,seed,index,t1,t2,norm_t1,norm_t2,norm_t2_region,quotient,required_N,violates\n";
    auto emit = [&](const char* set, const std::vector<UCSample>& batch, bool check) {
      for (const UCSample& u : batch) {
        const bool ok = u.feasible();
        csv << set << ',' << u.seed << ',' << u.index << ',' << fmt(u.t1) << ',' << fmt(u.t2)
            << ',' << fmt(u.norm_t1) << ',' << fmt(u.norm_t2) << ',' << fmt(u.norm_t2_region)
            << ',' << fmt(ok ? u.quotient(fit.alpha) : NAN) << ','
            << fmt(ok ? required_constant(u, fit.alpha) : NAN) << ','
            << (check && ok && !uc_inequality_holds(u, fit.alpha, fit.n_const)) << '\n';
      }
    };
    emit("fit", fit_set, false);
    emit("holdout", holdout, true);
  }
}

void run_obs_constant(const RunConfig& c, Setup& s, Artifacts& out, json& metrics,
                      Checks& checks) {
  const EigenBasis& basis = *s.basis;
  ObservabilitySearchOptions options;
  options.starts = c.obs_constant.starts;
  options.max_iterations = c.obs_constant.max_iterations;
  options.seed = c.seed;
  const ObservabilityEstimate est = estimate_observability_constant(
      basis, s.ops, c.horizon, s.region, time_set_of(c), c.obs_constant.modes, options);
  metrics["ratio"] = est.ratio;
  metrics["dispersion"] = est.dispersion;
  metrics["dominant_mode"] = est.dominant_mode;
  metrics["iterations"] = est.iterations;
  metrics["modes"] = c.obs_constant.modes;
  checks.holds("ratio_positive_finite", std::isfinite(est.ratio) && est.ratio > 0.0);
  checks.at_most("search_dispersion", est.dispersion, c.tolerances.dispersion);
  out.report("obs_constant.json", {{"ratio", est.ratio},
                                   {"dispersion", est.dispersion},
                                   {"dominant_mode", est.dominant_mode},
                                   {"start_ratios", est.start_ratios}});
  if (out.wants("csv")) {
    auto csv = out.open("obs_starts.csv");
    csv << "start,ratio\n";
    for (std::size_t k = 0; k < est.start_ratios.size(); ++k) {
      csv << k << ',' << fmt(est.start_ratios[k]) << '\n';
    }
  }
  out.field("obs_maximizer", est.terminal);
}

json control_metrics(const MinimalNormResult& r, double u0_norm) {
  return {{"M", r.M},
          {"M_over_u0", u0_norm > 0.0 ? r.M / u0_norm : 0.0},
          {"rho", r.report.rho},
          {"free_rho", r.report.free_rho},
          {"tail_rho", r.report.tail_rho},
          {"bang_bang_deviation", bang_bang_deviation(r.control)},
          {"duality_residual", r.report.duality_residual},
          {"support_violations", r.report.support_violations},
          {"converged", r.control.dual.converged},
          {"stationarity", r.control.dual.stationarity},
          {"eps_final", r.control.dual.log.empty() ? 0.0 : r.control.dual.log.back().eps}};
}

void write_control(Artifacts& out, const MinimalNormResult& r, const std::string& stem) {
  if (out.wants("csv")) {
    auto csv = out.open(stem + ".csv");
    csv << "t_start,t_end,t_mid,norm_region,active\n";
    for (std::size_t k = 0; k < r.control.pieces.size(); ++k) {
      const auto [a, b] = r.control.pieces[k];
      csv << fmt(a) << ',' << fmt(b) << ',' << fmt(0.5 * (a + b)) << ','
          << fmt(r.control.norms[k]) << ',' << int(r.control.active[k]) << '\n';
    }
  }
  if (out.wants("bin") && !r.control.values.empty()) {
    auto bin = out.open(stem + "_first_piece.bin", true);
    write_binary(bin, r.control.values.front());
  }
}

void run_min_norm(const RunConfig& c, Setup& s, Artifacts& out, json& metrics, Checks& checks) {
  const EigenBasis& basis = *s.basis;
  const TimeSet times = time_set_of(c);
  json cases = json::array();
  double worst_rho = 0.0, worst_duality = 0.0, worst_deviation = 0.0;
  int support = 0;
  for (int k = 0; k < c.min_norm.cases; ++k) {
    const VelocityField u0 =
        velocity_from_modal(basis, s.ops, initial_modal(c, basis, static_cast<std::uint64_t>(k)));
    const ControlProblem problem{u0, c.horizon, s.region, times,
                                 c.control_settings(c.min_norm.modes)};
    const MinimalNormResult r = minimal_norm(basis, s.ops, problem);
    cases.push_back(control_metrics(r, masked_l2_norm(u0)));
    worst_rho = std::max(worst_rho, r.report.rho);
    worst_duality = std::max(worst_duality, r.report.duality_residual);
    worst_deviation = std::max(worst_deviation, bang_bang_deviation(r.control));
    support += r.report.support_violations;
    if (k == 0) write_control(out, r, "control");
  }
  metrics["cases"] = cases;
  metrics["max_rho"] = worst_rho;
  metrics["max_duality_residual"] = worst_duality;
  metrics["max_bang_bang_deviation"] = worst_deviation;
  metrics["support_violations"] = support;
  checks.at_most("terminal_ratio", worst_rho, c.tolerances.rho);
  checks.at_most("support_violations", support, 0);
  checks.at_most("duality_invariant", worst_duality, c.tolerances.duality);
  checks.at_most("bang_bang_deviation", worst_deviation, c.tolerances.bang_bang);
  out.report("control_report.json", {{"cases", cases}});
}

void run_min_time(const RunConfig& c, Setup& s, Artifacts& out, json& metrics, Checks& checks) {
  const EigenBasis& basis = *s.basis;
  const VelocityField u0 = velocity_from_modal(basis, s.ops, initial_modal(c, basis, 0));
  const auto relative = c.min_time.relative_time_set;
  const TimePattern pattern = [relative](double horizon) {
    std::vector<TimeSet::Interval> intervals;
    for (const auto& [a, b] : relative) intervals.emplace_back(a * horizon, b * horizon);
    return build_time_set(intervals, horizon);
  };
  const MinimalTimeResult r = minimal_time_bisection(
      basis, s.ops, u0, c.min_time.budget, s.region, pattern, c.min_time.t_lo, c.min_time.t_hi,
      c.control_settings(c.min_time.modes), c.min_time.iterations);
  const double width_limit =
      std::ldexp(c.min_time.t_hi - c.min_time.t_lo, -c.min_time.iterations) * (1.0 + 1e-9);
  const double deviation = bang_bang_deviation(r.at_hi.control);
  metrics["t_lo"] = r.t_lo;
  metrics["t_hi"] = r.t_hi;
  metrics["norm_lo"] = r.norm_lo;
  metrics["norm_hi"] = r.norm_hi;
  metrics["budget"] = c.min_time.budget;
  metrics["degenerate"] = r.degenerate;
  metrics["probes"] = r.probes.size();
  metrics["at_t_hi"] = control_metrics(r.at_hi, masked_l2_norm(u0));
  checks.at_most("bracket_width", r.t_hi - r.t_lo, width_limit);
  checks.holds("bracket_order", r.degenerate || (r.norm_hi <= c.min_time.budget &&
                                                  r.norm_lo > c.min_time.budget));
  checks.at_most("bang_bang_deviation", deviation, c.tolerances.bang_bang);
  checks.at_most("terminal_ratio", r.at_hi.report.rho, c.tolerances.rho);
  if (out.wants("csv")) {
    auto csv = out.open("min_time_probes.csv");
    csv << "horizon,M\n";
    for (const auto& p : r.probes) csv << fmt(p.horizon) << ',' << fmt(p.M) << '\n';
  }
  write_control(out, r.at_hi, "control_t_hi");
}

}  // namespace

nlohmann::json list_experiments() {
  const std::vector<std::string> common = {"experiment", "seed", "grid.n", "time.horizon"};
  auto entry = [&](const std::string& name, const std::string& description,
                   std::vector<std::string> extra) {
    std::vector<std::string> keys = common;
    keys.insert(keys.end(), extra.begin(), extra.end());
    return json{{"name", name}, {"description", description}, {"required_keys", keys}};
  };
  return json::array({
      entry("simulate", "Free Stokes evolution with energy-identity residuals.",
            {"initial.kind", "simulate.samples"}),
      entry("diagnostics", "Log-convexity, energy monotonicity and interpolation-chain checks.",
            {"region.shape", "diagnostics.cases", "diagnostics.time_samples"}),
      entry("uc-fit", "Fit of the unique-continuation constants with a fresh holdout.",
            {"region.shape", "uc_fit.samples", "uc_fit.holdout"}),
      entry("obs-constant", "Multi-start lower bound for the observability constant.",
            {"region.shape", "time.time_set", "obs_constant.modes", "obs_constant.starts"}),
      entry("min-norm", "Minimal-norm null control by smoothed duality, verified forward.",
            {"region.shape", "time.time_set", "min_norm.modes", "min_norm.cases"}),
      entry("min-time", "Minimal control time for a norm budget by bisection on the horizon.",
            {"region.shape", "min_time.budget", "min_time.t_lo", "min_time.t_hi"}),
  });
}

std::string summary_hash(const nlohmann::json& summary) {
  json copy = summary;
  copy.erase("timestamps");
  return hex64(fnv1a64(copy.dump()));
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Size:
    case ErrorKind::DegenerateRegion:
    case ErrorKind::DegenerateTimeSet:
      return kExitConfig;
    case ErrorKind::ObservabilityDegenerate:
    case ErrorKind::SynthesisFailure:
    case ErrorKind::Bracketing:
    case ErrorKind::NotDivergenceFree:
    case ErrorKind::ForcingSupport:
      return kExitNumeric;
    default:
      return kExitInternal;
  }
}

nlohmann::json error_report(ErrorKind kind, const std::string& message) {
  return {{"error", {{"kind", to_string(kind)}, {"message", message}}}};
}

RunOutcome run_experiment(const RunConfig& config) {
  validate_config(config);
  const std::string started = utc_now();
  Artifacts out(config);
  Setup setup(config);
  json metrics = json::object();
  Checks checks;

  const std::string& e = config.experiment;
  if (e == "simulate") {
    run_simulate(config, setup, out, metrics, checks);
  } else if (e == "diagnostics") {
    run_diagnostics(config, setup, out, metrics, checks);
  } else if (e == "uc-fit") {
    run_uc_fit(config, setup, out, metrics, checks);
  } else if (e == "obs-constant") {
    run_obs_constant(config, setup, out, metrics, checks);
  } else if (e == "min-norm") {
    run_min_norm(config, setup, out, metrics, checks);
  } else {
    run_min_time(config, setup, out, metrics, checks);
  }

  RunOutcome outcome;
  outcome.passed = checks.passed();
  outcome.artifacts = out.names();
  outcome.artifacts.push_back("summary.json");
  outcome.summary = {{"experiment", e},
                     {"config_hash", config_hash(config)},
                     {"seed", config.seed},
                     {"grid_n", config.n},
                     {"tolerances", tolerance_json(config.tolerances)},
                     {"metrics", metrics},
                     {"checks", checks.list()},
                     {"passed", outcome.passed},
                     {"artifacts", outcome.artifacts},
                     {"timestamps", {{"started", started}, {"finished", utc_now()}}}};
  outcome.summary_hash = summary_hash(outcome.summary);
  std::ofstream summary(out.dir() / "summary.json");
  summary << outcome.summary.dump(2) << "\n";
  if (!summary) throw Error(ErrorKind::Internal, "cannot write summary.json");
  return outcome;
}

}  // namespace slipstokes
