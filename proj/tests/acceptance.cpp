// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include "support.hpp"

#include "slipstokes/config.hpp"
#include "slipstokes/control.hpp"
#include "slipstokes/observability.hpp"
#include "slipstokes/random.hpp"
#include "slipstokes/runner.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace slipstokes;
using namespace testing_support;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;  // <= 0: no limit
  std::function<Verdict()> body;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Context {
  OperatorSet ops{build_grid(16)};
  EigenBasis basis{eigendecompose(ops)};
  RegionMask corner{build_region_mask(ops.grid(), Rectangle{0.0, 0.5, 0.0, 0.5})};
  RegionMask full{full_region(ops.grid())};
  TimeSet window{build_time_set({{0.2, 0.8}}, 1.0)};
  std::vector<double> deviations;  // bang-bang deviation of every synthesized control
};

Context& ctx() {
  static Context c;
  return c;
}

VelocityField random_divergence_free(const OperatorSet& ops, std::mt19937_64& gen) {
  return ops.curl(random_node(ops.grid(), gen));
}

ControlProblem single_mode_problem(const Context& c, int mode, double T, double amplitude) {
  VelocityField u0 = unit_mode_velocity(c.basis, c.ops, mode);
  u0.comp1 *= amplitude;
  u0.comp2 *= amplitude;
  ControlSettings s;
  s.modes = mode + 1;
  return ControlProblem{u0, T, c.full, build_time_set({{0.0, T}}, T), s};
}

Verdict operator_identities() {
  std::mt19937_64 gen(101);
  double adjoint = 0, composition = 0, divergence = 0, green = 0;
  for (int n : {3, 8, 16, 32}) {
    const OperatorSet ops(build_grid(n));
    const double h = ops.grid().h;
    for (int p = 0; p < 100; ++p) {
      const NodeField psi = random_node(ops.grid(), gen);
      const VelocityField v = random_velocity(ops.grid(), gen);
      const VelocityField u = ops.curl(psi);
      const double lhs = inner(u, v), rhs = inner(psi, ops.rot(v));
      adjoint = std::max(adjoint, std::abs(lhs - rhs) /
                                      (masked_l2_norm(u) * masked_l2_norm(v)));

      // Five-point stencil applied directly to the nodal array.
      Eigen::VectorXd stencil(ops.grid().node_count());
      auto at = [&](int i, int j) {
        return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : psi.values[j * n + i];
      };
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          stencil[j * n + i] =
              (4 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) / (h * h);
        }
      }
      composition = std::max(composition, (ops.rot(u).values - stencil).norm() / stencil.norm());

      const double scale =
          2.0 / h * std::max(u.comp1.cwiseAbs().maxCoeff(), u.comp2.cwiseAbs().maxCoeff());
      divergence = std::max(divergence, ops.divergence(u).cwiseAbs().maxCoeff() / scale);

      const VelocityField w = random_velocity(ops.grid(), gen);
      const NodeField rw = ops.rot(w);
      const double size = std::abs(inner(ops.curl(rw), v)) + std::abs(inner(rw, ops.rot(v)));
      green = std::max(green, std::abs(green_formula_residual(ops, w, v)) / size);
    }
  }
  const double worst = std::max({adjoint, composition, divergence, green});
  return {worst <= 1e-12, "adjoint " + sci(adjoint) + ", RC-L " + sci(composition) + ", DC " +
                              sci(divergence) + ", green " + sci(green)};
}

Verdict eigen_closed_form() {
  double worst = 0;
  for (int n : {3, 8, 16}) {
    const OperatorSet ops(build_grid(n));
    const EigenBasis basis = eigendecompose(ops);
    const auto exact = closed_form_eigenvalues(n);
    if (basis.size() != static_cast<int>(exact.size())) return {false, "eigenvalue count"};
    for (int i = 0; i < basis.size(); ++i) worst = std::max(worst, rel_diff(basis.eigenvalue(i), exact[i]));
  }
  return {worst <= 1e-10, "max rel error " + sci(worst)};
}

Verdict energy_identity() {
  Context& c = ctx();
  std::mt19937_64 gen(303);
  const std::vector<double> samples = uniform_schedule(1.0, 33);
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const SolveTrace t =
        solve_stokes_free(c.basis, c.ops, random_divergence_free(c.ops, gen), 1.0, samples);
    worst = std::max(worst, energy_identity_residual(t));
  }
  return {worst <= 1e-10, "max residual " + sci(worst)};
}

Verdict log_convexity() {
  Context& c = ctx();
  std::mt19937_64 gen(404);
  const std::vector<double> times = uniform_schedule(1.0, 33);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    worst = std::min(worst, log_convexity_margin(energy_series(c.basis, random_node(c.ops.grid(), gen), times)));
  }
  const double single = log_convexity_margin(energy_series(c.basis, c.basis.mode(0), times));
  return {worst >= -1e-12 && std::abs(single) <= 1e-14,
          "min margin " + sci(worst) + ", single-mode " + sci(single)};
}

Verdict interpolation_chain() {
  Context& c = ctx();
  std::mt19937_64 gen(505);
  std::uniform_real_distribution<double> start(0.0, 0.5), gap(0.05, 0.5);
  int violations = 0;
  for (int k = 0; k < 50; ++k) {
    const NodeField psi0 = random_node(c.ops.grid(), gen);
    const double t1 = start(gen);
    const double t2 = std::min(1.0, t1 + gap(gen));
    const ChainReport r = interpolation_chain_check(c.basis, c.ops, psi0, t1, t2, c.corner);
    if (std::abs(r.t3 - 0.5 * (t1 + t2)) > 1e-15 || !r.all_satisfied()) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations in 50 cases"};
}

Verdict uc_fit() {
  Context& c = ctx();
  UCSampler sampler;
  const auto fit_set = draw_uc_batch(c.basis, c.ops, c.corner, sampler, 0, 0, 200);
  const auto holdout = draw_uc_batch(c.basis, c.ops, c.corner, sampler, 0, 200, 200);
  const UCFit fit = fit_uc_constants(fit_set);
  const auto bad = uc_violations(fit, holdout);
  double refit = fit.n_const;
  for (std::size_t i : bad) refit = std::max(refit, required_constant(holdout[i], fit.alpha));
  const double growth = refit / fit.n_const - 1.0;
  const bool ok = fit.alpha > 0 && fit.alpha < 1 && std::isfinite(fit.n_const) &&
                  bad.size() <= 2 && growth <= 0.1;
  return {ok, "alpha " + sci(fit.alpha) + ", N " + sci(fit.n_const) + ", holdout violations " +
                  std::to_string(bad.size()) + ", refit growth " + sci(growth)};
}

Verdict observability() {
  Context& c = ctx();
  double worst = 0;
  for (int i : {0, 1, 4, 9}) {
    const double l = c.basis.eigenvalue(i);
    // Keep e^{-(l - l_0) T} well above roundoff carried by the lowest mode.
    const double T = std::min(1.0, 8.0 / std::max(l - c.basis.eigenvalue(0), 1e-300));
    const VelocityField vT = unit_mode_velocity(c.basis, c.ops, i);
    for (const auto& fractions : std::vector<std::vector<TimeSet::Interval>>{
             {{0.0, 1.0}}, {{0.2, 0.8}}, {{0.1, 0.3}, {0.6, 0.9}}}) {
      std::vector<TimeSet::Interval> iv;
      for (const auto& [a, b] : fractions) iv.emplace_back(a * T, b * T);
      const TimeSet E = build_time_set(iv, T);
      double integral = 0;
      for (const auto& [a, b] : iv) integral += (std::exp(-l * (T - b)) - std::exp(-l * (T - a))) / l;
      worst = std::max(worst, rel_diff(observability_ratio(c.basis, c.ops, vT, T, c.full, E),
                                       std::exp(-l * T) / integral));
    }
  }
  const ObservabilityEstimate est =
      estimate_observability_constant(c.basis, c.ops, 1.0, c.corner, c.window, 32);
  return {worst <= 1e-8 && est.dispersion <= 1.5 && est.start_ratios.size() == 20,
          "single-mode rel error " + sci(worst) + ", dispersion " + sci(est.dispersion) +
              ", ratio " + sci(est.ratio)};
}

Verdict null_control() {
  Context& c = ctx();
  double rho = 0, duality = 0, free_rho = 0;
  int support = 0;
  ControlSettings s;
  s.modes = 32;
  for (std::uint64_t k = 0; k < 5; ++k) {
    SampleRng rng(2024, k);
    const VelocityField u0 = velocity_from_modal(c.basis, c.ops, random_stream_modal(c.basis, rng, 64));
    const MinimalNormResult r =
        minimal_norm(c.basis, c.ops, ControlProblem{u0, 1.0, c.corner, c.window, s});
    rho = std::max(rho, r.report.rho);
    free_rho = std::max(free_rho, r.report.free_rho);
    duality = std::max(duality, r.report.duality_residual);
    support += r.report.support_violations;
    c.deviations.push_back(bang_bang_deviation(r.control));
  }
  double single_rho = 0, single_err = 0;
  for (double T : {0.25, 1.0}) {
    for (int mode : {0, 2}) {
      const MinimalNormResult r = minimal_norm(c.basis, c.ops, single_mode_problem(c, mode, T, 2.0));
      const double l = c.basis.eigenvalue(mode);
      single_rho = std::max(single_rho, r.report.rho);
      single_err = std::max(single_err, rel_diff(r.M, l * 2.0 / std::expm1(l * T)));
      support += r.report.support_violations;
      c.deviations.push_back(bang_bang_deviation(r.control));
    }
  }
  const bool ok = rho <= 1e-3 && support == 0 && duality <= 1e-8 && single_rho <= 1e-8 &&
                  single_err <= 1e-5;
  return {ok, "rho " + sci(rho) + " (uncontrolled " + sci(free_rho) + "), support " +
                  std::to_string(support) + ", duality " + sci(duality) + ", single-mode rho " +
                  sci(single_rho) + ", single-mode M error " + sci(single_err)};
}

Verdict bang_bang() {
  Context& c = ctx();
  double worst = 0;
  for (double d : c.deviations) worst = std::max(worst, d);
  ControlResult perturbed;
  perturbed.M = 1.0;
  perturbed.norms.assign(16, 1.0);
  perturbed.active.assign(16, 1);
  perturbed.norms[7] = 1.1;
  const double detected = bang_bang_deviation(perturbed);
  return {!c.deviations.empty() && worst <= 1e-10 && detected >= 0.09,
          std::to_string(c.deviations.size()) + " controls, max deviation " + sci(worst) +
              ", perturbed sample " + sci(detected)};
}

Verdict minimal_time() {
  Context& c = ctx();
  const double l = c.basis.eigenvalue(0);
  const VelocityField u0 = unit_mode_velocity(c.basis, c.ops, 0);
  ControlSettings s;
  s.modes = 1;
  const TimePattern whole = [](double T) { return build_time_set({{0.0, T}}, T); };
  const double width = (2.0 - 0.1) / (1 << 20);
  bool ok = true;
  double previous = 0;
  std::ostringstream detail;
  for (double budget : {1e-3, 1e-5, 1e-7}) {
    const MinimalTimeResult r =
        minimal_time_bisection(c.basis, c.ops, u0, budget, c.full, whole, 0.1, 2.0, s);
    const double exact = std::log1p(l / budget) / l;
    ok = ok && exact >= r.t_lo && exact <= r.t_hi && r.t_hi - r.t_lo <= width * (1 + 1e-9) &&
         r.t_hi > previous;
    c.deviations.push_back(bang_bang_deviation(r.at_hi.control));
    previous = r.t_hi;
    detail << "M=" << sci(budget) << ": T in [" << r.t_lo << ", " << r.t_hi << "] exact " << exact
           << "; ";
  }
  return {ok, detail.str()};
}

Verdict gradient_check() {
  Context& c = ctx();
  SampleRng rng(77, 0);
  const VelocityField u0 = velocity_from_modal(c.basis, c.ops, random_stream_modal(c.basis, rng, 64));
  ControlSettings s;
  s.modes = 32;
  const ControlProblem p{u0, 1.0, c.corner, c.window, s};
  const Eigen::VectorXd factor = DualFunctional(c.basis, c.ops, p).terminal_factor();
  std::mt19937_64 gen(1111);
  double worst = 0;
  for (int probe = 0; probe < 20; ++probe) {
    const Eigen::VectorXd z = gaussian(32, gen);
    const Eigen::VectorXd q = z.cwiseQuotient(factor);
    const double eps = 1e-2;
    const DualEvaluation ev = dual_functional(c.basis, c.ops, p, q, eps);
    Eigen::VectorXd fd(32);
    for (int i = 0; i < 32; ++i) {
      // Truncation error is O(step^2); 1e-5 keeps it near 1e-7 with roundoff below.
      const double step = 1e-5 * z.norm() / factor[i];
      Eigen::VectorXd qp = q, qm = q;
      qp[i] += step;
      qm[i] -= step;
      fd[i] = (dual_functional(c.basis, c.ops, p, qp, eps).value -
               dual_functional(c.basis, c.ops, p, qm, eps).value) / (2 * step);
    }
    worst = std::max(worst, (fd - ev.gradient).norm() / ev.gradient.norm());
  }
  return {worst <= 1e-6, "max rel error " + sci(worst) + " over 20 probes"};
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "slipstokes_acceptance";
  int mismatches = 0;
  for (const std::string& name : experiment_names()) {
    RunConfig cfg;
    cfg.experiment = name;
    cfg.seed = 9;
    std::string hash;
    for (int run = 0; run < 2; ++run) {
      cfg.out_dir = (root / (name + "_" + std::to_string(run))).string();
      fs::remove_all(cfg.out_dir);
      const RunOutcome o = run_experiment(cfg);
      if (run == 0) hash = o.summary_hash;
      else if (o.summary_hash != hash) ++mismatches;
    }
  }
  fs::remove_all(root);
  return {mismatches == 0, std::to_string(mismatches) + " hash mismatches over " +
                               std::to_string(experiment_names().size()) + " experiments"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "operator identities", 10, operator_identities},
      {2, "eigenvalue closed form", 30, eigen_closed_form},
      {3, "energy identity", 20, energy_identity},
      {4, "log-convexity", 20, log_convexity},
      {5, "interpolation chain", 30, interpolation_chain},
      {6, "unique continuation fit", 120, uc_fit},
      {7, "observability", 180, observability},
      {8, "null control", 300, null_control},
      {9, "bang-bang", 10, bang_bang},
      {10, "minimal time", 180, minimal_time},
      {11, "dual gradient check", 30, gradient_check},
      {12, "determinism", 0, determinism},
  };
  ctx();
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0 || seconds < c.limit_seconds;
    const bool pass = v.ok && in_time;
    failures += pass ? 0 : 1;
    std::printf("[AC%02d] [PRIMARY] %-26s %s  (%s; %.2fs%s)\n", c.id, c.title.c_str(),
                pass ? "PASS" : "FAIL", v.detail.c_str(), seconds,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
