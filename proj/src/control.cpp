#include "slipstokes/control.hpp"

#include "slipstokes/errors.hpp"
#include "slipstokes/observability.hpp"
#include "slipstokes/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slipstokes {

std::vector<double> ControlSettings::schedule() const {
  if (!(eps_factor > 1.0) || !(eps_floor >= 1e-10) || !(eps_initial >= eps_floor)) {
    throw Error(ErrorKind::InvalidInput,
                "smoothing schedule must decrease strictly to a floor >= 1e-10");
  }
  std::vector<double> out;
  for (double eps = eps_initial; eps > eps_floor * (1.0 + 1e-12); eps /= eps_factor) {
    out.push_back(eps);
  }
  out.push_back(eps_floor);
  return out;
}

void ControlProblem::validate(const EigenBasis& basis) const {
  require_same_grid(basis.grid(), u0.grid, "control problem u0");
  require_same_grid(basis.grid(), region.grid, "control problem region");
  if (settings.modes < 1 || settings.modes > basis.size()) {
    throw Error(ErrorKind::InvalidInput, "mode cutoff must satisfy 1 <= m <= n^2");
  }
  if (!(horizon > 0.0) || std::abs(times.horizon() - horizon) > 1e-12 * horizon) {
    throw Error(ErrorKind::InvalidInput, "time set does not belong to the horizon");
  }
  if (times.intervals().empty()) throw Error(ErrorKind::DegenerateTimeSet, "empty time set");
  if (settings.pieces_per_interval < 1 || settings.max_iterations < 1 ||
      !(settings.gradient_tolerance > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "optimizer settings must be positive");
  }
  settings.schedule();
}

DualFunctional::DualFunctional(const EigenBasis& basis, const OperatorSet& ops,
                               const ControlProblem& problem) {
  problem.validate(basis);
  const int m = problem.settings.modes;
  lambda_ = basis.eigenvalues().head(m);
  gram_ = ModalObserver(basis, ops, problem.region, m).gram();
  pieces_ = uniform_pieces(problem.times, problem.settings.pieces_per_interval);
  horizon_ = problem.horizon;
  reference_ = problem.times.sup();

  const auto count = static_cast<Eigen::Index>(pieces_.size());
  weights_.resize(count, m);
  widths_.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto [a, b] = pieces_[k];
    widths_[k] = b - a;
    for (int i = 0; i < m; ++i) {
      weights_(k, i) = std::exp(-lambda_[i] * (reference_ - b)) * phi1(lambda_[i] * (b - a));
    }
  }
  const Eigen::VectorXd stream = modal_from_velocity(basis, ops, problem.u0).head(m);
  pairing_ = stream.cwiseProduct(lambda_.cwiseSqrt())
                 .cwiseProduct((-lambda_.array() * reference_).exp().matrix());
}

Eigen::VectorXd DualFunctional::terminal_factor() const {
  return (-lambda_.array() * (horizon_ - reference_)).exp().matrix();
}

namespace {

struct Pieces {
  Eigen::MatrixXd y, gy;
  Eigen::VectorXd r;
};

Pieces piece_terms(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& gram,
                   const Eigen::VectorXd& z, double eps) {
  Pieces p;
  p.y = weights.array().rowwise() * z.transpose().array();
  p.gy = p.y * gram;
  p.r = ((p.y.array() * p.gy.array()).rowwise().sum().max(0.0) + eps * eps).sqrt().matrix();
  return p;
}

// J = 1/2 S^2 + pairing . z with derivatives; shared by the public value()
// and the normalized solve.
double evaluate(const DualFunctional& f, const Eigen::VectorXd& widths,
                const Eigen::VectorXd& pairing, const Eigen::VectorXd& z, double eps,
                Eigen::VectorXd* gradient, Eigen::MatrixXd* hessian) {
  const Pieces p = piece_terms(f.weights(), f.gram(), z, eps);
  const double s = widths.dot(p.r);
  const double value = 0.5 * s * s + pairing.dot(z);
  if (!gradient && !hessian) return value;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(p.r.size());
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    if (p.r[k] > 0.0) inv[k] = widths[k] / p.r[k];
  }
  const Eigen::MatrixXd b = f.weights().array() * p.gy.array();
  const Eigen::VectorXd ds = b.transpose() * inv;
  if (gradient) *gradient = s * ds + pairing;
  if (hessian) {
    const Eigen::MatrixXd scaled_w = f.weights().array().colwise() * inv.array();
    Eigen::MatrixXd d2 = (f.weights().transpose() * scaled_w).cwiseProduct(f.gram());
    Eigen::VectorXd inv3 = Eigen::VectorXd::Zero(p.r.size());
    for (Eigen::Index k = 0; k < inv3.size(); ++k) {
      if (p.r[k] > 0.0) inv3[k] = widths[k] / (p.r[k] * p.r[k] * p.r[k]);
    }
    const Eigen::MatrixXd scaled_b = b.array().colwise() * inv3.array();
    d2 -= b.transpose() * scaled_b;
    *hessian = ds * ds.transpose() + s * d2;
  }
  return value;
}

Eigen::VectorXd widths_of(const DualFunctional& f) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(f.pieces().size()));
  for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = f.pieces()[k].second - f.pieces()[k].first;
  return w;
}

}  // namespace

double DualFunctional::observation(const Eigen::VectorXd& z, double eps) const {
  return widths_.dot(piece_terms(weights_, gram_, z, eps).r);
}

double DualFunctional::value(const Eigen::VectorXd& z, double eps, Eigen::VectorXd* gradient,
                             Eigen::MatrixXd* hessian) const {
  if (z.size() != modes()) throw Error(ErrorKind::Shape, "dual coefficient count mismatch");
  return evaluate(*this, widths_, pairing_, z, eps, gradient, hessian);
}

DualEvaluation dual_functional(const EigenBasis& basis, const OperatorSet& ops,
                               const ControlProblem& problem, const Eigen::VectorXd& terminal,
                               double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "smoothing level must be positive");
  const DualFunctional f(basis, ops, problem);
  if (terminal.size() != f.modes()) {
    throw Error(ErrorKind::Shape, "terminal coefficient count must equal the mode cutoff");
  }
  const Eigen::VectorXd factor = f.terminal_factor();
  DualEvaluation out;
  Eigen::VectorXd gz;
  out.value = f.value(terminal.cwiseProduct(factor), eps, &gz);
  out.gradient = gz.cwiseProduct(factor);
  return out;
}

namespace {

struct StageOutcome {
  int iterations = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

StageOutcome newton_stage(const DualFunctional& f, const Eigen::VectorXd& widths,
                          const Eigen::VectorXd& pairing, double eps,
                          const ControlSettings& settings, Eigen::VectorXd& z) {
  StageOutcome out;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  double value = evaluate(f, widths, pairing, z, eps, &g, &h);
  for (;;) {
    out.gradient_norm = g.norm();
    if (out.gradient_norm <= settings.gradient_tolerance * (1.0 + std::abs(value))) {
      out.converged = true;
      break;
    }
    if (out.iterations >= settings.max_iterations) break;
    ++out.iterations;

    Eigen::VectorXd step = h.ldlt().solve(-g);
    double slope = g.dot(step);
    if (!step.allFinite() || !(slope < 0.0)) {
      step = -g;
      slope = -g.squaredNorm();
    }
    // Predicted decrease below the rounding level of J: nothing left to gain.
    if (-slope <= 1e-15 * (1.0 + std::abs(value))) {
      out.converged = true;
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, alpha *= 0.5) {
      const Eigen::VectorXd trial = z + alpha * step;
      const double tv = evaluate(f, widths, pairing, trial, eps, nullptr, nullptr);
      if (tv <= value + 1e-4 * alpha * slope) {
        z = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.converged = -slope <= 1e-12 * (1.0 + std::abs(value));
      break;
    }
    value = evaluate(f, widths, pairing, z, eps, &g, &h);
  }
  out.value = value;
  return out;
}

}  // namespace

DualSolution minimize_dual(const EigenBasis& basis, const OperatorSet& ops,
                           const ControlProblem& problem) {
  const DualFunctional f(basis, ops, problem);
  const Eigen::VectorXd& c = f.pairing();
  DualSolution sol;
  sol.reference_time = f.reference_time();
  sol.z = Eigen::VectorXd::Zero(f.modes());
  if (c.norm() == 0.0) return sol;

  // The dual optimum has observation integral M = max_d (-c.d) / S(d); the
  // steepest direction d = -c gives a lower bound used as the unit of scale.
  const double s_c = f.observation(c, 0.0);
  if (!(s_c > 0.0)) {
    throw Error(ErrorKind::SynthesisFailure, "pairing direction is unobservable");
  }
  sol.scale = c.squaredNorm() / s_c;
  const Eigen::VectorXd widths = widths_of(f);
  const Eigen::VectorXd pairing = c / sol.scale;

  const std::vector<double> eps_levels = problem.settings.schedule();
  Eigen::VectorXd z = -pairing;
  {
    const double s = f.observation(z, eps_levels.front());
    z *= pairing.squaredNorm() / (s * s);
  }
  for (double eps : eps_levels) {
    StageLog log;
    log.eps = eps;
    log.value_in = evaluate(f, widths, pairing, z, eps, nullptr, nullptr);
    const StageOutcome stage = newton_stage(f, widths, pairing, eps, problem.settings, z);
    log.iterations = stage.iterations;
    log.value_out = stage.value;
    log.gradient_norm = stage.gradient_norm;
    log.converged = stage.converged;
    sol.converged = sol.converged && stage.converged;
    sol.stationarity = stage.gradient_norm / (1.0 + std::abs(stage.value));
    sol.log.push_back(log);
  }

  // Best point on the ray for the unsmoothed functional.
  const double s0 = f.observation(z, 0.0);
  const double t = -pairing.dot(z) / (s0 * s0);
  if (s0 > 0.0 && t > 0.0 && std::isfinite(t)) z *= t;
  sol.z = sol.scale * z;
  return sol;
}

std::shared_ptr<ForcingSpec> ControlResult::forcing(const ControlProblem& problem) const {
  auto spec = std::make_shared<ForcingSpec>();
  spec->region = problem.region;
  spec->times = problem.times;
  spec->pieces = pieces;
  spec->values = values;
  return spec;
}

ControlResult build_bangbang_control(const EigenBasis& basis, const OperatorSet& ops,
                                     const ControlProblem& problem, const DualSolution& dual) {
  const DualFunctional f(basis, ops, problem);
  ControlResult out;
  out.dual = dual;
  out.pieces = f.pieces();
  const std::size_t count = out.pieces.size();
  const Grid& grid = basis.grid();

  const bool zero_data = masked_l2_norm(problem.u0) == 0.0;
  if (dual.z.size() != f.modes()) throw Error(ErrorKind::Shape, "dual optimizer size mismatch");
  if (dual.z.norm() == 0.0) {
    if (!zero_data) {
      throw Error(ErrorKind::SynthesisFailure, "dual optimizer vanishes for nonzero data");
    }
    out.values.assign(count, VelocityField::zeros(grid));
    out.norms.assign(count, 0.0);
    out.active.assign(count, 0);
    return out;
  }

  const Eigen::VectorXd root = f.eigenvalues().cwiseSqrt();
  std::vector<VelocityField> observed;
  std::vector<double> observed_norm;
  observed.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Eigen::VectorXd stream =
        f.weights().row(static_cast<Eigen::Index>(k)).transpose().cwiseProduct(dual.z).cwiseQuotient(root);
    observed.push_back(restrict_to(velocity_from_modal(basis, ops, stream), problem.region));
    observed_norm.push_back(masked_l2_norm(observed.back(), &problem.region));
  }
  for (std::size_t k = 0; k < count; ++k) {
    out.M += (out.pieces[k].second - out.pieces[k].first) * observed_norm[k];
  }
  for (std::size_t k = 0; k < count; ++k) {
    const bool on = observed_norm[k] > 0.0 && std::isfinite(observed_norm[k]);
    VelocityField value = VelocityField::zeros(grid);
    if (on) {
      const double s = out.M / observed_norm[k];
      value.comp1 = s * observed[k].comp1;
      value.comp2 = s * observed[k].comp2;
    }
    out.norms.push_back(masked_l2_norm(value, &problem.region));
    out.active.push_back(on ? 1 : 0);
    out.values.push_back(std::move(value));
  }
  return out;
}

double bang_bang_deviation(const ControlResult& result) {
  if (!(result.M > 0.0)) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < result.norms.size(); ++k) {
    if (!result.active[k]) continue;
    lo = std::min(lo, result.norms[k]);
    hi = std::max(hi, result.norms[k]);
  }
  return hi >= lo ? (hi - lo) / result.M : 0.0;
}

NullControlReport verify_null_control(const EigenBasis& basis, const OperatorSet& ops,
                                      const ControlProblem& problem, const ControlResult& result,
                                      int probes, std::uint64_t seed) {
  NullControlReport report;
  const auto forcing = result.forcing(problem);
  report.support_violations = forcing->support_violations();

  const double u0_norm = masked_l2_norm(problem.u0);
  const Eigen::VectorXd a0 = modal_from_velocity(basis, ops, problem.u0);
  const Eigen::ArrayXd lambda = basis.eigenvalues().array();
  const double free_norm =
      std::sqrt((lambda * a0.array().square() * (-2.0 * lambda * problem.horizon).exp()).sum());
  report.free_rho = u0_norm > 0.0 ? free_norm / u0_norm : 0.0;

  if (report.support_violations > 0) {
    report.rho = std::numeric_limits<double>::quiet_NaN();
    report.terminal_norm = report.rho;
    report.duality_residual = report.rho;
    report.tail_rho = report.rho;
    return report;
  }
  const std::vector<double> samples{0.0, problem.horizon};
  const SolveTrace forward =
      solve_stokes_forced(basis, ops, problem.u0, forcing, problem.horizon, samples);
  report.terminal_norm = forward.norm_domain.back();
  report.rho = u0_norm > 0.0 ? report.terminal_norm / u0_norm : 0.0;
  const int m = problem.settings.modes;
  const Eigen::ArrayXd tail = forward.end_modal.array().tail(basis.size() - m);
  const double tail_norm = std::sqrt((lambda.tail(basis.size() - m) * tail.square()).sum());
  report.tail_rho = u0_norm > 0.0 ? tail_norm / u0_norm : 0.0;

  const int probe_modes = std::min(64, basis.size());
  for (int p = 0; p < probes; ++p) {
    SampleRng rng(seed, 0x70726f6265ULL + static_cast<std::uint64_t>(p));
    const VelocityField probe =
        velocity_from_modal(basis, ops, random_stream_modal(basis, rng, probe_modes));
    const SolveTrace adjoint = solve_adjoint(basis, ops, probe, problem.horizon, samples);
    report.duality_residual =
        std::max(report.duality_residual, duality_pairing_residual(basis, ops, forward, adjoint));
    ++report.probes;
  }
  return report;
}

MinimalNormResult minimal_norm(const EigenBasis& basis, const OperatorSet& ops,
                               const ControlProblem& problem) {
  problem.validate(basis);
  MinimalNormResult out;
  out.control = build_bangbang_control(basis, ops, problem, minimize_dual(basis, ops, problem));
  out.report = verify_null_control(basis, ops, problem, out.control);
  out.M = out.control.M;
  return out;
}

MinimalTimeResult minimal_time_bisection(const EigenBasis& basis, const OperatorSet& ops,
                                         const VelocityField& u0, double budget,
                                         const RegionMask& region, const TimePattern& pattern,
                                         double t_lo, double t_hi,
                                         const ControlSettings& settings, int iterations) {
  if (!(budget > 0.0)) throw Error(ErrorKind::InvalidInput, "norm budget must be positive");
  if (!(t_lo > 0.0) || !(t_hi > t_lo)) {
    throw Error(ErrorKind::InvalidInput, "horizon bounds must satisfy 0 < T_lo < T_hi");
  }
  MinimalTimeResult out;
  auto solve_at = [&](double horizon) {
    ControlProblem p{u0, horizon, region, pattern(horizon), settings};
    MinimalNormResult r = minimal_norm(basis, ops, p);
    out.probes.push_back({horizon, r.M});
    return r;
  };

  MinimalNormResult lo = solve_at(t_lo);
  out.t_lo = t_lo;
  out.norm_lo = lo.M;
  if (budget >= lo.M) {
    out.degenerate = true;
    out.t_hi = t_lo;
    out.norm_hi = lo.M;
    out.at_hi = std::move(lo);
    return out;
  }
  MinimalNormResult hi = solve_at(t_hi);
  if (hi.M > budget) {
    throw Error(ErrorKind::Bracketing,
                "budget " + std::to_string(budget) + " not bracketed: M(T_lo) = " +
                    std::to_string(lo.M) + ", M(T_hi) = " + std::to_string(hi.M));
  }
  out.t_hi = t_hi;
  out.norm_hi = hi.M;
  out.at_hi = std::move(hi);
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (out.t_lo + out.t_hi);
    MinimalNormResult r = solve_at(mid);
    if (r.M <= budget) {
      out.t_hi = mid;
      out.norm_hi = r.M;
      out.at_hi = std::move(r);
    } else {
      out.t_lo = mid;
      out.norm_lo = r.M;
    }
  }
  return out;
}

}  // namespace slipstokes
