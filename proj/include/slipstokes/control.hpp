#pragma once

#include "slipstokes/geometry.hpp"
#include "slipstokes/operators.hpp"
#include "slipstokes/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace slipstokes {

/// Optimizer settings for the smoothed dual. Smoothing levels are relative
/// to the scale of the dual optimum (see minimize_dual).
struct ControlSettings {
  int modes = 32;
  double eps_initial = 0.1;
  double eps_factor = 4.0;
  double eps_floor = 1e-8;
  int pieces_per_interval = 64;
  int max_iterations = 100;  // Newton steps per smoothing stage
  double gradient_tolerance = 1e-8;

  /// Strictly decreasing smoothing levels ending at the floor.
  std::vector<double> schedule() const;
};

struct ControlProblem {
  VelocityField u0;
  double horizon = 1.0;
  RegionMask region;
  TimeSet times;
  ControlSettings settings;

  /// Throws InvalidInput (or Shape) when the data are inconsistent.
  void validate(const EigenBasis& basis) const;
};

/// Smoothed dual functional
///   J_eps(z) = 1/2 (sum_k ds_k sqrt(|chi vbar_k|^2 + eps^2))^2 + <v(0), u0>
/// where vbar_k is the adjoint averaged over control piece k. The unknown z
/// holds the velocity-orthonormal coefficients of v at s = sup E, which keeps
/// every weight exp(-lambda (sup E - s)) in [0, 1]. Piece averages make the
/// functional the exact dual of piecewise-constant controls.
class DualFunctional {
 public:
  DualFunctional(const EigenBasis& basis, const OperatorSet& ops, const ControlProblem& problem);

  int modes() const { return static_cast<int>(lambda_.size()); }
  double reference_time() const { return reference_; }
  const std::vector<std::pair<double, double>>& pieces() const { return pieces_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  /// Row k: averaged decay weights of piece k.
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  /// <v(0), u0> = pairing . z
  const Eigen::VectorXd& pairing() const { return pairing_; }

  /// Observation integral sum_k ds_k sqrt(y_k' G y_k + eps^2), y_k = w_k * z.
  double observation(const Eigen::VectorXd& z, double eps) const;
  double value(const Eigen::VectorXd& z, double eps, Eigen::VectorXd* gradient = nullptr,
               Eigen::MatrixXd* hessian = nullptr) const;

  /// exp(-lambda_i (T - sup E)), mapping z to terminal coefficients q = z / factor.
  Eigen::VectorXd terminal_factor() const;

 private:
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd widths_;
  Eigen::VectorXd pairing_;
  std::vector<std::pair<double, double>> pieces_;
  double horizon_ = 0.0;
  double reference_ = 0.0;
};

struct DualEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// J_eps and its gradient with respect to the terminal coefficients
/// q_i = <vT, C e_i / sqrt(lambda_i)>, i < m. Throws InvalidInput for eps <= 0.
DualEvaluation dual_functional(const EigenBasis& basis, const OperatorSet& ops,
                               const ControlProblem& problem, const Eigen::VectorXd& terminal,
                               double eps);

struct StageLog {
  double eps = 0.0;
  int iterations = 0;
  double value_in = 0.0;   // J at the incoming iterate under this eps
  double value_out = 0.0;  // J at the stage result
  double gradient_norm = 0.0;
  bool converged = false;
};

struct DualSolution {
  /// Optimizer in the sup-E coordinates of DualFunctional, physical scale.
  Eigen::VectorXd z;
  double reference_time = 0.0;
  /// Scale of the dual optimum used to normalize smoothing levels.
  double scale = 0.0;
  std::vector<StageLog> log;
  /// False when some stage hit the iteration cap.
  bool converged = true;
  double stationarity = 0.0;  // final |grad| / (1 + |J|), normalized problem
};

/// Newton with backtracking on each smoothing stage, then an exact rescale of
/// the result along its ray for eps = 0.
DualSolution minimize_dual(const EigenBasis& basis, const OperatorSet& ops,
                           const ControlProblem& problem);

struct ControlResult {
  std::vector<std::pair<double, double>> pieces;
  /// Control value on each piece (zero outside omega).
  std::vector<VelocityField> values;
  std::vector<double> norms;  // ||f_k||_omega
  std::vector<char> active;   // zero-filled pieces are inactive
  double M = 0.0;
  DualSolution dual;

  std::shared_ptr<ForcingSpec> forcing(const ControlProblem& problem) const;
};

/// f_k = M chi vbar_k / ||chi vbar_k||, M = sum_k ds_k ||chi vbar_k||.
/// Throws SynthesisFailure when the dual optimizer vanishes for u0 != 0.
ControlResult build_bangbang_control(const EigenBasis& basis, const OperatorSet& ops,
                                     const ControlProblem& problem, const DualSolution& dual);

struct NullControlReport {
  double rho = 0.0;       // ||u(T)|| / ||u0||
  double free_rho = 0.0;  // same without control
  double tail_rho = 0.0;  // part of rho carried by modes at or above the cutoff
  double terminal_norm = 0.0;
  int support_violations = 0;
  double duality_residual = 0.0;  // worst over probes
  int probes = 0;
};

NullControlReport verify_null_control(const EigenBasis& basis, const OperatorSet& ops,
                                      const ControlProblem& problem, const ControlResult& result,
                                      int probes = 5, std::uint64_t seed = 0);

/// (max - min) / M of ||f_k||_omega over active pieces; 0 when M = 0.
double bang_bang_deviation(const ControlResult& result);

struct MinimalNormResult {
  double M = 0.0;
  ControlResult control;
  NullControlReport report;
};

/// Upper bound for the discrete minimal norm at the given tolerances.
MinimalNormResult minimal_norm(const EigenBasis& basis, const OperatorSet& ops,
                               const ControlProblem& problem);

using TimePattern = std::function<TimeSet(double horizon)>;

struct MinimalTimeProbe {
  double horizon = 0.0;
  double M = 0.0;
};

struct MinimalTimeResult {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double norm_lo = 0.0;
  double norm_hi = 0.0;
  bool degenerate = false;
  std::vector<MinimalTimeProbe> probes;
  /// Minimal-norm solution at t_hi.
  MinimalNormResult at_hi;
};

/// Bisection on T for minimal_norm(T) = budget. Throws Bracketing when
/// minimal_norm(t_hi) > budget; returns t_lo at once when the budget already
/// covers t_lo.
MinimalTimeResult minimal_time_bisection(const EigenBasis& basis, const OperatorSet& ops,
                                         const VelocityField& u0, double budget,
                                         const RegionMask& region, const TimePattern& pattern,
                                         double t_lo, double t_hi,
                                         const ControlSettings& settings = {},
                                         int iterations = 20);

}  // namespace slipstokes
