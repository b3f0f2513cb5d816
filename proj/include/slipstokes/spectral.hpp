#pragma once

#include "slipstokes/geometry.hpp"
#include "slipstokes/operators.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace slipstokes {

/// Largest grid handled by the eigenbasis path; bigger grids use
/// solve_stokes_free_stepping.
inline constexpr int kMaxSpectralN = 64;

enum class EigenMethod {
  /// Tensor products of the 1-D second-difference eigenvectors.
  Kronecker,
  /// Dense symmetric eigensolver on the assembled Laplacian (n <= 24).
  Dense,
};

/// Eigenpairs of L, ascending, with h^2-orthonormal eigenvectors.
class EigenBasis {
 public:
  EigenBasis(Grid grid, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors, std::string method,
             double max_residual, double gram_residual);

  const Grid& grid() const { return grid_; }
  int size() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int i) const { return eigenvalues_[i]; }
  /// Column i is e_i with h^2 * e_i . e_i = 1.
  const Eigen::MatrixXd& vectors() const { return vectors_; }
  NodeField mode(int i) const;

  const std::string& method() const { return method_; }
  /// max_i ||L e_i - lambda_i e_i|| / lambda_i.
  double max_residual() const { return max_residual_; }
  /// max |<e_i, e_j> - delta_ij|.
  double gram_residual() const { return gram_residual_; }

  /// Coefficients <f, e_i> for all i.
  Eigen::VectorXd project(const NodeField& f) const;
  /// sum_i c_i e_i; c may hold only the leading modes.
  NodeField synthesize(const Eigen::VectorXd& coefficients) const;

 private:
  Grid grid_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd vectors_;
  std::string method_;
  double max_residual_;
  double gram_residual_;
};

/// Throws Size for n > kMaxSpectralN (Dense additionally requires n <= 24).
EigenBasis eigendecompose(const OperatorSet& ops, EigenMethod method = EigenMethod::Kronecker);

/// Exact heat semigroup: sum_i exp(-lambda_i dt) <w0, e_i> e_i.
NodeField heat_propagate(const EigenBasis& basis, const NodeField& w0, double dt);

/// `count` equally spaced times from 0 to T inclusive.
std::vector<double> uniform_schedule(double horizon, int count);

/// Piecewise-constant velocity forcing supported in omega x E.
struct ForcingSpec {
  RegionMask region;
  TimeSet times;
  /// Disjoint pieces [a_k, b_k], each inside one interval of `times`.
  std::vector<std::pair<double, double>> pieces;
  /// Forcing value on each piece.
  std::vector<VelocityField> values;

  /// Number of nonzero edge values outside the region plus pieces outside E.
  int support_violations() const;
  /// Throws ForcingSupport on any violation or non-finite value.
  void validate() const;
};

/// Splits each interval of E into `per_interval` equal pieces.
std::vector<std::pair<double, double>> uniform_pieces(const TimeSet& times, int per_interval);

enum class TraceKind { Free, Forced, Adjoint };

/// Sampled trajectory of the stream-function evolution.
struct SolveTrace {
  Grid grid;
  TraceKind kind = TraceKind::Free;
  double horizon = 0.0;
  Eigen::VectorXd eigenvalues;

  std::vector<double> times;
  std::vector<NodeField> stream;
  std::vector<NodeField> vorticity;
  std::vector<double> norm_domain;
  /// NaN when no observation region was given.
  std::vector<double> norm_region;
  /// Stream coefficients a_i(t_k) in the eigenbasis.
  std::vector<Eigen::VectorXd> modal;

  /// Stream coefficients at t = 0 (Free/Forced) or t = T (Adjoint).
  Eigen::VectorXd data_modal;
  /// Stream coefficients at the opposite end: u(T) for forward traces, v(0) for adjoint ones.
  Eigen::VectorXd end_modal;
  /// ||u0||^2 (forward) or ||vT||^2 (adjoint), evaluated from fields.
  double data_energy = 0.0;

  std::shared_ptr<const ForcingSpec> forcing;

  VelocityField velocity(std::size_t k, const OperatorSet& ops) const {
    return ops.curl(stream[k]);
  }
};

/// Free Stokes evolution from u0 (strict curl-range check). The sample
/// schedule must lie in [0, T].
SolveTrace solve_stokes_free(const EigenBasis& basis, const OperatorSet& ops,
                             const VelocityField& u0, double horizon,
                             const std::vector<double>& samples,
                             const RegionMask* region = nullptr);

/// Forced evolution; the vorticity obeys w' = -L w + R f with f piecewise constant.
SolveTrace solve_stokes_forced(const EigenBasis& basis, const OperatorSet& ops,
                               const VelocityField& u0, std::shared_ptr<const ForcingSpec> forcing,
                               double horizon, const std::vector<double>& samples,
                               const RegionMask* region = nullptr);

/// Backward adjoint evolution from terminal data vT: v(t) is the free
/// solution at time T - t.
SolveTrace solve_adjoint(const EigenBasis& basis, const OperatorSet& ops,
                         const VelocityField& terminal, double horizon,
                         const std::vector<double>& samples,
                         const RegionMask* region = nullptr);

/// Crank-Nicolson vorticity stepping for grids beyond the eigenbasis limit.
/// Accuracy is O(dt^2); samples are snapped to the step grid.
SolveTrace solve_stokes_free_stepping(const OperatorSet& ops, const VelocityField& u0,
                                      double horizon, int steps,
                                      const std::vector<double>& samples,
                                      const RegionMask* region = nullptr);

/// max_s | ||u(s)||^2 + 2 int_0^s ||w||^2 dt - ||u0||^2 | / ||u0||^2 with the
/// time integral evaluated in closed form per mode. Free traces only.
double energy_identity_residual(const SolveTrace& trace);

/// |<u(T), vT> - <u0, v(0)> - int_0^T <f, v> dt| / scale, with the forcing
/// integral evaluated exactly per mode and piece.
double duality_pairing_residual(const EigenBasis& basis, const OperatorSet& ops,
                                const SolveTrace& forward, const SolveTrace& adjoint);

/// Velocity of the stream modes given by `stream_coefficients`.
VelocityField velocity_from_modal(const EigenBasis& basis, const OperatorSet& ops,
                                  const Eigen::VectorXd& stream_coefficients);

/// Stream coefficients of a curl-range velocity (strict mode).
Eigen::VectorXd modal_from_velocity(const EigenBasis& basis, const OperatorSet& ops,
                                    const VelocityField& u);

/// (1 - exp(-x)) / x, accurate near zero.
double phi1(double x);

}  // namespace slipstokes
