#pragma once

#include "slipstokes/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>

namespace slipstokes {

/// Discrete curl / rot / Laplacian on a Grid.
///
/// curl (C) is built from one-dimensional forward differences with zero
/// extension of the stream function, rot (R) is its exact transpose, and
/// L = R C is the five-point negative Dirichlet Laplacian. With equal h^2
/// weights on nodes and edges, <C psi, v> = <psi, R v> holds with no boundary
/// term. The divergence D acts on cell centres ((n+1)^2 values) and satisfies
/// D C = 0 because the two difference factors commute.
class OperatorSet {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  explicit OperatorSet(const Grid& grid);

  const Grid& grid() const { return grid_; }

  VelocityField curl(const NodeField& psi) const;
  NodeField rot(const VelocityField& u) const;
  /// L psi, the negative five-point Laplacian.
  NodeField laplacian(const NodeField& psi) const;
  Eigen::VectorXd divergence(const VelocityField& u) const;

  /// Solves L psi = rhs by the cached Cholesky factor, with one step of
  /// iterative refinement when the relative residual exceeds 1e-12.
  NodeField poisson_solve(const NodeField& rhs) const;

  const SparseMatrix& curl_matrix() const { return curl_; }
  const SparseMatrix& rot_matrix() const { return rot_; }
  const SparseMatrix& laplacian_matrix() const { return laplacian_; }
  const SparseMatrix& divergence_matrix() const { return divergence_; }

 private:
  Grid grid_;
  SparseMatrix curl_;        // 2 E x N, rows [comp1; comp2]
  SparseMatrix rot_;         // N x 2 E
  SparseMatrix laplacian_;   // N x N
  SparseMatrix divergence_;  // (n+1)^2 x 2 E
  std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> factor_;
};

/// Convenience for build_operators in the public API.
inline OperatorSet build_operators(const Grid& grid) { return OperatorSet(grid); }

enum class StreamMode { Strict, Lax };

struct StreamRecovery {
  NodeField psi;
  /// ||C psi - u|| / ||u|| (0 for u = 0).
  double relative_residual = 0.0;
};

/// Relative residual above which strict stream recovery fails.
inline constexpr double kStreamTolerance = 1e-8;

/// psi = L^{-1} R u. In strict mode throws NotDivergenceFree when u is not in
/// the curl range; lax mode returns the curl-range projection C psi's stream.
StreamRecovery stream_from_velocity(const OperatorSet& ops, const VelocityField& u,
                                    StreamMode mode = StreamMode::Strict);

/// <C(R u), v> - <R u, R v>; vanishes identically since R = C^T.
double green_formula_residual(const OperatorSet& ops, const VelocityField& u,
                              const VelocityField& v);

}  // namespace slipstokes
