#include "slipstokes/operators.hpp"

#include "slipstokes/errors.hpp"

#include <cmath>
#include <vector>

namespace slipstokes {
namespace {

using Triplet = Eigen::Triplet<double>;

OperatorSet::SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  OperatorSet::SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

OperatorSet::OperatorSet(const Grid& grid) : grid_(grid) {
  const int n = grid.n;
  const int nodes = grid.node_count();
  const int edges = grid.edge_count();
  const double inv_h = 1.0 / grid.h;

  // Forward differences with zero extension: edge m joins interior nodes
  // m-1 and m (indices outside [0, n) are boundary zeros).
  std::vector<Triplet> c;
  c.reserve(4 * edges);
  for (int m = 0; m <= n; ++m) {
    for (int i = 0; i < n; ++i) {
      // comp1 = d psi / dy on y-edge (i, m)
      const int r1 = grid.comp1_index(i, m);
      if (m < n) c.emplace_back(r1, grid.node_index(i, m), inv_h);
      if (m > 0) c.emplace_back(r1, grid.node_index(i, m - 1), -inv_h);
      // comp2 = -d psi / dx on x-edge (m, j = i)
      const int r2 = edges + grid.comp2_index(m, i);
      if (m < n) c.emplace_back(r2, grid.node_index(m, i), -inv_h);
      if (m > 0) c.emplace_back(r2, grid.node_index(m - 1, i), inv_h);
    }
  }
  curl_ = from_triplets(2 * edges, nodes, c);
  rot_ = SparseMatrix(curl_.transpose());
  laplacian_ = SparseMatrix(rot_ * curl_);
  laplacian_.prune(0.0);
  laplacian_.makeCompressed();

  std::vector<Triplet> d;
  d.reserve(4 * (n + 1) * (n + 1));
  for (int q = 0; q <= n; ++q) {
    for (int p = 0; p <= n; ++p) {
      const int row = q * (n + 1) + p;
      // d comp1 / dx across the cell: y-edges at x-lines p+1 and p.
      if (p < n) d.emplace_back(row, grid.comp1_index(p, q), inv_h);
      if (p > 0) d.emplace_back(row, grid.comp1_index(p - 1, q), -inv_h);
      // d comp2 / dy across the cell: x-edges at y-lines q+1 and q.
      if (q < n) d.emplace_back(row, edges + grid.comp2_index(p, q), inv_h);
      if (q > 0) d.emplace_back(row, edges + grid.comp2_index(p, q - 1), -inv_h);
    }
  }
  divergence_ = from_triplets((n + 1) * (n + 1), 2 * edges, d);

  auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(laplacian_);
  if (factor->info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, "Cholesky factorization of the Laplacian failed");
  }
  factor_ = std::move(factor);
}

VelocityField OperatorSet::curl(const NodeField& psi) const {
  require_same_grid(grid_, psi.grid, "curl");
  const Eigen::VectorXd stacked = curl_ * psi.values;
  const int edges = grid_.edge_count();
  return VelocityField{grid_, stacked.head(edges), stacked.tail(edges)};
}

NodeField OperatorSet::rot(const VelocityField& u) const {
  require_same_grid(grid_, u.grid, "rot");
  const int edges = grid_.edge_count();
  Eigen::VectorXd stacked(2 * edges);
  stacked << u.comp1, u.comp2;
  return NodeField{grid_, rot_ * stacked};
}

NodeField OperatorSet::laplacian(const NodeField& psi) const {
  require_same_grid(grid_, psi.grid, "laplacian");
  return NodeField{grid_, laplacian_ * psi.values};
}

Eigen::VectorXd OperatorSet::divergence(const VelocityField& u) const {
  require_same_grid(grid_, u.grid, "divergence");
  const int edges = grid_.edge_count();
  Eigen::VectorXd stacked(2 * edges);
  stacked << u.comp1, u.comp2;
  return divergence_ * stacked;
}

NodeField OperatorSet::poisson_solve(const NodeField& rhs) const {
  require_same_grid(grid_, rhs.grid, "poisson_solve");
  Eigen::VectorXd x = factor_->solve(rhs.values);
  const double rhs_norm = rhs.values.norm();
  if (rhs_norm > 0.0) {
    const Eigen::VectorXd r = rhs.values - laplacian_ * x;
    if (r.norm() > 1e-12 * rhs_norm) x += factor_->solve(r);
  }
  return NodeField{grid_, std::move(x)};
}

StreamRecovery stream_from_velocity(const OperatorSet& ops, const VelocityField& u,
                                    StreamMode mode) {
  require_same_grid(ops.grid(), u.grid, "stream_from_velocity");
  StreamRecovery out{ops.poisson_solve(ops.rot(u)), 0.0};
  const double scale = masked_l2_norm(u);
  if (scale > 1e-300) {
    VelocityField diff = ops.curl(out.psi);
    diff.comp1 -= u.comp1;
    diff.comp2 -= u.comp2;
    out.relative_residual = masked_l2_norm(diff) / scale;
  }
  if (mode == StreamMode::Strict && out.relative_residual > kStreamTolerance) {
    throw Error(ErrorKind::NotDivergenceFree,
                "velocity is not in the discrete curl range (relative residual " +
                    std::to_string(out.relative_residual) + ")");
  }
  return out;
}

double green_formula_residual(const OperatorSet& ops, const VelocityField& u,
                              const VelocityField& v) {
  require_same_grid(u.grid, v.grid, "green_formula_residual");
  const NodeField rot_u = ops.rot(u);
  return inner(ops.curl(rot_u), v) - inner(rot_u, ops.rot(v));
}

}  // namespace slipstokes
