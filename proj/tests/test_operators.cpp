#include "support.hpp"

#include <gtest/gtest.h>

using namespace slipstokes;
using namespace testing_support;

TEST(Operators, LaplacianMatchesHandStencil) {
  for (int n : {3, 5, 9}) {
    const OperatorSet ops(build_grid(n));
    const Eigen::MatrixXd dense = Eigen::MatrixXd(ops.laplacian_matrix());
    EXPECT_LT((dense - stencil_laplacian(n)).cwiseAbs().maxCoeff(), 1e-9 * (n + 1) * (n + 1));
  }
}

TEST(Operators, CurlIsForwardDifferenceOfStream) {
  // psi = x y (1 - x)(1 - y) is exact on the boundary; the curl entries are
  // differences of neighbouring node values divided by h.
  const Grid g = build_grid(6);
  const OperatorSet ops(g);
  auto psi_at = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= g.n || j >= g.n) return 0.0;
    const double x = g.line(i + 1), y = g.line(j + 1);
    return x * y * (1 - x) * (1 - y);
  };
  NodeField psi = NodeField::zeros(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) psi.values[g.node_index(i, j)] = psi_at(i, j);
  const VelocityField u = ops.curl(psi);
  for (int m = 0; m <= g.n; ++m) {
    for (int i = 0; i < g.n; ++i) {
      EXPECT_NEAR(u.comp1[g.comp1_index(i, m)], (psi_at(i, m) - psi_at(i, m - 1)) / g.h, 1e-13);
      EXPECT_NEAR(u.comp2[g.comp2_index(m, i)], -(psi_at(m, i) - psi_at(m - 1, i)) / g.h, 1e-13);
    }
  }
}

TEST(Operators, RotIsAdjointOfCurl) {
  std::mt19937_64 gen(11);
  for (int n : {3, 8, 16}) {
    const OperatorSet ops(build_grid(n));
    for (int p = 0; p < 20; ++p) {
      const NodeField psi = random_node(ops.grid(), gen);
      const VelocityField v = random_velocity(ops.grid(), gen);
      const double lhs = inner(ops.curl(psi), v);
      const double rhs = inner(psi, ops.rot(v));
      EXPECT_NEAR(lhs, rhs, 1e-12 * masked_l2_norm(ops.curl(psi)) * masked_l2_norm(v));
    }
  }
}

TEST(Operators, DivergenceOfCurlVanishes) {
  std::mt19937_64 gen(12);
  const OperatorSet ops(build_grid(16));
  for (int p = 0; p < 10; ++p) {
    const VelocityField u = ops.curl(random_node(ops.grid(), gen));
    const double scale = 2.0 / ops.grid().h * std::max(u.comp1.cwiseAbs().maxCoeff(),
                                                       u.comp2.cwiseAbs().maxCoeff());
    EXPECT_LT(ops.divergence(u).cwiseAbs().maxCoeff(), 1e-14 * scale);
  }
}

TEST(Operators, GreenFormulaResidualIsRoundoff) {
  std::mt19937_64 gen(13);
  const OperatorSet ops(build_grid(8));
  const VelocityField u = random_velocity(ops.grid(), gen);
  const VelocityField v = random_velocity(ops.grid(), gen);
  const NodeField ru = ops.rot(u);
  const double scale = std::abs(inner(ops.curl(ru), v)) + std::abs(inner(ru, ops.rot(v)));
  EXPECT_LT(std::abs(green_formula_residual(ops, u, v)), 1e-12 * scale);
}

TEST(Operators, PoissonSolveInvertsLaplacian) {
  std::mt19937_64 gen(14);
  const OperatorSet ops(build_grid(20));
  const NodeField psi = random_node(ops.grid(), gen);
  const NodeField back = ops.poisson_solve(ops.laplacian(psi));
  EXPECT_LT((back.values - psi.values).norm(), 1e-10 * psi.values.norm());
}

TEST(StreamRecovery, RecoversStreamOfCurlField) {
  std::mt19937_64 gen(15);
  const OperatorSet ops(build_grid(12));
  const NodeField psi = random_node(ops.grid(), gen);
  const StreamRecovery r = stream_from_velocity(ops, ops.curl(psi), StreamMode::Strict);
  EXPECT_LT(r.relative_residual, 1e-12);
  EXPECT_LT((r.psi.values - psi.values).norm(), 1e-9 * psi.values.norm());
}

TEST(StreamRecovery, RejectsFieldsOutsideCurlRange) {
  std::mt19937_64 gen(16);
  const OperatorSet ops(build_grid(8));
  const VelocityField u = random_velocity(ops.grid(), gen);
  EXPECT_ERROR_KIND(stream_from_velocity(ops, u, StreamMode::Strict),
                    ErrorKind::NotDivergenceFree);
  const StreamRecovery lax = stream_from_velocity(ops, u, StreamMode::Lax);
  EXPECT_GT(lax.relative_residual, kStreamTolerance);
}

TEST(StreamRecovery, ZeroFieldGivesZeroStream) {
  const OperatorSet ops(build_grid(4));
  const StreamRecovery r =
      stream_from_velocity(ops, VelocityField::zeros(ops.grid()), StreamMode::Strict);
  EXPECT_EQ(r.psi.values.norm(), 0.0);
  EXPECT_EQ(r.relative_residual, 0.0);
}
