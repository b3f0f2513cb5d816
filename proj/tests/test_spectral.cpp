#include "support.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <memory>

using namespace slipstokes;
using namespace testing_support;

TEST(Eigen, MatchesClosedFormSpectrum) {
  for (int n : {3, 8, 16}) {
    const OperatorSet ops(build_grid(n));
    const EigenBasis basis = eigendecompose(ops);
    const std::vector<double> exact = closed_form_eigenvalues(n);
    for (int i = 0; i < basis.size(); ++i) {
      EXPECT_LT(rel_diff(basis.eigenvalue(i), exact[i]), 1e-10) << "n=" << n << " i=" << i;
    }
    EXPECT_LT(basis.max_residual(), 1e-10);
    EXPECT_LT(basis.gram_residual(), 1e-12);
  }
}

TEST(Eigen, DenseAndKroneckerAgree) {
  const OperatorSet ops(build_grid(8));
  const EigenBasis k = eigendecompose(ops, EigenMethod::Kronecker);
  const EigenBasis d = eigendecompose(ops, EigenMethod::Dense);
  EXPECT_LT((k.eigenvalues() - d.eigenvalues()).cwiseAbs().maxCoeff(),
            1e-10 * d.eigenvalues().maxCoeff());
  // Both bases must span the same eigenspaces: project one onto the other.
  const double h2 = ops.grid().h * ops.grid().h;
  const Eigen::MatrixXd overlap = h2 * k.vectors().transpose() * d.vectors();
  EXPECT_LT((overlap.transpose() * overlap - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(Eigen, SizeLimits) {
  EXPECT_ERROR_KIND(eigendecompose(OperatorSet(build_grid(65))), ErrorKind::Size);
  EXPECT_ERROR_KIND(eigendecompose(OperatorSet(build_grid(25)), EigenMethod::Dense),
                    ErrorKind::Size);
}

TEST(Heat, PropagatorMatchesDenseMatrixExponential) {
  const int n = 8;
  const OperatorSet ops(build_grid(n));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(21);
  const NodeField w0 = random_node(ops.grid(), gen);
  for (double dt : {0.0, 1e-3, 0.05, 0.3}) {
    const Eigen::MatrixXd E = (-dt * stencil_laplacian(n)).exp();
    const Eigen::VectorXd expected = E * w0.values;
    const NodeField got = heat_propagate(basis, w0, dt);
    EXPECT_LT((got.values - expected).norm(), 1e-10 * w0.values.norm()) << "dt=" << dt;
  }
  EXPECT_ERROR_KIND(heat_propagate(basis, w0, -0.1), ErrorKind::InvalidInput);
}

TEST(FreeSolve, SingleModeDecaysAtItsEigenvalue) {
  const OperatorSet ops(build_grid(16));
  const EigenBasis basis = eigendecompose(ops);
  for (int i : {0, 3, 40}) {
    const VelocityField u0 = unit_mode_velocity(basis, ops, i);
    const SolveTrace tr = solve_stokes_free(basis, ops, u0, 1.0, uniform_schedule(1.0, 5));
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      // Roundoff in the other modes (relative size ~1e-16) decays more slowly
      // than a high mode, hence the absolute floor.
      const double expected = std::exp(-basis.eigenvalue(i) * tr.times[k]);
      EXPECT_LE(std::abs(tr.norm_domain[k] - expected), 1e-10 * expected + 1e-14);
    }
  }
}

TEST(FreeSolve, EnergyIdentityHolds) {
  const OperatorSet ops(build_grid(16));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(22);
  for (int p = 0; p < 5; ++p) {
    const VelocityField u0 = ops.curl(random_node(ops.grid(), gen));
    const SolveTrace tr = solve_stokes_free(basis, ops, u0, 1.0, uniform_schedule(1.0, 17));
    EXPECT_LT(energy_identity_residual(tr), 1e-10);
  }
}

TEST(FreeSolve, RejectsNonSolenoidalData) {
  const OperatorSet ops(build_grid(8));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(23);
  EXPECT_ERROR_KIND(solve_stokes_free(basis, ops, random_velocity(ops.grid(), gen), 1.0, {0.0, 1.0}),
                    ErrorKind::NotDivergenceFree);
}

TEST(FreeSolve, VorticityFollowsHeatEquation) {
  // w(t) = exp(-t L) w0 checked against the dense exponential.
  const int n = 8;
  const OperatorSet ops(build_grid(n));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(24);
  const NodeField psi0 = random_node(ops.grid(), gen);
  const SolveTrace tr = solve_stokes_free(basis, ops, ops.curl(psi0), 0.2, {0.0, 0.1, 0.2});
  const Eigen::MatrixXd L = stencil_laplacian(n);
  const Eigen::VectorXd w0 = L * psi0.values;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Eigen::VectorXd expected = (-tr.times[k] * L).exp() * w0;
    EXPECT_LT((tr.vorticity[k].values - expected).norm(), 1e-9 * w0.norm());
  }
}

TEST(ForcedSolve, ConstantForcingOnOneModeMatchesClosedForm) {
  // f = c * phi_1 on the whole square: a(T) = e^{-lT} a0 + c (1 - e^{-lT}) / l.
  const OperatorSet ops(build_grid(12));
  const EigenBasis basis = eigendecompose(ops);
  const double lambda = basis.eigenvalue(0);
  const VelocityField phi = unit_mode_velocity(basis, ops, 0);
  auto spec = std::make_shared<ForcingSpec>();
  spec->region = full_region(ops.grid());
  spec->times = build_time_set({{0.0, 1.0}}, 1.0);
  spec->pieces = {{0.0, 0.5}, {0.5, 1.0}};
  const double c1 = 0.7, c2 = -0.4;
  VelocityField f1 = phi, f2 = phi;
  f1.comp1 *= c1; f1.comp2 *= c1;
  f2.comp1 *= c2; f2.comp2 *= c2;
  spec->values = {f1, f2};
  const VelocityField u0 = phi;
  const SolveTrace tr = solve_stokes_forced(basis, ops, u0, spec, 1.0, {0.0, 0.5, 1.0});
  const double a_half = std::exp(-lambda * 0.5) + c1 * (1 - std::exp(-lambda * 0.5)) / lambda;
  const double a_end = std::exp(-lambda * 0.5) * a_half + c2 * (1 - std::exp(-lambda * 0.5)) / lambda;
  EXPECT_LT(rel_diff(tr.norm_domain[1], std::abs(a_half)), 1e-10);
  EXPECT_LT(rel_diff(tr.norm_domain[2], std::abs(a_end)), 1e-10);
}

TEST(ForcedSolve, RejectsForcingOutsideSupport) {
  const OperatorSet ops(build_grid(8));
  const EigenBasis basis = eigendecompose(ops);
  auto spec = std::make_shared<ForcingSpec>();
  spec->region = build_region_mask(ops.grid(), Rectangle{0.0, 0.5, 0.0, 0.5});
  spec->times = build_time_set({{0.2, 0.8}}, 1.0);
  spec->pieces = {{0.2, 0.8}};
  VelocityField f = VelocityField::zeros(ops.grid());
  f.comp1.setOnes();  // nonzero everywhere, including outside omega
  spec->values = {f};
  EXPECT_GT(spec->support_violations(), 0);
  EXPECT_ERROR_KIND(spec->validate(), ErrorKind::ForcingSupport);
  const VelocityField u0 = unit_mode_velocity(basis, ops, 0);
  EXPECT_ERROR_KIND(solve_stokes_forced(basis, ops, u0, spec, 1.0, {0.0, 1.0}),
                    ErrorKind::ForcingSupport);
}

TEST(Adjoint, IsTimeReversedFreeSolve) {
  const OperatorSet ops(build_grid(10));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(25);
  const VelocityField vT = ops.curl(random_node(ops.grid(), gen));
  const SolveTrace adj = solve_adjoint(basis, ops, vT, 1.0, {0.0, 0.25, 1.0});
  const SolveTrace fwd = solve_stokes_free(basis, ops, vT, 1.0, {0.0, 0.75, 1.0});
  EXPECT_LT(rel_diff(adj.norm_domain[0], fwd.norm_domain[2]), 1e-12);
  EXPECT_LT(rel_diff(adj.norm_domain[1], fwd.norm_domain[1]), 1e-12);
  EXPECT_LT(rel_diff(adj.norm_domain[2], fwd.norm_domain[0]), 1e-12);
}

TEST(Adjoint, DualityPairingWithForcing) {
  const OperatorSet ops(build_grid(10));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(26);
  auto spec = std::make_shared<ForcingSpec>();
  spec->region = build_region_mask(ops.grid(), Rectangle{0.0, 0.5, 0.0, 0.5});
  spec->times = build_time_set({{0.1, 0.4}, {0.6, 0.9}}, 1.0);
  spec->pieces = uniform_pieces(spec->times, 3);
  for (std::size_t k = 0; k < spec->pieces.size(); ++k) {
    spec->values.push_back(restrict_to(random_velocity(ops.grid(), gen), spec->region));
  }
  const VelocityField u0 = ops.curl(random_node(ops.grid(), gen));
  const SolveTrace fwd = solve_stokes_forced(basis, ops, u0, spec, 1.0, {0.0, 1.0});
  const SolveTrace adj =
      solve_adjoint(basis, ops, ops.curl(random_node(ops.grid(), gen)), 1.0, {0.0, 1.0});
  EXPECT_LT(duality_pairing_residual(basis, ops, fwd, adj), 1e-10);
  const SolveTrace other = solve_adjoint(basis, ops, u0, 2.0, {0.0, 2.0});
  EXPECT_ERROR_KIND(duality_pairing_residual(basis, ops, fwd, other), ErrorKind::InvalidInput);
}

TEST(Stepping, CrankNicolsonConvergesAtSecondOrder) {
  const OperatorSet ops(build_grid(16));
  const EigenBasis basis = eigendecompose(ops);
  std::mt19937_64 gen(27);
  Eigen::VectorXd a = gaussian(10, gen);
  for (int i = 0; i < 10; ++i) a[i] /= std::sqrt(basis.eigenvalue(i));
  const VelocityField u0 = velocity_from_modal(basis, ops, a);
  const SolveTrace exact = solve_stokes_free(basis, ops, u0, 0.5, {0.0, 0.5});
  double prev = 0.0;
  for (int steps : {50, 100, 200}) {
    const SolveTrace cn = solve_stokes_free_stepping(ops, u0, 0.5, steps, {0.0, 0.5});
    const double err =
        (cn.vorticity.back().values - exact.vorticity.back().values).norm() /
        exact.vorticity.back().values.norm();
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.6) << "steps=" << steps;
    prev = err;
  }
}

TEST(Helpers, Phi1IsAccurateNearZero) {
  EXPECT_DOUBLE_EQ(phi1(0.0), 1.0);
  EXPECT_NEAR(phi1(1e-10), 1.0 - 0.5e-10, 1e-18);
  EXPECT_NEAR(phi1(2.0), (1.0 - std::exp(-2.0)) / 2.0, 1e-16);
  const auto pieces = uniform_pieces(build_time_set({{0.0, 0.3}, {0.5, 1.0}}, 1.0), 2);
  ASSERT_EQ(pieces.size(), 4u);
  EXPECT_DOUBLE_EQ(pieces[3].first, 0.75);
}
