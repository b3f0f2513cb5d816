#pragma once

#include "slipstokes/errors.hpp"
#include "slipstokes/geometry.hpp"
#include "slipstokes/operators.hpp"
#include "slipstokes/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using namespace slipstokes;

inline Eigen::VectorXd gaussian(int size, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = dist(gen);
  return v;
}

inline NodeField random_node(const Grid& grid, std::mt19937_64& gen) {
  return NodeField{grid, gaussian(grid.node_count(), gen)};
}

/// Arbitrary (not divergence-free) staggered field.
inline VelocityField random_velocity(const Grid& grid, std::mt19937_64& gen) {
  return VelocityField{grid, gaussian(grid.edge_count(), gen), gaussian(grid.edge_count(), gen)};
}

/// Five-point Dirichlet Laplacian assembled entry by entry.
inline Eigen::MatrixXd stencil_laplacian(int n) {
  const double h = 1.0 / (n + 1);
  const int N = n * n;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int r = j * n + i;
      L(r, r) = 4.0 / (h * h);
      if (i > 0) L(r, r - 1) = -1.0 / (h * h);
      if (i < n - 1) L(r, r + 1) = -1.0 / (h * h);
      if (j > 0) L(r, r - n) = -1.0 / (h * h);
      if (j < n - 1) L(r, r + n) = -1.0 / (h * h);
    }
  }
  return L;
}

/// (4/h^2)(sin^2(j pi h / 2) + sin^2(k pi h / 2)), ascending.
inline std::vector<double> closed_form_eigenvalues(int n) {
  const double h = 1.0 / (n + 1);
  std::vector<double> out;
  for (int j = 1; j <= n; ++j) {
    for (int k = 1; k <= n; ++k) {
      const double a = std::sin(j * M_PI * h / 2.0), b = std::sin(k * M_PI * h / 2.0);
      out.push_back(4.0 / (h * h) * (a * a + b * b));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Velocity of mode i scaled to unit L2 norm.
inline VelocityField unit_mode_velocity(const EigenBasis& basis, const OperatorSet& ops, int i) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(i + 1);
  a[i] = 1.0 / std::sqrt(basis.eigenvalue(i));
  return velocity_from_modal(basis, ops, a);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testing_support

#define EXPECT_ERROR_KIND(statement, expected_kind)                         \
  do {                                                                      \
    bool caught_ = false;                                                   \
    try {                                                                   \
      statement;                                                            \
    } catch (const ::slipstokes::Error& e_) {                               \
      caught_ = true;                                                       \
      EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                     \
    }                                                                       \
    EXPECT_TRUE(caught_) << "expected an Error from: " #statement;          \
  } while (0)
