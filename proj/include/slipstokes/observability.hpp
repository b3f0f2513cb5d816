#pragma once

#include "slipstokes/geometry.hpp"
#include "slipstokes/operators.hpp"
#include "slipstokes/random.hpp"
#include "slipstokes/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slipstokes {

/// Gradient energy e(t) = <psi, L psi> and its first two time derivatives,
/// evaluated in closed form per eigenmode.
struct EnergySeries {
  std::vector<double> times;
  std::vector<double> energy;     // e
  std::vector<double> rate;       // e' = -2 <w, w>
  std::vector<double> curvature;  // e'' = 4 <w, L w>
};

EnergySeries energy_series(const EigenBasis& basis, const NodeField& psi0,
                           const std::vector<double>& times);

/// min_k (e'' e - e'^2) / (e'' e + tiny). Throws InvalidInput on a zero-energy sample.
double log_convexity_margin(const EnergySeries& series);

struct MonotonicityReport {
  bool nonincreasing = true;
  /// e(T) = 0 implies e(0) = 0.
  bool backward_unique = true;

  bool ok() const { return nonincreasing && backward_unique; }
};

MonotonicityReport gradient_energy_monotonicity(const EnergySeries& series);

struct ChainCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
};

/// Interpolation chain behind the unique continuation estimate, measured on
/// fields at t1 < t3 = (t1 + t2) / 2 < t2.
struct ChainReport {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  double i1 = 0.0;  // ||grad lap psi(t3)||
  double i2 = 0.0;  // ||grad psi(t3)||
  double grad_t1 = 0.0;
  double grad_t2 = 0.0;
  double grad_t2_region = 0.0;
  std::vector<ChainCheck> checks;

  bool all_satisfied() const;
};

/// Checks, each as lhs <= rhs (relative slack 1e-12):
///   smoothing         I1 <= ||grad psi(t1)|| / (t3 - t1)
///   interpolation     ||lap psi(t3)||^2 <= I1 * I2
///   elliptic          ||grad psi(t2)||^2 <= ||lap psi(t2)||^2 / lambda_1
///   midpoint          ||lap psi((t1+t3)/2)||^2 <= ||grad psi(t1)||^2 / (t3 - t1)
///   terminal          ||grad lap psi(t2)||^2 <= ||grad psi(t1)||^2 / (t2 - t1)^2
ChainReport interpolation_chain_check(const EigenBasis& basis, const OperatorSet& ops,
                                      const NodeField& psi0, double t1, double t2,
                                      const RegionMask& region);

/// ||u(t2)|| / (||u(t2)||_omega^alpha ||u(t1)||^(1-alpha)).
/// Throws ObservabilityDegenerate when ||u(t2)||_omega = 0.
double three_ball_quotient(const EigenBasis& basis, const OperatorSet& ops,
                           const VelocityField& u0, double t1, double t2,
                           const RegionMask& region, double alpha);

/// Random draw for the unique-continuation fit.
struct UCSampler {
  int modes = 64;
  double horizon = 1.0;
  /// t1 ~ U(0, t1_max * T); t2 - t1 ~ U(gap_min * T, gap_max * T).
  double t1_max = 0.5;
  double gap_min = 0.05;
  double gap_max = 0.5;
};

struct UCSample {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  double norm_t1 = 0.0;
  double norm_t2 = 0.0;
  double norm_t2_region = 0.0;

  bool feasible() const { return norm_t2_region > 0.0 && norm_t1 > 0.0; }
  double quotient(double alpha) const;
};

UCSample draw_uc_sample(const EigenBasis& basis, const OperatorSet& ops, const RegionMask& region,
                        const UCSampler& sampler, std::uint64_t seed, std::uint64_t index);

std::vector<UCSample> draw_uc_batch(const EigenBasis& basis, const OperatorSet& ops,
                                    const RegionMask& region, const UCSampler& sampler,
                                    std::uint64_t seed, std::uint64_t first_index, int count);

struct UCFitOptions {
  std::vector<double> alphas = default_alphas();
  int min_samples = 10;

  static std::vector<double> default_alphas();
};

struct UCFit {
  double alpha = 0.0;
  double n_const = 0.0;
  int used = 0;
  int excluded = 0;
  /// Minimal N for each alpha on the grid.
  std::vector<std::pair<double, double>> table;
};

/// Smallest N with log Q <= alpha (log N + N / (t2 - t1)).
double required_constant(const UCSample& sample, double alpha);

/// Grid over alpha, bisection over N; infeasible samples are excluded.
UCFit fit_uc_constants(const std::vector<UCSample>& samples, const UCFitOptions& options = {});

bool uc_inequality_holds(const UCSample& sample, double alpha, double n_const);

/// Indices of samples violating the fitted inequality.
std::vector<std::size_t> uc_violations(const UCFit& fit, const std::vector<UCSample>& samples);

/// ||v(0)|| / int_E ||v(t)||_omega dt with adaptive Simpson (rel. tol 1e-9).
double observability_ratio(const EigenBasis& basis, const OperatorSet& ops,
                           const VelocityField& terminal, double horizon,
                           const RegionMask& region, const TimeSet& times);

/// Observation norm in the velocity-orthonormal modal coordinates
/// q_i = sqrt(lambda_i) * (stream coefficient i).
class ModalObserver {
 public:
  ModalObserver(const EigenBasis& basis, const OperatorSet& ops, const RegionMask& region,
                int modes);

  int modes() const { return static_cast<int>(gram_.rows()); }
  /// G_ij = <chi C e_i, chi C e_j> / sqrt(lambda_i lambda_j).
  const Eigen::MatrixXd& gram() const { return gram_; }
  double norm(const Eigen::VectorXd& q) const;

 private:
  Eigen::MatrixXd gram_;
};

struct ObservabilitySearchOptions {
  int starts = 20;
  int max_iterations = 500;
  std::uint64_t seed = 0;
};

struct ObservabilityEstimate {
  double ratio = 0.0;
  /// Maximizer in velocity-orthonormal coordinates (unit length).
  Eigen::VectorXd maximizer;
  VelocityField terminal;
  int dominant_mode = 0;
  std::vector<double> start_ratios;
  double dispersion = 1.0;  // best / median over starts
  int iterations = 0;
};

/// Multi-start projected gradient ascent of the observability ratio over
/// terminal data in the span of the first `modes` stream modes. The result
/// is a lower bound for the discrete observability constant.
ObservabilityEstimate estimate_observability_constant(const EigenBasis& basis,
                                                      const OperatorSet& ops, double horizon,
                                                      const RegionMask& region,
                                                      const TimeSet& times, int modes,
                                                      const ObservabilitySearchOptions& options = {});

}  // namespace slipstokes
