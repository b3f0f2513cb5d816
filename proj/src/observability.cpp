#include "slipstokes/observability.hpp"

#include "slipstokes/errors.hpp"
#include "slipstokes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slipstokes {
namespace {

constexpr double kChainSlack = 1e-12;

Eigen::VectorXd decay(const Eigen::VectorXd& lambda, double t) {
  return (-lambda.array() * t).exp().matrix();
}

ChainCheck make_check(std::string name, double lhs, double rhs) {
  const bool ok = lhs <= rhs * (1.0 + kChainSlack) + 1e-300;
  return ChainCheck{std::move(name), lhs, rhs, ok};
}

double norm_of(const VelocityField& u) { return masked_l2_norm(u); }
double norm_of(const NodeField& f) { return masked_l2_norm(f); }

}  // namespace

EnergySeries energy_series(const EigenBasis& basis, const NodeField& psi0,
                           const std::vector<double>& times) {
  const Eigen::ArrayXd a2 = basis.project(psi0).array().square();
  const Eigen::ArrayXd lambda = basis.eigenvalues().array();
  EnergySeries s;
  s.times = times;
  for (double t : times) {
    const Eigen::ArrayXd w = a2 * (-2.0 * lambda * t).exp();
    s.energy.push_back((lambda * w).sum());
    s.rate.push_back(-2.0 * (lambda.square() * w).sum());
    s.curvature.push_back(4.0 * (lambda.cube() * w).sum());
  }
  return s;
}

double log_convexity_margin(const EnergySeries& series) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double e = series.energy[k];
    if (!(e > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "log-convexity margin needs positive energy");
    }
    const double product = series.curvature[k] * e;
    const double margin = (product - series.rate[k] * series.rate[k]) / (product + 1e-300);
    worst = std::min(worst, margin);
  }
  return worst;
}

MonotonicityReport gradient_energy_monotonicity(const EnergySeries& series) {
  MonotonicityReport report;
  for (std::size_t k = 1; k < series.energy.size(); ++k) {
    if (series.times[k] < series.times[k - 1]) continue;
    if (series.energy[k] > series.energy[k - 1] * (1.0 + 1e-12)) report.nonincreasing = false;
  }
  if (!series.energy.empty() && series.energy.back() == 0.0 && series.energy.front() != 0.0) {
    report.backward_unique = false;
  }
  return report;
}

bool ChainReport::all_satisfied() const {
  return std::all_of(checks.begin(), checks.end(), [](const ChainCheck& c) { return c.satisfied; });
}

ChainReport interpolation_chain_check(const EigenBasis& basis, const OperatorSet& ops,
                                      const NodeField& psi0, double t1, double t2,
                                      const RegionMask& region) {
  if (!(t2 > t1) || t1 < 0.0) {
    throw Error(ErrorKind::InvalidInput, "interpolation chain needs 0 <= t1 < t2");
  }
  const Eigen::VectorXd a0 = basis.project(psi0);
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  auto stream_at = [&](double t) { return basis.synthesize(a0.cwiseProduct(decay(lambda, t))); };

  ChainReport r;
  r.t1 = t1;
  r.t2 = t2;
  r.t3 = 0.5 * (t1 + t2);

  const NodeField psi1 = stream_at(t1);
  const NodeField psi2 = stream_at(t2);
  const NodeField psi3 = stream_at(r.t3);
  const NodeField psi13 = stream_at(0.5 * (t1 + r.t3));
  const NodeField w2 = ops.laplacian(psi2);
  const NodeField w3 = ops.laplacian(psi3);

  r.grad_t1 = norm_of(ops.curl(psi1));
  r.grad_t2 = norm_of(ops.curl(psi2));
  r.grad_t2_region = masked_l2_norm(ops.curl(psi2), &region);
  r.i1 = norm_of(ops.curl(w3));
  r.i2 = norm_of(ops.curl(psi3));

  const double lap3 = norm_of(w3);
  const double lap2 = norm_of(w2);
  const double lap13 = norm_of(ops.laplacian(psi13));
  const double gradlap2 = norm_of(ops.curl(w2));
  const double lambda1 = lambda[0];

  r.checks.push_back(make_check("smoothing", r.i1, r.grad_t1 / (r.t3 - t1)));
  r.checks.push_back(make_check("interpolation", lap3 * lap3, r.i1 * r.i2));
  r.checks.push_back(make_check("elliptic", r.grad_t2 * r.grad_t2, lap2 * lap2 / lambda1));
  r.checks.push_back(make_check("midpoint", lap13 * lap13, r.grad_t1 * r.grad_t1 / (r.t3 - t1)));
  r.checks.push_back(
      make_check("terminal", gradlap2 * gradlap2, r.grad_t1 * r.grad_t1 / ((t2 - t1) * (t2 - t1))));
  return r;
}

double three_ball_quotient(const EigenBasis& basis, const OperatorSet& ops,
                           const VelocityField& u0, double t1, double t2,
                           const RegionMask& region, double alpha) {
  if (!(t2 > t1) || t1 < 0.0) throw Error(ErrorKind::InvalidInput, "three-ball needs 0 <= t1 < t2");
  const Eigen::VectorXd a0 = modal_from_velocity(basis, ops, u0);
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const VelocityField u1 = velocity_from_modal(basis, ops, a0.cwiseProduct(decay(lambda, t1)));
  const VelocityField u2 = velocity_from_modal(basis, ops, a0.cwiseProduct(decay(lambda, t2)));
  UCSample s;
  s.t1 = t1;
  s.t2 = t2;
  s.norm_t1 = masked_l2_norm(u1);
  s.norm_t2 = masked_l2_norm(u2);
  s.norm_t2_region = masked_l2_norm(u2, &region);
  if (!(s.norm_t2_region > 0.0)) {
    throw Error(ErrorKind::ObservabilityDegenerate, "zero observation norm at t2");
  }
  return s.quotient(alpha);
}

double UCSample::quotient(double alpha) const {
  return norm_t2 / (std::pow(norm_t2_region, alpha) * std::pow(norm_t1, 1.0 - alpha));
}

UCSample draw_uc_sample(const EigenBasis& basis, const OperatorSet& ops, const RegionMask& region,
                        const UCSampler& sampler, std::uint64_t seed, std::uint64_t index) {
  SampleRng rng(seed, index);
  const Eigen::VectorXd a0 =
      random_stream_modal(basis, rng, std::min(sampler.modes, basis.size()));
  UCSample s;
  s.seed = seed;
  s.index = index;
  s.t1 = rng.uniform(0.0, sampler.t1_max * sampler.horizon);
  s.t2 = std::min(sampler.horizon,
                  s.t1 + rng.uniform(sampler.gap_min * sampler.horizon,
                                     sampler.gap_max * sampler.horizon));
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const VelocityField u1 = velocity_from_modal(basis, ops, a0.cwiseProduct(decay(lambda, s.t1)));
  const VelocityField u2 = velocity_from_modal(basis, ops, a0.cwiseProduct(decay(lambda, s.t2)));
  s.norm_t1 = masked_l2_norm(u1);
  s.norm_t2 = masked_l2_norm(u2);
  s.norm_t2_region = masked_l2_norm(u2, &region);
  return s;
}

std::vector<UCSample> draw_uc_batch(const EigenBasis& basis, const OperatorSet& ops,
                                    const RegionMask& region, const UCSampler& sampler,
                                    std::uint64_t seed, std::uint64_t first_index, int count) {
  std::vector<UCSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    out.push_back(draw_uc_sample(basis, ops, region, sampler, seed, first_index + k));
  }
  return out;
}

std::vector<double> UCFitOptions::default_alphas() {
  std::vector<double> a;
  for (int k = 1; k <= 19; ++k) a.push_back(0.05 * k);
  return a;
}

double required_constant(const UCSample& sample, double alpha) {
  const double gap = sample.t2 - sample.t1;
  const double target = std::log(sample.quotient(alpha)) / alpha;
  // g(y) = y + exp(y) / gap is increasing in y = log N.
  auto g = [gap](double y) { return y + std::exp(y) / gap; };
  double hi = target;
  double lo = target - 1.0;
  double width = 1.0;
  while (g(lo) >= target) {
    width *= 2.0;
    lo = target - width;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= target ? hi : lo) = mid;
  }
  return std::exp(hi);
}

bool uc_inequality_holds(const UCSample& sample, double alpha, double n_const) {
  const double lhs = std::log(sample.quotient(alpha));
  const double rhs = alpha * (std::log(n_const) + n_const / (sample.t2 - sample.t1));
  return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(lhs));
}

UCFit fit_uc_constants(const std::vector<UCSample>& samples, const UCFitOptions& options) {
  std::vector<const UCSample*> usable;
  for (const auto& s : samples) {
    if (s.feasible()) usable.push_back(&s);
  }
  UCFit fit;
  fit.used = static_cast<int>(usable.size());
  fit.excluded = static_cast<int>(samples.size() - usable.size());
  if (usable.empty()) {
    throw Error(ErrorKind::ObservabilityDegenerate, "every sample has zero observation norm");
  }
  if (fit.used < options.min_samples) {
    throw Error(ErrorKind::InvalidInput, "unique-continuation fit needs at least " +
                                             std::to_string(options.min_samples) + " samples");
  }
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : options.alphas) {
    double n_const = 0.0;
    for (const UCSample* s : usable) n_const = std::max(n_const, required_constant(*s, alpha));
    fit.table.emplace_back(alpha, n_const);
    if (n_const < best) {
      best = n_const;
      fit.alpha = alpha;
      fit.n_const = n_const;
    }
  }
  return fit;
}

std::vector<std::size_t> uc_violations(const UCFit& fit, const std::vector<UCSample>& samples) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].feasible() && !uc_inequality_holds(samples[k], fit.alpha, fit.n_const)) {
      out.push_back(k);
    }
  }
  return out;
}

ModalObserver::ModalObserver(const EigenBasis& basis, const OperatorSet& ops,
                             const RegionMask& region, int modes) {
  if (modes < 1 || modes > basis.size()) {
    throw Error(ErrorKind::InvalidInput, "observer mode count out of range");
  }
  require_same_grid(basis.grid(), region.grid, "ModalObserver");
  const Grid& grid = basis.grid();
  const int edges = grid.edge_count();
  Eigen::MatrixXd phi = ops.curl_matrix() * basis.vectors().leftCols(modes);
  for (int i = 0; i < modes; ++i) phi.col(i) /= std::sqrt(basis.eigenvalue(i));
  for (int k = 0; k < edges; ++k) {
    if (!region.comp1_mask[k]) phi.row(k).setZero();
    if (!region.comp2_mask[k]) phi.row(edges + k).setZero();
  }
  gram_ = grid.h * grid.h * (phi.transpose() * phi);
}

double ModalObserver::norm(const Eigen::VectorXd& q) const {
  return std::sqrt(std::max(0.0, q.dot(gram_ * q)));
}

double observability_ratio(const EigenBasis& basis, const OperatorSet& ops,
                           const VelocityField& terminal, double horizon,
                           const RegionMask& region, const TimeSet& times) {
  const Eigen::VectorXd b = modal_from_velocity(basis, ops, terminal);
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  Eigen::VectorXd q = b.cwiseProduct(lambda.cwiseSqrt());
  Eigen::Index modes = q.size();
  const double qmax = q.cwiseAbs().maxCoeff();
  while (modes > 1 && std::abs(q[modes - 1]) <= 1e-15 * qmax) --modes;
  q.conservativeResize(modes);
  const Eigen::VectorXd lam = lambda.head(modes);

  const double numerator = q.cwiseProduct(decay(lam, horizon)).norm();
  const ModalObserver observer(basis, ops, region, static_cast<int>(modes));
  auto integrand = [&](double t) { return observer.norm(q.cwiseProduct(decay(lam, horizon - t))); };
  double denominator = 0.0;
  for (const auto& [a, bnd] : times.intervals()) {
    denominator += adaptive_simpson_rel(integrand, a, bnd, 1e-9);
  }
  if (!(denominator > 1e-300)) {
    throw Error(ErrorKind::ObservabilityDegenerate, "observation integral vanishes");
  }
  return numerator / denominator;
}

namespace {

/// Composite Gauss-Legendre over E, graded towards the right end of each
/// interval where high modes of the adjoint are sharpest.
void composite_nodes(const TimeSet& times, std::vector<double>& nodes, std::vector<double>& weights) {
  const auto [x, w] = gauss_legendre(8);
  for (const auto& [a, b] : times.intervals()) {
    std::vector<double> cuts;
    for (int k = 0; k <= 16; ++k) cuts.push_back(a + (b - a) * k / 16.0);
    for (int k = 5; k <= 30; ++k) cuts.push_back(b - (b - a) * std::ldexp(1.0, -k));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double lo = cuts[p];
      const double half = 0.5 * (cuts[p + 1] - lo);
      if (half <= 0.0) continue;
      for (std::size_t k = 0; k < x.size(); ++k) {
        nodes.push_back(lo + half * (x[k] + 1.0));
        weights.push_back(half * w[k]);
      }
    }
  }
}

class RatioObjective {
 public:
  RatioObjective(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& gram, double horizon,
                 const TimeSet& times)
      : gram_(gram), initial_decay_(decay(lambda, horizon)) {
    std::vector<double> nodes, weights;
    composite_nodes(times, nodes, weights);
    decay_.resize(static_cast<Eigen::Index>(nodes.size()), lambda.size());
    weights_.resize(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      decay_.row(p) = decay(lambda, horizon - nodes[p]).transpose();
      weights_[p] = weights[p];
    }
  }

  double value(const Eigen::VectorXd& q, Eigen::VectorXd* gradient = nullptr) const {
    const Eigen::VectorXd top = q.cwiseProduct(initial_decay_);
    const double num = top.norm();
    const Eigen::MatrixXd y = decay_.array().rowwise() * q.transpose().array();
    const Eigen::MatrixXd gy = y * gram_;
    const Eigen::VectorXd norms = (y.array() * gy.array()).rowwise().sum().max(0.0).sqrt();
    const double den = weights_.dot(norms);
    if (gradient) {
      Eigen::VectorXd scale = Eigen::VectorXd::Zero(norms.size());
      for (Eigen::Index p = 0; p < norms.size(); ++p) {
        if (norms[p] > 0.0) scale[p] = weights_[p] / norms[p];
      }
      const Eigen::VectorXd dden = (decay_.array() * gy.array()).matrix().transpose() * scale;
      const Eigen::VectorXd dnum =
          num > 0.0 ? Eigen::VectorXd(top.cwiseProduct(initial_decay_) / num)
                    : Eigen::VectorXd::Zero(q.size());
      *gradient = (dnum * den - num * dden) / (den * den);
    }
    return num / den;
  }

 private:
  const Eigen::MatrixXd& gram_;
  Eigen::VectorXd initial_decay_;
  Eigen::MatrixXd decay_;
  Eigen::VectorXd weights_;
};

}  // namespace

ObservabilityEstimate estimate_observability_constant(const EigenBasis& basis,
                                                      const OperatorSet& ops, double horizon,
                                                      const RegionMask& region,
                                                      const TimeSet& times, int modes,
                                                      const ObservabilitySearchOptions& options) {
  if (modes < 1 || modes > basis.size()) {
    throw Error(ErrorKind::InvalidInput, "mode cutoff must satisfy 1 <= m <= n^2");
  }
  const ModalObserver observer(basis, ops, region, modes);
  const Eigen::VectorXd lambda = basis.eigenvalues().head(modes);
  const RatioObjective objective(lambda, observer.gram(), horizon, times);

  ObservabilityEstimate est;
  Eigen::VectorXd best_q;
  double best = -1.0;
  const int starts = modes == 1 ? 1 : std::max(1, options.starts);
  for (int s = 0; s < starts; ++s) {
    SampleRng rng(options.seed, static_cast<std::uint64_t>(s));
    Eigen::VectorXd q = modes == 1 ? Eigen::VectorXd::Ones(1) : rng.normal_vector(modes);
    q.normalize();
    Eigen::VectorXd g;
    double value = objective.value(q, &g);
    double step = 0.5;
    for (int it = 0; it < options.max_iterations && modes > 1; ++it) {
      ++est.iterations;
      Eigen::VectorXd tangent = g - g.dot(q) * q;
      const double tn = tangent.norm();
      if (!(tn > 0.0)) break;
      tangent /= tn;
      bool accepted = false;
      double gained = 0.0;
      while (step > 1e-12) {
        Eigen::VectorXd trial = (q + step * tangent).normalized();
        Eigen::VectorXd trial_g;
        const double tv = objective.value(trial, &trial_g);
        if (tv > value) {
          gained = tv - value;
          q = std::move(trial);
          g = std::move(trial_g);
          value = tv;
          step = std::min(1.0, 2.0 * step);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted || gained <= 1e-10 * value) break;
    }
    est.start_ratios.push_back(value);
    if (value > best) {
      best = value;
      best_q = q;
    }
  }

  est.maximizer = best_q;
  best_q.cwiseAbs().maxCoeff(&est.dominant_mode);
  const Eigen::VectorXd stream = best_q.cwiseQuotient(lambda.cwiseSqrt());
  est.terminal = velocity_from_modal(basis, ops, stream);
  est.ratio = observability_ratio(basis, ops, est.terminal, horizon, region, times);

  std::vector<double> sorted = est.start_ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  est.dispersion = median > 0.0 ? sorted.back() / median : 1.0;
  return est;
}

}  // namespace slipstokes
