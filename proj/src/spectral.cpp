#include "slipstokes/spectral.hpp"

#include "slipstokes/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace slipstokes {

EigenBasis::EigenBasis(Grid grid, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors,
                       std::string method, double max_residual, double gram_residual)
    : grid_(grid),
      eigenvalues_(std::move(eigenvalues)),
      vectors_(std::move(vectors)),
      method_(std::move(method)),
      max_residual_(max_residual),
      gram_residual_(gram_residual) {}

NodeField EigenBasis::mode(int i) const { return NodeField{grid_, vectors_.col(i)}; }

Eigen::VectorXd EigenBasis::project(const NodeField& f) const {
  require_same_grid(grid_, f.grid, "EigenBasis::project");
  return grid_.h * grid_.h * (vectors_.transpose() * f.values);
}

NodeField EigenBasis::synthesize(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() > size()) {
    throw Error(ErrorKind::Shape, "more coefficients than eigenpairs");
  }
  return NodeField{grid_, vectors_.leftCols(coefficients.size()) * coefficients};
}

double phi1(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0.0) v = -v;
}

double residual_of(const OperatorSet& ops, const Eigen::VectorXd& lambda, const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd lv = ops.laplacian_matrix() * v;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    const double r = (lv.col(i) - lambda[i] * v.col(i)).norm() / v.col(i).norm();
    worst = std::max(worst, r / lambda[i]);
  }
  return worst;
}

EigenBasis kronecker_basis(const OperatorSet& ops) {
  const Grid& grid = ops.grid();
  const int n = grid.n;
  const double inv_h2 = 1.0 / (grid.h * grid.h);

  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 2.0 * inv_h2);
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -inv_h2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, "1-D eigensolver failed");
  }
  const Eigen::VectorXd& mu = es.eigenvalues();
  Eigen::MatrixXd q = es.eigenvectors();
  for (int p = 0; p < n; ++p) {
    if (q(0, p) < 0.0) q.col(p) = -q.col(p);
  }

  std::vector<std::tuple<double, int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  for (int qy = 0; qy < n; ++qy) {
    for (int px = 0; px < n; ++px) pairs.emplace_back(mu[px] + mu[qy], px, qy);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });

  const int size = n * n;
  Eigen::VectorXd lambda(size);
  Eigen::MatrixXd vectors(size, size);
  const double inv_h = 1.0 / grid.h;
  for (int k = 0; k < size; ++k) {
    const auto [value, px, qy] = pairs[k];
    lambda[k] = value;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        vectors(grid.node_index(i, j), k) = q(i, px) * q(j, qy) * inv_h;
      }
    }
  }

  double gram = 0.0;
  if (n <= 32) {
    Eigen::MatrixXd g = grid.h * grid.h * (vectors.transpose() * vectors);
    g -= Eigen::MatrixXd::Identity(size, size);
    gram = g.cwiseAbs().maxCoeff();
  } else {
    // Tensor-product Gram entries are products of 1-D ones.
    Eigen::MatrixXd g1 = q.transpose() * q - Eigen::MatrixXd::Identity(n, n);
    const double e = g1.cwiseAbs().maxCoeff();
    gram = 2.0 * e + e * e;
  }
  const double res = residual_of(ops, lambda, vectors);
  return EigenBasis(grid, std::move(lambda), std::move(vectors), "kronecker", res, gram);
}

EigenBasis dense_basis(const OperatorSet& ops) {
  const Grid& grid = ops.grid();
  const Eigen::MatrixXd l = Eigen::MatrixXd(ops.laplacian_matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, "dense eigensolver failed");
  }
  Eigen::VectorXd lambda = es.eigenvalues();
  Eigen::MatrixXd vectors = es.eigenvectors() / grid.h;
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) fix_sign(vectors.col(k));
  Eigen::MatrixXd g = grid.h * grid.h * (vectors.transpose() * vectors);
  g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
  const double gram = g.cwiseAbs().maxCoeff();
  const double res = residual_of(ops, lambda, vectors);
  return EigenBasis(grid, std::move(lambda), std::move(vectors), "dense", res, gram);
}

void check_schedule(const std::vector<double>& samples, double horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::InvalidInput, "horizon must be finite and nonnegative");
  }
  for (double t : samples) {
    if (!(t >= 0.0 && t <= horizon)) {
      throw Error(ErrorKind::InvalidInput, "sample time outside [0, T]");
    }
  }
}

Eigen::VectorXd decay(const Eigen::VectorXd& lambda, double t) {
  return (-lambda.array() * t).exp().matrix();
}

SolveTrace make_trace(const EigenBasis& basis, TraceKind kind, double horizon) {
  SolveTrace trace;
  trace.grid = basis.grid();
  trace.kind = kind;
  trace.horizon = horizon;
  trace.eigenvalues = basis.eigenvalues();
  return trace;
}

void record(SolveTrace& trace, const OperatorSet& ops, const RegionMask* region, double t,
            NodeField w, Eigen::VectorXd modal) {
  NodeField psi = ops.poisson_solve(w);
  const VelocityField u = ops.curl(psi);
  trace.times.push_back(t);
  trace.norm_domain.push_back(masked_l2_norm(u));
  trace.norm_region.push_back(region ? masked_l2_norm(u, region)
                                     : std::numeric_limits<double>::quiet_NaN());
  trace.stream.push_back(std::move(psi));
  trace.vorticity.push_back(std::move(w));
  trace.modal.push_back(std::move(modal));
}

}  // namespace

EigenBasis eigendecompose(const OperatorSet& ops, EigenMethod method) {
  const int n = ops.grid().n;
  if (n > kMaxSpectralN) {
    throw Error(ErrorKind::Size, "eigenbasis limited to n <= 64 (got n=" + std::to_string(n) +
                                     "); use the Crank-Nicolson stepping path");
  }
  if (method == EigenMethod::Dense) {
    if (n > 24) throw Error(ErrorKind::Size, "dense eigensolver limited to n <= 24");
    return dense_basis(ops);
  }
  return kronecker_basis(ops);
}

NodeField heat_propagate(const EigenBasis& basis, const NodeField& w0, double dt) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::InvalidInput, "heat_propagate: negative time step");
  if (dt == 0.0) return w0;
  const Eigen::VectorXd c = basis.project(w0).cwiseProduct(decay(basis.eigenvalues(), dt));
  return basis.synthesize(c);
}

std::vector<double> uniform_schedule(double horizon, int count) {
  if (count < 1) throw Error(ErrorKind::InvalidInput, "schedule needs at least one sample");
  std::vector<double> t(count);
  if (count == 1) {
    t[0] = horizon;
    return t;
  }
  for (int k = 0; k < count; ++k) t[k] = horizon * k / (count - 1);
  t.back() = horizon;
  return t;
}

int ForcingSpec::support_violations() const {
  int violations = 0;
  for (const auto& [a, b] : pieces) {
    const bool inside = std::any_of(times.intervals().begin(), times.intervals().end(),
                                    [&](const TimeSet::Interval& iv) {
                                      return a >= iv.first && b <= iv.second;
                                    });
    if (!inside || !(a < b)) ++violations;
  }
  for (const auto& f : values) {
    for (int k = 0; k < f.grid.edge_count(); ++k) {
      if (!region.comp1_mask[k] && f.comp1[k] != 0.0) ++violations;
      if (!region.comp2_mask[k] && f.comp2[k] != 0.0) ++violations;
    }
  }
  return violations;
}

void ForcingSpec::validate() const {
  if (pieces.size() != values.size()) {
    throw Error(ErrorKind::ForcingSupport, "forcing has mismatched piece and value counts");
  }
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    if (pieces[k].first < pieces[k - 1].second) {
      throw Error(ErrorKind::ForcingSupport, "forcing pieces overlap or are unsorted");
    }
  }
  for (const auto& f : values) {
    require_same_grid(region.grid, f.grid, "ForcingSpec");
    if (!f.comp1.allFinite() || !f.comp2.allFinite()) {
      throw Error(ErrorKind::ForcingSupport, "forcing contains non-finite values");
    }
  }
  const int v = support_violations();
  if (v != 0) {
    throw Error(ErrorKind::ForcingSupport,
                "forcing violates its omega x E support in " + std::to_string(v) + " places");
  }
}

std::vector<std::pair<double, double>> uniform_pieces(const TimeSet& times, int per_interval) {
  if (per_interval < 1) throw Error(ErrorKind::InvalidInput, "need at least one piece per interval");
  std::vector<std::pair<double, double>> pieces;
  for (const auto& [a, b] : times.intervals()) {
    for (int k = 0; k < per_interval; ++k) {
      const double lo = a + (b - a) * k / per_interval;
      const double hi = (k + 1 == per_interval) ? b : a + (b - a) * (k + 1) / per_interval;
      pieces.emplace_back(lo, hi);
    }
  }
  return pieces;
}

VelocityField velocity_from_modal(const EigenBasis& basis, const OperatorSet& ops,
                                  const Eigen::VectorXd& stream_coefficients) {
  return ops.curl(basis.synthesize(stream_coefficients));
}

Eigen::VectorXd modal_from_velocity(const EigenBasis& basis, const OperatorSet& ops,
                                    const VelocityField& u) {
  return basis.project(stream_from_velocity(ops, u, StreamMode::Strict).psi);
}

SolveTrace solve_stokes_free(const EigenBasis& basis, const OperatorSet& ops,
                             const VelocityField& u0, double horizon,
                             const std::vector<double>& samples, const RegionMask* region) {
  require_same_grid(basis.grid(), u0.grid, "solve_stokes_free");
  check_schedule(samples, horizon);
  const NodeField psi0 = stream_from_velocity(ops, u0, StreamMode::Strict).psi;
  const NodeField w0 = ops.laplacian(psi0);

  SolveTrace trace = make_trace(basis, TraceKind::Free, horizon);
  trace.data_modal = basis.project(psi0);
  trace.end_modal = trace.data_modal.cwiseProduct(decay(basis.eigenvalues(), horizon));
  trace.data_energy = inner(psi0, w0);
  for (double t : samples) {
    record(trace, ops, region, t, heat_propagate(basis, w0, t),
           trace.data_modal.cwiseProduct(decay(basis.eigenvalues(), t)));
  }
  return trace;
}

SolveTrace solve_stokes_forced(const EigenBasis& basis, const OperatorSet& ops,
                               const VelocityField& u0, std::shared_ptr<const ForcingSpec> forcing,
                               double horizon, const std::vector<double>& samples,
                               const RegionMask* region) {
  require_same_grid(basis.grid(), u0.grid, "solve_stokes_forced");
  check_schedule(samples, horizon);
  if (!forcing) throw Error(ErrorKind::InvalidInput, "forced solve without forcing");
  forcing->validate();
  for (const auto& [a, b] : forcing->pieces) {
    if (b > horizon) throw Error(ErrorKind::ForcingSupport, "forcing extends beyond T");
  }

  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const NodeField psi0 = stream_from_velocity(ops, u0, StreamMode::Strict).psi;

  // Stream-coefficient forcing rate per piece: <R f, e_i> / lambda_i.
  std::vector<Eigen::VectorXd> rate;
  rate.reserve(forcing->values.size());
  for (const auto& f : forcing->values) {
    rate.push_back(basis.project(ops.rot(f)).cwiseQuotient(lambda));
  }

  std::vector<double> breaks{0.0, horizon};
  for (const auto& [a, b] : forcing->pieces) {
    breaks.push_back(a);
    breaks.push_back(b);
  }
  breaks.insert(breaks.end(), samples.begin(), samples.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return samples[x] < samples[y]; });

  SolveTrace trace = make_trace(basis, TraceKind::Forced, horizon);
  trace.forcing = forcing;
  trace.data_modal = basis.project(psi0);
  trace.data_energy = inner(psi0, ops.laplacian(psi0));

  std::vector<Eigen::VectorXd> at_sample(samples.size());
  Eigen::VectorXd a = trace.data_modal;
  double t = 0.0;
  std::size_t next = 0;
  auto emit = [&]() {
    while (next < order.size() && samples[order[next]] == t) at_sample[order[next++]] = a;
  };
  emit();
  for (std::size_t b = 1; b < breaks.size(); ++b) {
    const double t1 = breaks[b];
    const double tau = t1 - t;
    const double midpoint = 0.5 * (t + t1);
    Eigen::VectorXd damp = decay(lambda, tau);
    a = a.cwiseProduct(damp);
    for (std::size_t k = 0; k < forcing->pieces.size(); ++k) {
      const auto& [lo, hi] = forcing->pieces[k];
      if (midpoint > lo && midpoint < hi) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += rate[k][i] * tau * phi1(lambda[i] * tau);
        break;
      }
    }
    t = t1;
    emit();
    if (t1 == horizon) trace.end_modal = a;
  }
  if (trace.end_modal.size() == 0) trace.end_modal = a;

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Eigen::VectorXd& coeff = at_sample[s];
    record(trace, ops, region, samples[s], basis.synthesize(coeff.cwiseProduct(lambda)), coeff);
  }
  return trace;
}

SolveTrace solve_adjoint(const EigenBasis& basis, const OperatorSet& ops,
                         const VelocityField& terminal, double horizon,
                         const std::vector<double>& samples, const RegionMask* region) {
  require_same_grid(basis.grid(), terminal.grid, "solve_adjoint");
  check_schedule(samples, horizon);
  const NodeField psi_t = stream_from_velocity(ops, terminal, StreamMode::Strict).psi;
  const NodeField w_t = ops.laplacian(psi_t);

  SolveTrace trace = make_trace(basis, TraceKind::Adjoint, horizon);
  trace.data_modal = basis.project(psi_t);
  trace.end_modal = trace.data_modal.cwiseProduct(decay(basis.eigenvalues(), horizon));
  trace.data_energy = inner(psi_t, w_t);
  for (double t : samples) {
    const double back = horizon - t;
    record(trace, ops, region, t, heat_propagate(basis, w_t, back),
           trace.data_modal.cwiseProduct(decay(basis.eigenvalues(), back)));
  }
  return trace;
}

SolveTrace solve_stokes_free_stepping(const OperatorSet& ops, const VelocityField& u0,
                                      double horizon, int steps,
                                      const std::vector<double>& samples,
                                      const RegionMask* region) {
  require_same_grid(ops.grid(), u0.grid, "solve_stokes_free_stepping");
  check_schedule(samples, horizon);
  if (steps < 1) throw Error(ErrorKind::InvalidInput, "stepping needs at least one step");
  const double dt = horizon / steps;
  const NodeField psi0 = stream_from_velocity(ops, u0, StreamMode::Strict).psi;

  using SparseMatrix = OperatorSet::SparseMatrix;
  SparseMatrix identity(ops.grid().node_count(), ops.grid().node_count());
  identity.setIdentity();
  const SparseMatrix implicit = identity + 0.5 * dt * ops.laplacian_matrix();
  const SparseMatrix explicit_part = identity - 0.5 * dt * ops.laplacian_matrix();
  Eigen::SimplicialLDLT<SparseMatrix> solver(implicit);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Internal, "Crank-Nicolson factorization failed");
  }

  SolveTrace trace;
  trace.grid = ops.grid();
  trace.kind = TraceKind::Free;
  trace.horizon = horizon;
  NodeField w = ops.laplacian(psi0);
  trace.data_energy = inner(psi0, w);

  std::vector<std::pair<int, std::size_t>> wanted;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    wanted.emplace_back(static_cast<int>(std::lround(samples[s] / dt)), s);
  }
  std::sort(wanted.begin(), wanted.end());
  std::vector<NodeField> snapshots(samples.size(), NodeField::zeros(ops.grid()));
  std::size_t next = 0;
  for (int step = 0; step <= steps && next < wanted.size(); ++step) {
    if (step > 0) w.values = solver.solve(explicit_part * w.values);
    while (next < wanted.size() && wanted[next].first == step) snapshots[wanted[next++].second] = w;
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    record(trace, ops, region, samples[s], snapshots[s], Eigen::VectorXd());
  }
  return trace;
}

double energy_identity_residual(const SolveTrace& trace) {
  if (trace.kind != TraceKind::Free) {
    throw Error(ErrorKind::InvalidInput, "energy identity applies to free traces only");
  }
  if (trace.eigenvalues.size() == 0 || trace.data_modal.size() == 0) {
    throw Error(ErrorKind::InvalidInput, "energy identity needs a spectral trace");
  }
  const double scale = trace.data_energy;
  if (scale < 1e-300) return 0.0;
  const Eigen::ArrayXd lambda = trace.eigenvalues.array();
  const Eigen::ArrayXd weight = lambda * trace.data_modal.array().square();
  double worst = 0.0;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double s = trace.times[k];
    const double energy = inner(trace.stream[k], trace.vorticity[k]);
    // 2 int_0^s ||w||^2 dt = sum lambda_i a_i^2 (1 - exp(-2 lambda_i s))
    double dissipated = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      dissipated += weight[i] * -std::expm1(-2.0 * lambda[i] * s);
    }
    worst = std::max(worst, std::abs(energy + dissipated - scale) / scale);
  }
  return worst;
}

double duality_pairing_residual(const EigenBasis& basis, const OperatorSet& ops,
                                const SolveTrace& forward, const SolveTrace& adjoint) {
  if (adjoint.kind != TraceKind::Adjoint || forward.kind == TraceKind::Adjoint) {
    throw Error(ErrorKind::InvalidInput, "duality pairing needs a forward and an adjoint trace");
  }
  require_same_grid(forward.grid, adjoint.grid, "duality_pairing_residual");
  const double horizon = forward.horizon;
  if (std::abs(horizon - adjoint.horizon) > 1e-14 * std::max(1.0, horizon)) {
    throw Error(ErrorKind::InvalidInput, "forward and adjoint traces have different horizons");
  }

  const double terminal = inner(velocity_from_modal(basis, ops, forward.end_modal),
                                velocity_from_modal(basis, ops, adjoint.data_modal));
  const double initial = inner(velocity_from_modal(basis, ops, forward.data_modal),
                               velocity_from_modal(basis, ops, adjoint.end_modal));

  const Eigen::VectorXd& lambda = basis.eigenvalues();
  double forcing_term = 0.0;
  double forcing_scale = 0.0;
  if (forward.forcing) {
    const ForcingSpec& spec = *forward.forcing;
    for (std::size_t k = 0; k < spec.pieces.size(); ++k) {
      const auto [lo, hi] = spec.pieces[k];
      const double width = hi - lo;
      const Eigen::VectorXd r = basis.project(ops.rot(spec.values[k]));
      double piece = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        // int_lo^hi exp(-lambda (T - t)) dt
        const double weight = std::exp(-lambda[i] * (horizon - hi)) * width * phi1(lambda[i] * width);
        piece += r[i] * adjoint.data_modal[i] * weight;
      }
      forcing_term += piece;
      forcing_scale += std::abs(piece);
    }
  }
  const double scale = std::abs(terminal) + std::abs(initial) + forcing_scale;
  if (scale < 1e-300) return 0.0;
  return std::abs(terminal - initial - forcing_term) / scale;
}

}  // namespace slipstokes
