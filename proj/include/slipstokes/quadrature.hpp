#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace slipstokes {

/// Recursive adaptive Simpson on [a, b] with Richardson correction.
/// Terminates a branch when |S_left + S_right - S_whole| <= 15 * tol or at
/// `max_depth`. `norm` maps an integrand value to the scalar used for error
/// control (vector integrands typically control on their first entry).
template <typename Value, typename Fn, typename Norm>
Value adaptive_simpson(Fn&& f, double a, double b, double abs_tol, Norm&& norm,
                       int max_depth = 50) {
  const double m = 0.5 * (a + b);
  Value fa = f(a), fb = f(b), fm = f(m);
  const Value whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);

  std::function<Value(double, const Value&, double, const Value&, double, const Value&,
                      const Value&, double, int)>
      recurse = [&](double lo, const Value& flo, double hi, const Value& fhi, double mid,
                    const Value& fmid, const Value& est, double tol, int depth) -> Value {
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const Value flm = f(lm);
    const Value frm = f(rm);
    const Value left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const Value right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const Value delta = left + right - est;
    if (depth <= 0 || norm(delta) <= 15.0 * tol) {
      return left + right + delta / 15.0;
    }
    return recurse(lo, flo, mid, fmid, lm, flm, left, 0.5 * tol, depth - 1) +
           recurse(mid, fmid, hi, fhi, rm, frm, right, 0.5 * tol, depth - 1);
  };
  return recurse(a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

/// Scalar convenience with relative tolerance: a coarse pass sets the scale.
template <typename Fn>
double adaptive_simpson_rel(Fn&& f, double a, double b, double rel_tol, int max_depth = 50) {
  auto absval = [](double v) { return std::abs(v); };
  const double rough = adaptive_simpson<double>(f, a, b, 1e-3 * (b - a), absval, 8);
  const double tol = rel_tol * std::max(std::abs(rough), 1e-300);
  return adaptive_simpson<double>(f, a, b, tol, absval, max_depth);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points);

}  // namespace slipstokes
