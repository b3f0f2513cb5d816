#include "slipstokes/quadrature.hpp"

#include <numbers>

namespace slipstokes {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points) {
  std::vector<double> x(points), w(points);
  for (int i = 0; i < points; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= points; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = points == 1 ? z : p1;
      const double pm = points == 1 ? 1.0 : p0;
      dp = points * (z * pn - pm) / (z * z - 1.0);
      const double dz = pn / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace slipstokes
