#pragma once

// Test-only oracles, independent of the library's computational paths:
// transcendental root finding on boundary-condition determinants of the
// continuum ODE, and closed-form integral values.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracles {

/// Characteristic determinant of -u'' = k^2 u on (0,1) under two boundary
/// rows acting on (u(0), u'(0), u(1), u'(1)).
inline double interval_char_det(const Eigen::Matrix<double, 2, 4>& bc, double k) {
  // fundamental system u1 = cos(kx), u2 = sin(kx)/k (entire in k^2)
  const double c = std::cos(k), s = (k == 0.0) ? 1.0 : std::sin(k) / k;
  Eigen::Vector4d t1(1.0, 0.0, c, -k * std::sin(k));
  Eigen::Vector4d t2(0.0, 1.0, s, std::cos(k));
  Eigen::Matrix2d m;
  m << bc.row(0).dot(t1), bc.row(0).dot(t2), bc.row(1).dot(t1),
      bc.row(1).dot(t2);
  return m.determinant();
}

/// Positive eigenvalues k^2 of the boundary problem, found by bisection on
/// sign changes of the determinant over (0, kmax].
inline std::vector<double> interval_eigenvalues(
    const Eigen::Matrix<double, 2, 4>& bc, double kmax, int scan = 200000) {
  std::vector<double> roots;
  auto f = [&](double k) { return interval_char_det(bc, k); };
  double prev_k = 1e-6, prev_v = f(prev_k);
  for (int i = 1; i <= scan; ++i) {
    const double k = 1e-6 + (kmax - 1e-6) * i / scan;
    const double v = f(k);
    if (prev_v == 0.0) {
      roots.push_back(prev_k * prev_k);
    } else if (prev_v * v < 0.0) {
      double a = prev_k, b = k, fa = prev_v;
      for (int it = 0; it < 200; ++it) {
        const double c2 = 0.5 * (a + b), fc = f(c2);
        if (fa * fc <= 0.0) {
          b = c2;
        } else {
          a = c2;
          fa = fc;
        }
      }
      const double r = 0.5 * (a + b);
      roots.push_back(r * r);
    }
    prev_k = k;
    prev_v = v;
  }
  return roots;
}

/// Boundary rows of the soft extension of the interval Laplacian:
/// u'(0) = u'(1) = u(1) - u(0).
inline Eigen::Matrix<double, 2, 4> interval_krein_rows() {
  Eigen::Matrix<double, 2, 4> bc;
  bc << 1.0, 1.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
  return bc;
}

/// Dirichlet rows u(0) = u(1) = 0.
inline Eigen::Matrix<double, 2, 4> interval_dirichlet_rows() {
  Eigen::Matrix<double, 2, 4> bc;
  bc << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  return bc;
}

/// Resolvent kernel of the Dirichlet interval Laplacian at spectral
/// parameter z (principal branch of sqrt(-z)).
inline std::complex<double> dirichlet_resolvent_kernel(double x, double y,
                                                       std::complex<double> z) {
  const std::complex<double> kappa = std::sqrt(-z);
  const double lo = std::min(x, y), hi = std::max(x, y);
  return std::sinh(kappa * lo) * std::sinh(kappa * (1.0 - hi)) /
         (kappa * std::sinh(kappa));
}

// closed-form values used as frozen expected test data
inline constexpr double green_trace = 1.0 / 6.0;               // int x(1-x)
inline constexpr double green_hs_sq = 1.0 / 90.0;              // int int G^2
inline constexpr double reduced_trace = 1.0 / 15.0;            // 1/6 - tr(P G P-part)
inline constexpr double reduced_hs_sq = 11.0 / 12600.0;        // sum mu_K^{-2}

}  // namespace oracles
