#include <doctest.h>

#include <kreinkit/numlin.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace kreinkit::numlin;

TEST_CASE("trapezoid weights on four uniform nodes") {
  auto space = make_grid_space(0.0, 1.0, 8);
  CHECK(space->rule() == QuadRule::Trapezoid);
  // the classic composite pattern h*(1/2,1,...,1,1/2)
  auto s4 = std::make_shared<GridSpace>(
      Domain{0.0, 1.0, false},
      (RealVector(4) << 0.0, 1.0 / 3, 2.0 / 3, 1.0).finished(),
      (RealVector(4) << 1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6).finished(),
      QuadRule::Trapezoid);
  CHECK(s4->weights()(0) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  for (Eigen::Index n : {8, 33, 100}) {
    auto sp = make_grid_space(0.0, 1.0, n);
    const double h = 1.0 / static_cast<double>(n - 1);
    CHECK(sp->weights()(0) == doctest::Approx(h / 2).epsilon(1e-14));
    CHECK(sp->weights()(1) == doctest::Approx(h).epsilon(1e-14));
    // constants integrate exactly
    GridFun one = sample(sp, [](double) { return 1.0; });
    CHECK(std::abs(inner(one, one) - 1.0) < 1e-14);
  }
}

TEST_CASE("grid space rejects bad input") {
  CHECK_THROWS_AS(make_grid_space(1.0, 0.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_grid_space(0.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_halfline_space(-3.0, 64), std::invalid_argument);
}

TEST_CASE("half-line space resolves exponential inner products") {
  auto sp = make_halfline_space(30.0, 2048);
  GridFun f = sample(sp, [](double x) { return std::exp(-x); });
  CHECK(std::abs(inner(f, f) - 0.5) < 1e-8);
}

TEST_CASE("inner products against closed-form integrals") {
  auto sp = make_grid_space(0.0, 1.0, 2048);
  GridFun s = sample(sp, [](double x) { return std::sin(M_PI * x); });
  CHECK(std::abs(inner(s, s) - 0.5) < 1e-8);
  GridFun one = sample(sp, [](double) { return 1.0; });
  GridFun x = sample(sp, [](double t) { return t; });
  // degree-one polynomials integrate to machine precision on trapezoid grids
  CHECK(std::abs(inner(one, x) - 0.5) < 1e-13);
  CHECK(std::abs(inner(one, one) - 1.0) < 1e-13);

  // conjugate-linear first slot, linear second
  GridFun iu = GridFun(sp, Complex(0, 1) * one.values);
  CHECK(std::abs(inner(iu, x) - Complex(0, -1) * inner(one, x)) < 1e-14);
  CHECK(std::abs(inner(x, iu) - Complex(0, 1) * inner(x, one)) < 1e-14);

  auto other = make_grid_space(0.0, 2.0, 2048);
  GridFun g(other, ComplexVector::Ones(2048));
  CHECK_THROWS_AS(inner(one, g), std::invalid_argument);
}

TEST_CASE("orthonormalization") {
  auto sp = make_grid_space(0.0, 1.0, 256);
  GridFun one = sample(sp, [](double) { return 1.0; });
  GridFun x = sample(sp, [](double t) { return t; });
  auto basis = orthonormalize({one, x});
  CHECK(basis.dim() == 2);
  CHECK(basis.gram_defect() < 1e-10);

  GridFun zero = sample(sp, [](double) { return 0.0; });
  CHECK_THROWS_AS(orthonormalize({zero}), std::invalid_argument);
  CHECK_THROWS_AS(orthonormalize({one, one}), std::invalid_argument);

  // an already orthonormal family is unchanged up to column phases
  auto again = orthonormalize({basis.column(0), basis.column(1)});
  for (Eigen::Index k = 0; k < 2; ++k) {
    const Complex phase = inner(again.column(k), basis.column(k));
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    GridFun diff(sp, again.column(k).values - phase * basis.column(k).values);
    CHECK(norm(diff) < 1e-12);
  }
}

TEST_CASE("projection") {
  auto sp = make_grid_space(0.0, 1.0, 256);
  GridFun one = sample(sp, [](double) { return 1.0; });
  GridFun x = sample(sp, [](double t) { return t; });
  auto basis = orthonormalize({one, x});

  GridFun u(sp, one.values + 3.0 * x.values);
  GridFun pu = project(basis, u);
  CHECK(norm(GridFun(sp, pu.values - u.values)) < 1e-10);

  GridFun s2 = sample(sp, [](double t) { return std::sin(2 * M_PI * t); });
  GridFun orth(sp, s2.values - project(basis, s2).values);
  CHECK(norm(GridFun(sp, project(basis, orth).values)) < 1e-10);

  auto span1 = orthonormalize({one});
  GridFun px = project(span1, x);
  CHECK(std::abs(px.values(100) - 0.5) < 1e-8);

  auto p = projector_matrix(basis);
  CHECK(operator_norm_estimate(ComplexMatrix(p.matrix * p.matrix - p.matrix)) <
        1e-10);
  CHECK(hermitian_defect(p) < 1e-10);
}

TEST_CASE("hermitian eigensolve basics") {
  auto sp = make_grid_space(0.0, 1.0, 64);
  const Eigen::Index n = sp->size();
  KernelOperator id(sp, ComplexMatrix::Identity(n, n), true);
  auto pairs = hermitian_eig(id);
  for (const auto& pr : pairs) CHECK(pr.eigenvalue == doctest::Approx(1.0));

  // diagonal operator sorts ascending
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = (i % 3 == 0) ? 3 : (i % 3);
  KernelOperator kd(sp, d, true);
  auto ev = hermitian_eigenvalues(kd);
  for (Eigen::Index i = 1; i < n; ++i) CHECK(ev(i) >= ev(i - 1));
  CHECK(ev(0) == doctest::Approx(1.0));
  CHECK(ev(n - 1) == doctest::Approx(3.0));

  KernelOperator bad(sp, ComplexMatrix::Random(n, n), false);
  CHECK_THROWS_AS(hermitian_eig(bad), std::invalid_argument);

  // weighted orthonormality of eigenvectors
  auto pairs2 = hermitian_eig(kd);
  CHECK(std::abs(inner(pairs2[0].eigenvector, pairs2[1].eigenvector)) < 1e-10);
  CHECK(std::abs(inner(pairs2[0].eigenvector, pairs2[0].eigenvector) - 1.0) <
        1e-10);
}

TEST_CASE("green-kernel eigenvalues via the corrected quadrature") {
  // plain second-order quadrature cannot reach 1e-6 at j = 10; the
  // product-integration correction for the diagonal slope jump restores it
  auto sp = make_grid_space(0.0, 1.0, 2048);
  auto green = [](double x, double y) {
    return Complex(std::min(x, y) * (1.0 - std::max(x, y)), 0.0);
  };
  auto k = kernel_from_function_corrected(
      sp, green, [](double) { return Complex(-1.0, 0.0); },
      [](double x, double y) {
        return Complex(y < x ? (1.0 - x) : -x, 0.0);
      },
      true);
  auto ev = hermitian_eigenvalues(k);
  for (int j = 1; j <= 10; ++j) {
    const double expected = 1.0 / (j * M_PI * j * M_PI);
    const double got = ev(ev.size() - j);
    CHECK(std::abs(got - expected) / expected < 1e-6);
  }
}

TEST_CASE("schatten norms") {
  auto sp = make_grid_space(0.0, 1.0, 128);
  const Eigen::Index n = sp->size();

  // rank-one operator with singular value 2
  ComplexVector v = ComplexVector::Zero(n);
  v(3) = 2.0 / std::sqrt(sp->weights()(3));
  ComplexMatrix rank1 = v * (v.adjoint() * sp->weights().cast<Complex>().asDiagonal()) / 2.0;
  KernelOperator r1(sp, rank1, false);
  for (double p : {0.5, 1.0, 2.0, 7.0, schatten_infinity})
    CHECK(schatten_norm(r1, p) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS_AS(schatten_norm(r1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(schatten_norm(r1, -2.0), std::invalid_argument);

  auto sp2 = make_grid_space(0.0, 1.0, 2048);
  auto green = kernel_from_function(
      sp2,
      [](double x, double y) {
        return Complex(std::min(x, y) * (1.0 - std::max(x, y)), 0.0);
      },
      true);
  CHECK(std::abs(schatten_norm(green, 1.0) - oracles::green_trace) < 1e-6);
  CHECK(std::abs(schatten_norm(green, 2.0) - std::sqrt(oracles::green_hs_sq)) <
        1e-6);

  // monotonicity in p
  double prev = std::numeric_limits<double>::infinity();
  for (double p : {1.0, 2.0, 4.0, schatten_infinity}) {
    const double cur = schatten_norm(green, p);
    CHECK(cur <= prev * (1.0 + 1e-12));
    prev = cur;
  }

  // Hilbert-Schmidt consistency with the weighted entry sum
  double frob2 = 0.0;
  for (Eigen::Index i = 0; i < sp2->size(); ++i)
    for (Eigen::Index j = 0; j < sp2->size(); ++j)
      frob2 += sp2->weights()(i) * std::norm(green.matrix(i, j)) /
               sp2->weights()(j);
  const double hs = schatten_norm(green, 2.0);
  CHECK(std::abs(hs * hs - frob2) / frob2 < 1e-8);
}

TEST_CASE("schatten square law on random finite-rank operators") {
  auto sp = make_grid_space(0.0, 1.0, 96);
  const Eigen::Index n = sp->size();
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (int k = 0; k < 4; ++k) {
      ComplexVector x(n), y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = Complex(g(rng), g(rng));
        y(i) = Complex(g(rng), g(rng));
      }
      a += x * y.adjoint();
    }
    KernelOperator t(sp, a, false);
    ComplexMatrix ata = weighted_adjoint(*sp, a) * a;
    KernelOperator tt(sp, ata, true);
    for (double p : {1.0, 2.5}) {
      const double lhs = std::pow(schatten_norm(t, 2.0 * p), 2.0);
      const double rhs = schatten_norm(tt, p);
      CHECK(std::abs(lhs - rhs) / rhs < 1e-10);
    }
  }
}
