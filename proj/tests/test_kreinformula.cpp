#include <doctest.h>

#include <kreinkit/kreinformula.hpp>

#include <cmath>

#include "oracles.hpp"

using namespace kreinkit;
using namespace kreinkit::numlin;
using extensions::ExtensionRealization;
using extensions::ExtensionSpec;

namespace {

double rel_opnorm(const ComplexMatrix& diff, const ComplexMatrix& ref) {
  return numlin::operator_norm_estimate(diff) /
         numlin::operator_norm_estimate(ref);
}

}  // namespace

TEST_CASE("general resolvent formula for a relatively prime pair") {
  auto m = models::interval_laplacian(384);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  ExtensionRealization soft(m, ExtensionSpec::krein());

  for (Complex z : {Complex(-1, 0), Complex(-10, 0), Complex(1, 2)}) {
    const auto rhs = kreinformula::general_krein_rhs(soft, hard, z);
    const ComplexMatrix direct = hard.resolvent_dense(z);
    CHECK(rel_opnorm(ComplexMatrix(rhs.matrix - direct), direct) < 1e-7);
  }

  CHECK_THROWS_AS(kreinformula::general_krein_rhs(hard, hard, Complex(-1, 0)),
                  std::invalid_argument);

  // agreement of the pair-operator form with the angle-bracket form
  const Complex z(-1, 0);
  const auto rhs_angle = kreinformula::general_krein_rhs(soft, hard, z);
  const Eigen::Index n = m->space()->size();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const Complex i(0, 1);
  const ComplexMatrix r1z = soft.resolvent_dense(z);
  const ComplexMatrix left = id + (z - i) * r1z;    // (S1-i)(S1-z)^{-1}
  const ComplexMatrix right = id + (z + i) * r1z;   // (S1+i)(S1-z)^{-1}
  const auto p12z = moperator::p12(soft, hard, z);
  const ComplexMatrix rhs_pair = r1z + left * p12z.matrix * right;
  CHECK((rhs_angle.matrix - rhs_pair).norm() /
            rhs_pair.norm() < 1e-9);
}

TEST_CASE("soft resolvent from hard data") {
  auto m = models::interval_laplacian(512);
  ExtensionRealization soft(m, ExtensionSpec::krein());

  double cond = 0.0;
  const auto rhs = kreinformula::krein_fk_rhs(*m, Complex(-1, 0), &cond);
  CHECK(cond >= 1.0);
  const ComplexMatrix direct = soft.resolvent_dense(Complex(-1, 0));
  CHECK(rel_opnorm(ComplexMatrix(rhs.matrix - direct), direct) < 1e-7);

  // real spectral parameter gives a weighted-Hermitian output
  const KernelOperator hermit(m->space(), rhs.matrix, true);
  CHECK(numlin::hermitian_defect(hermit) < 1e-9);

  // z * RHS approaches the negative kernel projector near zero
  const Complex z(-1e-4, 0.0);
  const auto near0 = kreinformula::krein_fk_rhs(*m, z);
  const auto p = extensions::kernel_projector(*m);
  CHECK(numlin::operator_norm_estimate(
            ComplexMatrix(z * near0.matrix + p.matrix)) < 1e-2);
}

TEST_CASE("hard resolvent from soft data, with the analytic kernel oracle") {
  auto m = models::interval_laplacian(2048);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());

  const Complex z(-1, 0);
  const auto rhs = kreinformula::reversed_krein_rhs(*m, z);
  const ComplexMatrix direct = hard.resolvent_dense(z);
  CHECK(rel_opnorm(ComplexMatrix(rhs.matrix - direct), direct) < 1e-7);

  // against the closed-form resolvent kernel of the continuum problem
  const auto& xs = m->space()->nodes();
  const double h = m->space()->weights()(0);
  double worst = 0.0;
  for (Eigen::Index i = 64; i < 2048; i += 171) {
    for (Eigen::Index j = 32; j < 2048; j += 187) {
      const Complex kernel = oracles::dirichlet_resolvent_kernel(xs(i), xs(j), z);
      worst = std::max(worst, std::abs(rhs.matrix(i, j) / h - kernel));
    }
  }
  CHECK(worst < 1e-6);

  // round trip through both formulas returns the starting resolvent
  const auto back = kreinformula::krein_fk_rhs(*m, z);
  ExtensionRealization soft(m, ExtensionSpec::krein());
  CHECK(rel_opnorm(ComplexMatrix(back.matrix - soft.resolvent_dense(z)),
                   back.matrix) < 1e-7);
}

TEST_CASE("scalar bracket on the half-line model") {
  auto m = models::halfline_schroedinger(1024, 30.0);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  ExtensionRealization soft(m, ExtensionSpec::krein());
  const Complex z(-1, 0);
  const auto rhs = kreinformula::reversed_krein_rhs(*m, z);
  const ComplexMatrix direct = hard.resolvent_dense(z);
  CHECK(rel_opnorm(ComplexMatrix(rhs.matrix - direct), direct) < 1e-6);
  const auto rhs2 = kreinformula::krein_fk_rhs(*m, z);
  const ComplexMatrix direct2 = soft.resolvent_dense(z);
  CHECK(rel_opnorm(ComplexMatrix(rhs2.matrix - direct2), direct2) < 1e-6);
}

TEST_CASE("principal part of the soft resolvent at zero") {
  auto m = models::interval_laplacian(512);
  CHECK_THROWS_AS(
      kreinformula::laurent_limit_check(m, {Complex(0, 0)}),
      std::invalid_argument);

  const auto rep = kreinformula::laurent_limit_check(
      m, {Complex(1e-2, 0), Complex(1e-3, 0)});
  REQUIRE(rep.ratios.size() == 1);
  CHECK(rep.ratios[0] >= 0.8);
  CHECK(rep.ratios[0] <= 1.2);
  CHECK(rep.linear_decay);
  CHECK(rep.richardson_defect <= 1e-4);

  // two-point calibration: the defect at 1e-3 is bounded by the slope fit
  // at 1e-2 within the same linear-decay window
  const double c = rep.defects[0] / rep.z_abs[0];
  CHECK(rep.defects[1] <= 1.2 * c * rep.z_abs[1]);
}

TEST_CASE("small-parameter series for the reduced resolvent") {
  auto m = models::interval_laplacian(384);
  ExtensionRealization soft(m, ExtensionSpec::krein());
  const Eigen::Index n = m->space()->size();

  const auto at0 = kreinformula::small_z_series(*m, Complex(0, 0), 5);
  const auto reduced = extensions::krein_reduced_inverse(*m);
  CHECK(numlin::operator_norm_estimate(
            ComplexMatrix(at0.matrix - reduced.matrix)) < 1e-10);

  const Complex z(-0.5, 0.0);
  const auto series = kreinformula::small_z_series(*m, z, 30);
  const auto p = extensions::kernel_projector(*m);
  const ComplexMatrix direct =
      soft.resolvent_dense(z) * (ComplexMatrix::Identity(n, n) - p.matrix);
  CHECK(rel_opnorm(ComplexMatrix(series.matrix - direct), direct) < 1e-7);

  CHECK_THROWS_AS(kreinformula::small_z_series(*m, Complex(20, 0), 5),
                  std::domain_error);

  // geometric decay of the truncation error in the term count
  const Complex zg(-0.5 * m->epsilon(), 0.0);
  const ComplexMatrix ref =
      soft.resolvent_dense(zg) * (ComplexMatrix::Identity(n, n) - p.matrix);
  auto defect = [&](int terms) {
    const auto s = kreinformula::small_z_series(*m, zg, terms);
    return numlin::operator_norm_estimate(ComplexMatrix(s.matrix - ref));
  };
  const double d8 = defect(8), d13 = defect(13);
  const double rate = std::pow(std::abs(zg) / m->epsilon(), 5.0);
  CHECK(d13 <= 1.5 * rate * d8);
}

TEST_CASE("derivative of the operator function at zero") {
  auto m = models::interval_laplacian(512);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  const auto& nplus = m->nplus_basis();
  const double d = 1e-3;
  const auto mp = moperator::donoghue_m(hard, nplus, Complex(d, 0));
  const auto mm = moperator::donoghue_m(hard, nplus, Complex(-d, 0));
  const ComplexMatrix fd = (mp.matrix - mm.matrix) / (2.0 * d);

  ComplexMatrix target = ComplexMatrix::Identity(2, 2);
  const auto& w = m->space()->weights();
  ComplexMatrix gv(m->space()->size(), 2);
  for (Eigen::Index c = 0; c < 2; ++c)
    gv.col(c) = hard.apply_resolvent(
        0.0, hard.apply_resolvent(0.0, ComplexVector(nplus.columns.col(c))));
  target += nplus.columns.adjoint() * w.cast<Complex>().asDiagonal() * gv;

  CHECK((fd - target).norm() < 1e-5);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
      ComplexMatrix(0.5 * (target + target.adjoint())));
  CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-6);
}

TEST_CASE("rank and factorization of resolvent differences") {
  auto m = models::interval_laplacian(384);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  ExtensionRealization soft(m, ExtensionSpec::krein());

  ComplexMatrix rows = ComplexMatrix::Zero(2, 4);
  rows << 1, -1, 0, 0, 0, 0, 1, 1;  // Robin mixing at both faces
  ExtensionRealization robin(m, ExtensionSpec::boundary(rows));

  const auto rep = kreinformula::resolvent_diff_ideal_check(
      robin, hard, soft, Complex(0, 1));
  CHECK(rep.rank_difference == 2);
  CHECK(rep.rank_exponential == 2);
  CHECK(rep.sigma_difference(2) / rep.sigma_difference(0) <= 1e-9);
  CHECK(rep.factorization_residual <= 1e-7);
  CHECK(rep.difference_norms[0] >= rep.difference_norms[1]);
  CHECK(rep.difference_norms[1] >= rep.difference_norms[2]);

  // identical endpoints collapse both sides to zero
  const auto zero = kreinformula::resolvent_diff_ideal_check(
      robin, hard, hard, Complex(0, 1));
  CHECK(zero.sigma_difference(0) < 1e-12);
  CHECK(zero.sigma_exponential(0) < 1e-10);

  // sharing a condition with the reference violates the precondition
  ComplexMatrix shared = ComplexMatrix::Zero(2, 4);
  shared(0, 0) = 1.0;  // u(0) = 0, as in the hard extension
  shared(1, 3) = 1.0;
  ExtensionRealization mixed(m, ExtensionSpec::boundary(shared));
  CHECK_THROWS_AS(kreinformula::resolvent_diff_ideal_check(mixed, hard, soft,
                                                           Complex(0, 1)),
                  std::invalid_argument);

  // finite-rank structure of differences at several parameters
  for (Complex z : {Complex(-2, 0), Complex(1, 2)}) {
    const ComplexMatrix d =
        soft.resolvent_dense(z) - hard.resolvent_dense(z);
    const RealVector sv = numlin::top_singular_values(d, 4);
    CHECK(sv(2) <= 1e-9 * sv(0));
  }
}

TEST_CASE("formula outputs satisfy the resolvent identity") {
  auto m = models::interval_laplacian(256);
  const Complex z1(-1, 0), z2(1, 2);
  const auto r1 = kreinformula::krein_fk_rhs(*m, z1);
  const auto r2 = kreinformula::krein_fk_rhs(*m, z2);
  const ComplexMatrix lhs = r1.matrix - r2.matrix;
  const ComplexMatrix rhs = (z1 - z2) * (r1.matrix * r2.matrix);
  CHECK(numlin::operator_norm_estimate(ComplexMatrix(lhs - rhs)) < 1e-7);
}
