#include <doctest.h>

#include <kreinkit/moperator.hpp>

#include <cmath>
#include <random>

using namespace kreinkit;
using namespace kreinkit::numlin;
using extensions::ExtensionRealization;
using extensions::ExtensionSpec;

namespace {

struct Fixture {
  models::ModelPtr m = models::interval_laplacian(256);
  ExtensionRealization hard{m, ExtensionSpec::friedrichs()};
  ExtensionRealization soft{m, ExtensionSpec::krein()};
  const SubspaceBasis& nplus = m->nplus_basis();
};

}  // namespace

TEST_CASE("u-transform composition and deficiency mapping") {
  Fixture fx;
  std::mt19937_64 rng(3);
  GridFun u = fx.m->sample_domain_element(rng);

  const GridFun same =
      moperator::u_transform(fx.hard, Complex(0, 1), Complex(0, 1), u);
  CHECK(numlin::norm(GridFun(fx.m->space(),
                             ComplexVector(same.values - u.values))) < 1e-12);

  const Complex z0(0, 1), z1(0, 2), z2(-1, 0);
  const GridFun chain = moperator::u_transform(
      fx.hard, z0, z1, moperator::u_transform(fx.hard, z1, z2, u));
  const GridFun direct = moperator::u_transform(fx.hard, z0, z2, u);
  CHECK(numlin::norm(GridFun(fx.m->space(),
                             ComplexVector(chain.values - direct.values))) <
        1e-8);

  const GridFun mapped = moperator::u_transform(fx.hard, Complex(0, 2),
                                                Complex(0, 1),
                                                fx.nplus.column(0));
  GridFun sm = fx.m->apply_adjoint(mapped);
  ComplexVector res = sm.values - Complex(0, 2) * mapped.values;
  for (auto row : fx.m->flagged_rows()) res(row) = 0.0;
  CHECK(numlin::norm(GridFun(fx.m->space(), res)) < 1e-6 * numlin::norm(mapped));

  // spectral parameter inside the spectrum is rejected
  const double lam = fx.hard.eigenvalues()(3);
  CHECK_THROWS_AS(
      moperator::u_transform(fx.hard, Complex(lam, 0.0), Complex(0, 1), u),
      std::invalid_argument);
}

TEST_CASE("cayley transform") {
  Fixture fx;
  std::mt19937_64 rng(5);
  GridFun u = fx.m->sample_domain_element(rng);
  const GridFun cu = moperator::cayley(fx.hard, u);
  CHECK(std::abs(numlin::norm(cu) - numlin::norm(u)) < 1e-8);

  // spectral mapping on an eigenvector
  const auto& es = fx.hard.eigensystem();
  const GridFun e5(fx.m->space(), es.vectors.col(5));
  const GridFun ce = moperator::cayley(fx.hard, e5);
  const Complex lam(es.values(5), 0.0);
  const Complex factor = (lam + Complex(0, 1)) / (lam - Complex(0, 1));
  CHECK(numlin::norm(GridFun(fx.m->space(),
                             ComplexVector(ce.values - factor * e5.values))) <
        1e-8);

  // maps the lower deficiency space into the upper one
  const SubspaceBasis nminus = fx.m->deficiency_basis_at(Complex(0, -1));
  const GridFun cm = moperator::cayley(fx.hard, nminus.column(0));
  GridFun scm = fx.m->apply_adjoint(cm);
  ComplexVector res = scm.values - Complex(0, 1) * cm.values;
  for (auto row : fx.m->flagged_rows()) res(row) = 0.0;
  CHECK(numlin::norm(GridFun(fx.m->space(), res)) < 1e-6 * numlin::norm(cm));

  // cayley_inverse undoes cayley
  const GridFun back = moperator::cayley_inverse(fx.hard, cu);
  CHECK(numlin::norm(GridFun(fx.m->space(),
                             ComplexVector(back.values - u.values))) < 1e-10);
}

TEST_CASE("the pair operator vanishes off the deficiency subspace") {
  Fixture fx;
  const auto p12i = moperator::p12(fx.hard, fx.soft, Complex(0, 1));

  const auto p12_same = moperator::p12(fx.hard, fx.hard, Complex(0, 1));
  CHECK(p12_same.matrix.norm() < 1e-10);

  std::mt19937_64 rng(11);
  GridFun probe = fx.m->sample_domain_element(rng);
  GridFun proj = numlin::project(fx.nplus, probe);
  ComplexVector perp = probe.values - proj.values;
  CHECK(numlin::norm(GridFun(fx.m->space(), ComplexVector(p12i.matrix * perp))) <
        1e-8 * numlin::norm(GridFun(fx.m->space(), perp)));

  // restriction to the deficiency subspace matches the angle form at z = i
  const auto alpha = moperator::alpha_of_pair(fx.hard, fx.soft);
  const auto& w = fx.m->space()->weights();
  const ComplexMatrix sec = fx.nplus.columns.adjoint() *
                            w.cast<Complex>().asDiagonal() *
                            (p12i.matrix * fx.nplus.columns);
  const ComplexMatrix expect =
      (Complex(0, 1) / 2.0) *
      (ComplexMatrix::Identity(2, 2) - alpha.restricted_unitary);
  CHECK((sec - expect).norm() < 1e-8);

  // range dimension is the same at every sampled parameter
  int lo = 99, hi = 0;
  for (Complex z : {Complex(0, 1), Complex(-1, 0), Complex(0, 2)}) {
    const auto pz = moperator::p12(fx.hard, fx.soft, z);
    const ComplexMatrix s = fx.nplus.columns.adjoint() *
                            w.cast<Complex>().asDiagonal() *
                            (pz.matrix * fx.nplus.columns);
    Eigen::JacobiSVD<ComplexMatrix> svd(s);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-10) ++rank;
    lo = std::min(lo, rank);
    hi = std::max(hi, rank);
  }
  CHECK(lo == hi);
}

TEST_CASE("angle operator of a pair") {
  Fixture fx;
  const auto self = moperator::alpha_of_pair(fx.hard, fx.hard);
  for (Eigen::Index k = 0; k < self.angles.size(); ++k)
    CHECK(self.angles(k) == doctest::Approx(M_PI / 2).epsilon(1e-10));

  const auto a_fk = moperator::alpha_of_pair(fx.hard, fx.soft);
  CHECK(a_fk.unitary_defect() < 1e-8);
  const auto m0 = moperator::donoghue_m(fx.hard, fx.nplus, Complex(0.0));
  CHECK((a_fk.tan_matrix() - m0.matrix).norm() < 1e-6);

  const auto a_kf = moperator::alpha_of_pair(fx.soft, fx.hard);
  CHECK((a_kf.tan_matrix() + a_fk.tan_matrix()).norm() < 1e-6);

  // exp(-2i alpha) reproduces the restricted unitary with a sign flip
  const ComplexMatrix rebuilt = -a_fk.exp_i(-2.0);
  CHECK((rebuilt - a_fk.restricted_unitary).norm() < 1e-10);
}

TEST_CASE("donoghue operator samples") {
  Fixture fx;
  for (const ExtensionRealization* e : {&fx.hard, &fx.soft}) {
    const auto mi = moperator::donoghue_m(*e, fx.nplus, Complex(0, 1));
    CHECK((mi.matrix - Complex(0, 1) * ComplexMatrix::Identity(2, 2)).norm() <
          1e-10);
  }

  const Complex z(1, 2);
  const auto mz = moperator::donoghue_m(fx.hard, fx.nplus, z);
  const ComplexMatrix imm = (mz.matrix - mz.matrix.adjoint()) / Complex(0, 2);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(imm / z.imag());
  const double bound =
      2.0 / ((std::norm(z) + 1.0) +
             std::sqrt(std::pow(std::norm(z) - 1.0, 2) + 4.0 * z.real() * z.real()));
  CHECK(es.eigenvalues().minCoeff() >= bound - 1e-10);

  const auto mzc = moperator::donoghue_m(fx.hard, fx.nplus, std::conj(Complex(2, 3)));
  const auto mz2 = moperator::donoghue_m(fx.hard, fx.nplus, Complex(2, 3));
  CHECK((mzc.matrix - mz2.matrix.adjoint()).norm() < 1e-10);

  // Herglotz bound at random samples off the real axis
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ur(-3.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    double im = ur(rng);
    if (std::abs(im) < 0.1) im = 0.1;
    const Complex zz(ur(rng), im);
    const auto mm = moperator::donoghue_m(fx.hard, fx.nplus, zz);
    const ComplexMatrix im2 = (mm.matrix - mm.matrix.adjoint()) / Complex(0, 2);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> ess(im2 / zz.imag());
    const double bb =
        2.0 / ((std::norm(zz) + 1.0) +
               std::sqrt(std::pow(std::norm(zz) - 1.0, 2) +
                         4.0 * zz.real() * zz.real()));
    CHECK(ess.eigenvalues().minCoeff() >= bb - 1e-10);
  }
}

TEST_CASE("linear fractional transformation") {
  Fixture fx;
  const auto a_fk = moperator::alpha_of_pair(fx.hard, fx.soft);
  const auto a_kf = moperator::alpha_of_pair(fx.soft, fx.hard);

  const Complex z(-1, 0);
  const auto m1 = moperator::donoghue_m(fx.hard, fx.nplus, z);
  double cond = 0.0;
  const auto predicted = moperator::lft_transform(m1, a_fk, &cond);
  CHECK(cond > 0.0);
  const auto direct = moperator::donoghue_m(fx.soft, fx.nplus, z);
  CHECK((predicted.matrix - direct.matrix).norm() < 1e-6);

  const auto back = moperator::lft_transform(predicted, a_kf);
  CHECK((back.matrix - m1.matrix).norm() < 1e-8);

  // zero angle sends M to -M^{-1}
  moperator::AlphaOperator zero_alpha;
  zero_alpha.restricted_unitary = -ComplexMatrix::Identity(2, 2);
  zero_alpha.eigvecs = ComplexMatrix::Identity(2, 2);
  zero_alpha.angles = RealVector::Zero(2);
  const auto flipped = moperator::lft_transform(m1, zero_alpha);
  CHECK((flipped.matrix + m1.matrix.inverse()).norm() < 1e-8);

  // the fixed point i I stays put for any angle
  moperator::MOperatorSample mi;
  mi.z = Complex(0, 1);
  mi.matrix = Complex(0, 1) * ComplexMatrix::Identity(2, 2);
  const auto still = moperator::lft_transform(mi, a_fk);
  CHECK((still.matrix - mi.matrix).norm() < 1e-10);

  // singular bracket names the offending parameter
  moperator::AlphaOperator quarter;
  quarter.restricted_unitary = ComplexMatrix::Identity(2, 2);
  quarter.eigvecs = ComplexMatrix::Identity(2, 2);
  quarter.angles = RealVector::Constant(2, M_PI / 4);
  moperator::MOperatorSample bad;
  bad.z = Complex(0.5, 0.5);
  bad.matrix = ComplexMatrix::Identity(2, 2);
  CHECK_THROWS_AS(moperator::lft_transform(bad, quarter), std::domain_error);
}

TEST_CASE("spectral measure and its reconstruction") {
  auto m = models::interval_laplacian(512);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  const auto& nplus = m->nplus_basis();
  const auto rep = moperator::herglotz_rep_check(
      hard, nplus, {Complex(1, 1), Complex(-2, 0.5)});
  CHECK(rep.normalization_defect <= 0.02);
  for (const auto& [z, defect] : rep.reconstruction_defects)
    CHECK(defect <= 1e-4);
  CHECK(rep.mass_growth() >= 1.5);
}

TEST_CASE("boundary behavior separates the three extension types") {
  auto m = models::interval_laplacian(512);
  ExtensionRealization hard(m, ExtensionSpec::friedrichs());
  ExtensionRealization soft(m, ExtensionSpec::krein());
  ExtensionRealization mid(
      m, ExtensionSpec::param(ComplexMatrix::Identity(2, 2), {0, 1}));
  const auto& nplus = m->nplus_basis();

  const auto fd = moperator::boundary_behavior(
      hard, nplus, moperator::BoundaryMode::FriedrichsTest);
  CHECK(fd.monotone);
  CHECK(fd.diverged);
  CHECK(fd.final_value < -50.0);
  CHECK(fd.sum_up_fine > 1.5 * fd.sum_up_coarse);

  const auto kd = moperator::boundary_behavior(
      soft, nplus, moperator::BoundaryMode::KreinTest);
  CHECK(kd.monotone);
  CHECK(kd.diverged);
  CHECK(kd.final_value > 50.0);

  const auto bd = moperator::boundary_behavior(
      mid, nplus, moperator::BoundaryMode::KreinTest);
  CHECK(bd.bounded);
  const auto bd2 = moperator::boundary_behavior(
      mid, nplus, moperator::BoundaryMode::FriedrichsTest);
  CHECK(bd2.bounded);
}
