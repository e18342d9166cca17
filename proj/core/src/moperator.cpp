#include "kreinkit/moperator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kreinkit::moperator {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

const double kPi = 3.14159265358979323846;

void require_same_model(const ExtensionRealization& a,
                        const ExtensionRealization& b) {
  require(a.model().get() == b.model().get(),
          "operation requires extensions of one model");
}

/// Coefficient matrix of (operator restricted to span(basis)) in the basis.
ComplexMatrix restrict_apply(
    const SubspaceBasis& basis,
    const std::function<ComplexVector(const ComplexVector&)>& op) {
  const Eigen::Index k = basis.dim();
  ComplexMatrix out(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    GridFun img(basis.space, op(ComplexVector(basis.columns.col(j))));
    out.col(j) = basis.coefficients(img);
  }
  return out;
}

void require_inside_nplus(const ExtensionRealization& ext,
                          const SubspaceBasis& n_basis) {
  require(n_basis.space->same_as(*ext.model()->space()), "grid space mismatch");
  const SubspaceBasis& np = ext.model()->nplus_basis();
  const auto& w = n_basis.space->weights();
  ComplexMatrix coeff = np.columns.adjoint() *
                        (w.cast<Complex>().asDiagonal() * n_basis.columns);
  const double defect = (n_basis.columns - np.columns * coeff).norm();
  require(defect <= 1e-8 * n_basis.columns.norm(),
          "basis does not lie inside the deficiency subspace N_+");
}

}  // namespace

GridFun u_transform(const ExtensionRealization& ext, Complex z, Complex z0,
                    const GridFun& u) {
  ext.require_resolvent_point(z);
  ext.require_resolvent_point(z0);
  ComplexVector out = u.values + (z - z0) * ext.apply_resolvent(z, u.values);
  return GridFun(ext.model()->space(), std::move(out));
}

GridFun cayley(const ExtensionRealization& ext, const GridFun& u) {
  const Complex i(0.0, 1.0);
  ComplexVector out = u.values + 2.0 * i * ext.apply_resolvent(i, u.values);
  return GridFun(ext.model()->space(), std::move(out));
}

GridFun cayley_inverse(const ExtensionRealization& ext, const GridFun& u) {
  const Complex i(0.0, 1.0);
  ComplexVector out = u.values - 2.0 * i * ext.apply_resolvent(-i, u.values);
  return GridFun(ext.model()->space(), std::move(out));
}

KernelOperator p12(const ExtensionRealization& ext1,
                   const ExtensionRealization& ext2, Complex z) {
  require_same_model(ext1, ext2);
  ext1.require_resolvent_point(z);
  ext2.require_resolvent_point(z);
  const Complex i(0.0, 1.0);
  const auto n = ext1.model()->space()->size();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix left = id + (i - z) * ext1.resolvent_dense(i);
  const ComplexMatrix right = id + (-i - z) * ext1.resolvent_dense(-i);
  const ComplexMatrix mid = ext2.resolvent_dense(z) - ext1.resolvent_dense(z);
  return KernelOperator(ext1.model()->space(),
                        ComplexMatrix(left * mid * right), false);
}

ComplexMatrix AlphaOperator::matrix() const {
  return eigvecs * angles.cast<Complex>().asDiagonal() * eigvecs.adjoint();
}

ComplexMatrix AlphaOperator::apply(double (*f)(double)) const {
  RealVector fa = angles.unaryExpr([&](double a) { return f(a); });
  return eigvecs * fa.cast<Complex>().asDiagonal() * eigvecs.adjoint();
}

ComplexMatrix AlphaOperator::tan_matrix() const {
  return apply(static_cast<double (*)(double)>(std::tan));
}
ComplexMatrix AlphaOperator::cos_matrix() const {
  return apply(static_cast<double (*)(double)>(std::cos));
}
ComplexMatrix AlphaOperator::sin_matrix() const {
  return apply(static_cast<double (*)(double)>(std::sin));
}

ComplexMatrix AlphaOperator::exp_i(double scale) const {
  ComplexVector e(angles.size());
  for (Eigen::Index k = 0; k < angles.size(); ++k)
    e(k) = std::exp(Complex(0.0, scale * angles(k)));
  return eigvecs * e.asDiagonal() * eigvecs.adjoint();
}

double AlphaOperator::unitary_defect() const {
  const ComplexMatrix& u = restricted_unitary;
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).norm();
}

AlphaOperator alpha_of_pair(const ExtensionRealization& ext1,
                            const ExtensionRealization& ext2) {
  require_same_model(ext1, ext2);
  const SubspaceBasis& np = ext1.model()->nplus_basis();
  ComplexMatrix a = restrict_apply(np, [&](const ComplexVector& v) {
    GridFun g(np.space, v);
    return cayley(ext2, cayley_inverse(ext1, g)).values;
  });
  AlphaOperator out;
  out.restricted_unitary = a;
  if (out.unitary_defect() > 1e-8 * std::max(1.0, a.norm()))
    throw std::runtime_error(
        "restriction of the Cayley quotient to N_+ is not unitary");
  // -A = exp(-2i alpha); the matrix is normal, so its Schur form is diagonal
  Eigen::ComplexSchur<ComplexMatrix> schur(ComplexMatrix(-a), true);
  out.eigvecs = schur.matrixU();
  out.angles.resize(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double theta = std::arg(schur.matrixT()(k, k));  // in (-pi, pi]
    double alpha = -theta / 2.0;
    if (alpha <= -kPi / 2.0 + 1e-15) alpha += kPi;  // branch (-pi/2, pi/2]
    out.angles(k) = alpha;
  }
  out.branch_note =
      "eigenphases of -C2*C1^{-1}|N+ in (-pi,pi], halved into (-pi/2,pi/2]";
  return out;
}

MOperatorSample donoghue_m(const ExtensionRealization& ext,
                           const SubspaceBasis& n_basis, Complex z) {
  require_inside_nplus(ext, n_basis);
  ext.require_resolvent_point(z);
  ComplexMatrix r = restrict_apply(n_basis, [&](const ComplexVector& v) {
    return ext.apply_resolvent(z, v);
  });
  const Eigen::Index k = n_basis.dim();
  MOperatorSample out;
  out.z = z;
  out.matrix = z * ComplexMatrix::Identity(k, k) + (1.0 + z * z) * r;
  return out;
}

MOperatorSample lft_transform(const MOperatorSample& m1,
                              const AlphaOperator& alpha, double* condition) {
  const ComplexMatrix c = alpha.cos_matrix();
  const ComplexMatrix s = alpha.sin_matrix();
  const ComplexMatrix bracket = s - c * m1.matrix;
  Eigen::JacobiSVD<ComplexMatrix> svd(
      bracket, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (condition != nullptr) *condition = (smin > 0) ? smax / smin : 0.0;
  if (smin <= 1e-13 * std::max(1.0, smax)) {
    std::ostringstream os;
    os << "singular linear-fractional bracket at z = (" << m1.z.real() << ", "
       << m1.z.imag() << ")";
    throw std::domain_error(os.str());
  }
  const ComplexMatrix inv =
      svd.solve(ComplexMatrix::Identity(bracket.rows(), bracket.cols()));
  MOperatorSample out;
  out.z = m1.z;
  out.matrix = alpha.exp_i(-1.0) * (c + s * m1.matrix) * inv * alpha.exp_i(1.0);
  return out;
}

SpectralMeasure spectral_measure(const ExtensionRealization& ext,
                                 const SubspaceBasis& n_basis) {
  require_inside_nplus(ext, n_basis);
  const auto& es = ext.eigensystem();
  const auto k = n_basis.dim();
  SpectralMeasure out;
  out.locations = es.values;
  out.jumps.reserve(static_cast<std::size_t>(es.values.size()));
  ComplexMatrix sum = ComplexMatrix::Zero(k, k);
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    const ComplexVector d =
        n_basis.coefficients(GridFun(n_basis.space, es.vectors.col(j)));
    const double l = es.values(j);
    ComplexMatrix jump = (1.0 + l * l) * (d * d.adjoint());
    sum += jump / (1.0 + l * l);
    out.jumps.push_back(std::move(jump));
  }
  out.normalization_defect = (sum - ComplexMatrix::Identity(k, k)).norm();
  out.min_jump_eigenvalue = 0.0;  // rank-one jumps are PSD by construction
  return out;
}

HerglotzReport herglotz_rep_check(const ExtensionRealization& ext,
                                  const SubspaceBasis& n_basis,
                                  const std::vector<Complex>& z_samples) {
  const SpectralMeasure meas = spectral_measure(ext, n_basis);
  HerglotzReport out;
  out.normalization_defect = meas.normalization_defect;
  const auto k = n_basis.dim();
  for (Complex z : z_samples) {
    ComplexMatrix rebuilt = ComplexMatrix::Zero(k, k);
    for (Eigen::Index j = 0; j < meas.locations.size(); ++j) {
      const double l = meas.locations(j);
      rebuilt += meas.jumps[static_cast<std::size_t>(j)] *
                 (1.0 / (l - z) - l / (1.0 + l * l));
    }
    const MOperatorSample direct = donoghue_m(ext, n_basis, z);
    out.reconstruction_defects.emplace_back(z,
                                            (rebuilt - direct.matrix).norm());
  }
  auto trace_mass = [](const SpectralMeasure& m) {
    double tr = 0.0;
    for (const auto& jump : m.jumps) tr += jump.trace().real();
    return tr;
  };
  out.total_mass_fine = trace_mass(meas);

  const auto coarse_model =
      ext.model()->resized(ext.model()->space()->size() / 2);
  ExtensionRealization coarse(coarse_model, ext.spec());
  out.total_mass_coarse =
      trace_mass(spectral_measure(coarse, coarse_model->nplus_basis()));
  return out;
}

BoundaryDiagnostic boundary_behavior(const ExtensionRealization& ext,
                                     const SubspaceBasis& n_basis,
                                     BoundaryMode mode,
                                     bool with_partial_sums) {
  require_inside_nplus(ext, n_basis);
  BoundaryDiagnostic out;
  out.lambdas = (mode == BoundaryMode::FriedrichsTest)
                    ? std::vector<double>{-10.0, -1e2, -1e3, -1e4}
                    : std::vector<double>{-1e-1, -1e-2, -1e-3};
  for (double l : out.lambdas) {
    const MOperatorSample m = donoghue_m(ext, n_basis, Complex(l, 0.0));
    out.values.push_back(m.matrix(0, 0).real());
  }
  out.final_value = out.values.back();
  out.monotone = true;
  for (std::size_t j = 1; j < out.values.size(); ++j) {
    const bool step_ok = (mode == BoundaryMode::FriedrichsTest)
                             ? out.values[j] < out.values[j - 1]
                             : out.values[j] > out.values[j - 1];
    out.monotone = out.monotone && step_ok;
  }
  constexpr double threshold = 50.0;
  out.diverged = (mode == BoundaryMode::FriedrichsTest)
                     ? out.final_value < -threshold
                     : out.final_value > threshold;
  out.bounded = true;
  for (double v : out.values) out.bounded = out.bounded && std::abs(v) <= threshold;

  if (!with_partial_sums) return out;

  auto partial_sums = [&](const ExtensionRealization& e,
                          const SubspaceBasis& basis, double& up, double& down) {
    const auto& es = e.eigensystem();
    const GridFun uplus = basis.column(0);
    up = down = 0.0;
    for (Eigen::Index j = 0; j < es.values.size(); ++j) {
      const Complex c =
          numlin::inner(GridFun(basis.space, es.vectors.col(j)), uplus);
      const double w2 = std::norm(c);
      up += es.values(j) * w2;
      if (es.values(j) > 1e-10) down += w2 / es.values(j);
    }
  };
  partial_sums(ext, n_basis, out.sum_up_fine, out.sum_down_fine);
  const auto coarse_model =
      ext.model()->resized(ext.model()->space()->size() / 2);
  ExtensionRealization coarse(coarse_model, ext.spec());
  partial_sums(coarse, coarse_model->nplus_basis(), out.sum_up_coarse,
               out.sum_down_coarse);
  return out;
}

}  // namespace kreinkit::moperator
