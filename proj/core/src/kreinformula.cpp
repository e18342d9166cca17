#include "kreinkit/kreinformula.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kreinkit::kreinformula {

namespace {

using extensions::ExtensionSpec;
using moperator::donoghue_m;
using numlin::GridFun;
using numlin::SubspaceBasis;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

const Complex kI(0.0, 1.0);

ComplexMatrix invert_bracket(const ComplexMatrix& bracket, Complex z,
                             double* condition) {
  Eigen::JacobiSVD<ComplexMatrix> svd(
      bracket, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (condition != nullptr) *condition = (smin > 0) ? smax / smin : 0.0;
  if (smin <= 1e-13 * std::max(1.0, smax)) {
    throw std::domain_error("singular resolvent-formula bracket near z = (" +
                            std::to_string(z.real()) + ", " +
                            std::to_string(z.imag()) + ")");
  }
  return svd.solve(ComplexMatrix::Identity(bracket.rows(), bracket.cols()));
}

/// R1(z) + [I+(z-i)R1] V  B  V^*w [I+(z+i)R1] for an r x r middle factor B.
ComplexMatrix sandwich_formula(const ExtensionRealization& ext1,
                               const ComplexMatrix& bracket_inverse, Complex z) {
  const SubspaceBasis& v = ext1.model()->nplus_basis();
  const ComplexMatrix r1 = ext1.resolvent_dense(z);
  const auto& w = ext1.model()->space()->weights();
  const ComplexMatrix x = v.columns + (z - kI) * (r1 * v.columns);
  ComplexMatrix vw = v.columns.adjoint() * w.cast<Complex>().asDiagonal();
  const ComplexMatrix y = vw + (z + kI) * (vw * r1);
  return r1 + x * bracket_inverse * y;
}

}  // namespace

KernelOperator general_krein_rhs(const ExtensionRealization& ext1,
                                 const ExtensionRealization& ext2, Complex z,
                                 double* bracket_condition) {
  if (!extensions::relatively_prime_check(ext1, ext2))
    throw std::invalid_argument(
        "resolvent formula requires a relatively prime pair");
  ext1.require_resolvent_point(z);
  ext2.require_resolvent_point(z);
  const SubspaceBasis& v = ext1.model()->nplus_basis();
  const moperator::AlphaOperator alpha = moperator::alpha_of_pair(ext1, ext2);
  const ComplexMatrix bracket =
      alpha.tan_matrix() - donoghue_m(ext1, v, z).matrix;
  const ComplexMatrix binv = invert_bracket(bracket, z, bracket_condition);
  return KernelOperator(ext1.model()->space(),
                        sandwich_formula(ext1, binv, z), false);
}

KernelOperator krein_fk_rhs(const Model& model, Complex z,
                            double* bracket_condition) {
  auto model_ptr = model.shared_from_this();
  ExtensionRealization friedrichs(model_ptr, ExtensionSpec::friedrichs());
  const SubspaceBasis& v = model.nplus_basis();
  const ComplexMatrix m0 = donoghue_m(friedrichs, v, Complex(0.0)).matrix;
  const ComplexMatrix mz = donoghue_m(friedrichs, v, z).matrix;
  const ComplexMatrix binv = invert_bracket(m0 - mz, z, bracket_condition);
  return KernelOperator(model.space(), sandwich_formula(friedrichs, binv, z),
                        false);
}

KernelOperator reversed_krein_rhs(const Model& model, Complex z,
                                  double* bracket_condition) {
  auto model_ptr = model.shared_from_this();
  ExtensionRealization friedrichs(model_ptr, ExtensionSpec::friedrichs());
  ExtensionRealization krein(model_ptr, ExtensionSpec::krein());
  const SubspaceBasis& v = model.nplus_basis();
  const ComplexMatrix m0 = donoghue_m(friedrichs, v, Complex(0.0)).matrix;
  const ComplexMatrix mkz = donoghue_m(krein, v, z).matrix;
  const ComplexMatrix binv = invert_bracket(-m0 - mkz, z, bracket_condition);
  return KernelOperator(model.space(), sandwich_formula(krein, binv, z), false);
}

LaurentReport laurent_limit_check(const ModelPtr& model,
                                  const std::vector<Complex>& z_values) {
  require(!z_values.empty(), "no spectral parameters supplied");
  for (Complex z : z_values) {
    if (z == Complex(0.0))
      throw std::invalid_argument("z = 0 is the limit point, not evaluable");
    require(std::abs(z) <= 0.1 * model->epsilon(),
            "Laurent check needs |z| <= 0.1 epsilon");
  }
  ExtensionRealization krein(model, ExtensionSpec::krein());
  const SubspaceBasis& np = model->nplus_basis();
  const KernelOperator p = extensions::kernel_projector(*model);

  LaurentReport out;
  for (Complex z : z_values) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < np.dim(); ++c) {
      const ComplexVector u = np.columns.col(c);
      const ComplexVector uu =
          u + (z - kI) * krein.apply_resolvent(z, u);
      const ComplexVector defect = z * uu - kI * (p.matrix * u);
      worst = std::max(worst,
                       numlin::norm(GridFun(model->space(), defect)));
    }
    out.z_abs.push_back(std::abs(z));
    out.defects.push_back(worst);
  }
  out.linear_decay = out.defects.size() >= 2;
  for (std::size_t j = 1; j < out.defects.size(); ++j) {
    const double zr = out.z_abs[j] / out.z_abs[j - 1];
    const double dr = out.defects[j] / out.defects[j - 1];
    out.ratios.push_back(dr / zr);
    out.linear_decay = out.linear_decay && dr / zr >= 0.8 && dr / zr <= 1.2;
  }
  // Richardson extrapolation of z R(z) -> -P from the two smallest samples
  const std::size_t m = z_values.size();
  if (m >= 2) {
    const Complex z1 = z_values[m - 2], z2 = z_values[m - 1];
    const ComplexMatrix a1 = z1 * krein.resolvent_dense(z1);
    const ComplexMatrix a2 = z2 * krein.resolvent_dense(z2);
    const ComplexMatrix extrap = (z1 * a2 - z2 * a1) / (z1 - z2);
    out.richardson_defect =
        numlin::operator_norm_estimate(ComplexMatrix(extrap + p.matrix));
  }
  return out;
}

KernelOperator small_z_series(const Model& model, Complex z, int terms) {
  if (!(std::abs(z) < model.epsilon()))
    throw std::domain_error("series requires |z| < epsilon");
  require(terms >= 0, "negative term count");
  auto model_ptr = model.shared_from_this();
  ExtensionRealization friedrichs(model_ptr, ExtensionSpec::friedrichs());
  const KernelOperator p = extensions::kernel_projector(model);

  auto apply_g = [&](const ComplexMatrix& cols) {
    ComplexMatrix out(cols.rows(), cols.cols());
    for (Eigen::Index c = 0; c < cols.cols(); ++c)
      out.col(c) = friedrichs.apply_resolvent(0.0, ComplexVector(cols.col(c)));
    return out;
  };

  if (z == Complex(0.0)) {
    const ComplexMatrix g = friedrichs.resolvent_dense(0.0);
    return KernelOperator(model.space(),
                          extensions::compress_out_kernel(model, g), true);
  }

  const SubspaceBasis& v = model.nplus_basis();
  auto series_block = [&](Complex zz) {
    // (I - P)(I - iG) [sum_k zz^k G^k] G V
    ComplexMatrix cur = apply_g(v.columns);
    ComplexMatrix acc = cur;
    for (int k = 1; k <= terms; ++k) {
      cur = zz * apply_g(cur);
      acc += cur;
    }
    ComplexMatrix block = acc - kI * apply_g(acc);
    const ComplexMatrix projected = p.matrix * block;
    block -= projected;
    return block;
  };
  const ComplexMatrix x = series_block(z);
  const ComplexMatrix zc = series_block(std::conj(z));
  const auto& w = model.space()->weights();
  const ComplexMatrix y = zc.adjoint() * w.cast<Complex>().asDiagonal();

  const ComplexMatrix m0 = donoghue_m(friedrichs, v, Complex(0.0)).matrix;
  const ComplexMatrix mz = donoghue_m(friedrichs, v, z).matrix;
  const ComplexMatrix mid = (z * z) * invert_bracket(m0 - mz, z, nullptr);

  const ComplexMatrix rfz = friedrichs.resolvent_dense(z);
  ComplexMatrix out = extensions::compress_out_kernel(model, rfz);
  out += x * mid * y;
  return KernelOperator(model.space(), std::move(out), false);
}

IdealCheckReport resolvent_diff_ideal_check(const ExtensionRealization& ext0,
                                            const ExtensionRealization& ext1,
                                            const ExtensionRealization& ext2,
                                            Complex z) {
  if (!extensions::relatively_prime_check(ext1, ext0) ||
      !extensions::relatively_prime_check(ext2, ext0))
    throw std::invalid_argument(
        "ideal check requires pairs relatively prime to the reference");
  const auto model = ext0.model();
  const int r = model->deficiency_index();
  const auto& w = model->space()->weights();
  const numlin::RealVector sqw = w.cwiseSqrt();

  IdealCheckReport out;
  auto symmetrize = [&](const ComplexMatrix& m) {
    return ComplexMatrix(sqw.cast<Complex>().asDiagonal() * m *
                         sqw.cwiseInverse().cast<Complex>().asDiagonal());
  };

  const ComplexMatrix d = ext2.resolvent_dense(z) - ext1.resolvent_dense(z);
  out.sigma_difference =
      numlin::top_singular_values(symmetrize(d), r + 3);
  const double s1 = out.sigma_difference(0);
  for (Eigen::Index i = 0; i < out.sigma_difference.size(); ++i)
    if (out.sigma_difference(i) > 1e-9 * s1) ++out.rank_difference;

  // angle operators against the reference extension
  const moperator::AlphaOperator a01 = moperator::alpha_of_pair(ext0, ext1);
  const moperator::AlphaOperator a02 = moperator::alpha_of_pair(ext0, ext2);
  const ComplexMatrix e1 = -a01.restricted_unitary.adjoint();  // e^{2i a01}
  const ComplexMatrix e2 = -a02.restricted_unitary.adjoint();
  const ComplexMatrix ediff = e2 - e1;
  Eigen::JacobiSVD<ComplexMatrix> esvd(ediff);
  out.sigma_exponential = esvd.singularValues();
  for (Eigen::Index i = 0; i < out.sigma_exponential.size(); ++i)
    if (out.sigma_exponential(i) > 1e-9 * std::max(1.0, out.sigma_exponential(0)))
      ++out.rank_exponential;

  // exact factorization of the difference at z = i through the angle data:
  // D(i) = (i/2) V [e^{-2i a02} - e^{-2i a01}] V^*w C_{S0}
  const SubspaceBasis& v = model->nplus_basis();
  const ComplexMatrix mid =
      (kI / 2.0) * (a01.restricted_unitary - a02.restricted_unitary);
  const ComplexMatrix c0 =
      ComplexMatrix::Identity(d.rows(), d.cols()) +
      2.0 * kI * ext0.resolvent_dense(kI);
  const ComplexMatrix vw = v.columns.adjoint() * w.cast<Complex>().asDiagonal();
  const ComplexMatrix predicted = v.columns * (mid * (vw * c0));
  const ComplexMatrix di =
      (z == kI) ? d
                : ComplexMatrix(ext2.resolvent_dense(kI) -
                                ext1.resolvent_dense(kI));
  out.factorization_residual =
      numlin::operator_norm_estimate(ComplexMatrix(di - predicted));

  auto schatten_from = [](const numlin::RealVector& sv, double floor_rel,
                          double* dest) {
    const double top = sv.size() ? sv(0) : 0.0;
    double s1sum = 0.0, s2sum = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) < floor_rel * top) break;
      s1sum += sv(i);
      s2sum += sv(i) * sv(i);
    }
    dest[0] = s1sum;
    dest[1] = std::sqrt(s2sum);
    dest[2] = top;
  };
  schatten_from(out.sigma_difference, 1e-12, out.difference_norms);
  schatten_from(out.sigma_exponential, 1e-12, out.exponential_norms);
  return out;
}

}  // namespace kreinkit::kreinformula
