#include "kreinkit/ideals.hpp"

#include <cmath>
#include <stdexcept>

namespace kreinkit::ideals {

namespace {

using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::GridFun;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

SpectralCounts spectral_counts(const KernelOperator& k, int jmax, bool invert,
                               std::string source) {
  require(k.hermitian_flag, "spectral counts need a Hermitian operator");
  require(jmax >= 1, "jmax must be positive");
  const RealVector ev = numlin::hermitian_eigenvalues(k);
  SpectralCounts out;
  out.source = std::move(source);
  if (!invert) {
    require(jmax <= ev.size(), "jmax exceeds the numerical rank");
    out.mu = ev.head(jmax);
    return out;
  }
  // reciprocals of the positive eigenvalues, descending -> ascending counts
  const double scale = ev.cwiseAbs().maxCoeff();
  require(ev.minCoeff() >= -1e-10 * scale, "invert requires a PSD operator");
  std::vector<double> pos;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
    if (ev(i) > 1e-12 * scale) pos.push_back(1.0 / ev(i));
  require(jmax <= static_cast<int>(pos.size()), "jmax exceeds the numerical rank");
  out.mu.resize(jmax);
  for (int j = 0; j < jmax; ++j) out.mu(j) = pos[static_cast<std::size_t>(j)];
  return out;
}

EigenInequalityReport eigen_inequality_check(const Model& model, int jmax) {
  require(jmax <= 20, "jmax capped at 20 for the inequality check");
  const KernelOperator green = models::friedrichs_green(model, 0.0);
  const KernelOperator reduced = extensions::krein_reduced_inverse(model);
  EigenInequalityReport out;
  out.epsilon = model.epsilon();
  out.mu_friedrichs = spectral_counts(green, jmax, true, "friedrichs").mu;
  out.mu_reduced_krein = spectral_counts(reduced, jmax, true, "reduced-krein").mu;
  out.holds = true;
  out.max_violation = 0.0;
  for (int j = 0; j < jmax; ++j) {
    const double tol = 1e-4 * out.mu_friedrichs(j);
    const double slack_eps = out.mu_friedrichs(j) - out.epsilon + tol;
    const double slack_ord =
        out.mu_reduced_krein(j) - out.mu_friedrichs(j) + tol;
    out.holds = out.holds && slack_eps >= 0.0 && slack_ord >= 0.0;
    out.max_violation = std::min({out.max_violation, slack_eps, slack_ord});
  }
  return out;
}

namespace {

/// Shared spectral data for the trace-ideal suite; computed once, evaluated
/// at every exponent.
struct SchattenSpectra {
  RealVector reduced;        // singular values of the reduced inverse
  RealVector compressed;     // same operator through the explicit compression
  RealVector halfpower;      // singular values of (I-P) G^{1/2}
  RealVector halfpower_adj;  // singular values of G^{1/2} (I-P)
};

double schatten_from_singulars(const RealVector& sv, double p) {
  if (sv.size() == 0) return 0.0;
  const double smax = sv(sv.size() - 1) > sv(0) ? sv(sv.size() - 1) : sv(0);
  if (std::isinf(p) || smax == 0.0) return smax;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) >= 1e-14 * smax) sum += std::pow(sv(i), p);
  return std::pow(sum, 1.0 / p);
}

SchattenSpectra schatten_spectra(const Model& model) {
  const auto space = model.space();
  const KernelOperator green = models::friedrichs_green(model, 0.0);
  const Eigen::Index n = space->size();
  const auto& w = space->weights();

  SchattenSpectra out;
  const KernelOperator reduced = extensions::krein_reduced_inverse(model);
  out.reduced = numlin::singular_values(reduced);
  const KernelOperator compressed(
      space, extensions::compress_out_kernel(model, green.matrix), true);
  out.compressed = numlin::singular_values(compressed);

  // singular values of (I-P) G^{1/2} through the Hermitian product
  // G^{1/2}(I-P)G^{1/2} = G - Y Y^{*w} with Y = G^{1/2} V, rank-r update
  auto eig = numlin::hermitian_eig(green);
  ComplexMatrix vecs(n, static_cast<Eigen::Index>(eig.size()));
  RealVector roots(static_cast<Eigen::Index>(eig.size()));
  for (std::size_t j = 0; j < eig.size(); ++j) {
    vecs.col(static_cast<Eigen::Index>(j)) = eig[j].eigenvector.values;
    roots(static_cast<Eigen::Index>(j)) =
        std::sqrt(std::max(eig[j].eigenvalue, 0.0));
  }
  const ComplexMatrix& v = model.kernel_basis().columns;
  const ComplexMatrix coeffs =
      vecs.adjoint() * (w.cast<Complex>().asDiagonal() * v);
  const ComplexMatrix y = vecs * (roots.cast<Complex>().asDiagonal() * coeffs);
  ComplexMatrix prod = green.matrix;
  prod.noalias() -=
      y * (y.adjoint() * w.cast<Complex>().asDiagonal());
  const KernelOperator half_product(space, std::move(prod), true);
  RealVector ev = numlin::hermitian_eigenvalues(half_product);
  out.halfpower = ev.cwiseMax(0.0).cwiseSqrt();
  std::sort(out.halfpower.data(), out.halfpower.data() + out.halfpower.size(),
            std::greater<double>());
  // the adjoint route: A = G^{1/2}(I-P) has A^{*w} A = (I-P) G (I-P)
  out.halfpower_adj = out.compressed.cwiseMax(0.0).cwiseSqrt();
  return out;
}

SchattenReport schatten_report_from(const SchattenSpectra& spectra, double p) {
  SchattenReport out;
  out.p = p;
  out.reduced_inverse_norm = schatten_from_singulars(spectra.reduced, p);
  out.compressed_inverse_norm = schatten_from_singulars(spectra.compressed, p);
  out.halfpower_left_norm = schatten_from_singulars(spectra.halfpower, 2.0 * p);
  out.halfpower_right_norm =
      schatten_from_singulars(spectra.halfpower_adj, 2.0 * p);
  out.i_vs_ii = std::abs(out.reduced_inverse_norm - out.compressed_inverse_norm);
  out.iii_vs_iv = std::abs(out.halfpower_left_norm - out.halfpower_right_norm);
  const double sq = out.halfpower_left_norm * out.halfpower_left_norm;
  out.iii_sq_vs_ii = std::abs(sq - out.compressed_inverse_norm) /
                     std::max(out.compressed_inverse_norm, 1e-300);
  return out;
}

}  // namespace

SchattenReport schatten_equivalence_suite(const Model& model, double p) {
  require(p > 0.0, "Schatten exponent must be positive");
  const SchattenSpectra spectra = schatten_spectra(model);
  return schatten_report_from(spectra, p);
}

std::vector<SchattenReport> schatten_equivalence_sweep(
    const Model& model, const std::vector<double>& p_values) {
  const SchattenSpectra spectra = schatten_spectra(model);
  std::vector<SchattenReport> out;
  for (double p : p_values) {
    require(p > 0.0, "Schatten exponent must be positive");
    out.push_back(schatten_report_from(spectra, p));
  }
  return out;
}

BlockDecomposition block_decompose(const Model& model) {
  const auto space = model.space();
  const KernelOperator green = models::friedrichs_green(model, 0.0);
  const Eigen::Index n = space->size();
  const ComplexMatrix& v = model.kernel_basis().columns;
  const ComplexMatrix vw =
      v.adjoint() * space->weights().cast<Complex>().asDiagonal();
  const ComplexMatrix& g = green.matrix;
  const ComplexMatrix vg = vw * g;   // r x n
  const ComplexMatrix gv = g * v;    // n x r
  const ComplexMatrix vgv = vg * v;  // r x r

  BlockDecomposition out;
  ComplexMatrix pp = v * (vgv * vw);
  ComplexMatrix pq = v * vg - v * (vgv * vw);
  ComplexMatrix qp = gv * vw - v * (vgv * vw);
  ComplexMatrix qq = g - v * vg - gv * vw + v * (vgv * vw);
  out.pp = KernelOperator(space, std::move(pp), true);
  out.pq = KernelOperator(space, std::move(pq), false);
  out.qp = KernelOperator(space, std::move(qp), false);
  out.qq = KernelOperator(space, std::move(qq), true);
  out.reconstruction_defect = numlin::operator_norm_estimate(ComplexMatrix(
      out.pp.matrix + out.pq.matrix + out.qp.matrix + out.qq.matrix -
      green.matrix));
  out.adjoint_defect = numlin::operator_norm_estimate(ComplexMatrix(
      out.pq.matrix - numlin::weighted_adjoint(*space, out.qp.matrix)));
  out.schatten_p2 = {numlin::schatten_norm(out.pp, 2.0),
                     numlin::schatten_norm(out.pq, 2.0),
                     numlin::schatten_norm(out.qp, 2.0),
                     numlin::schatten_norm(out.qq, 2.0)};
  return out;
}

CompactnessReport compactness_transfer_check(const Model& model, double p,
                                             int jmax) {
  require(p > 0.0, "Schatten exponent must be positive");
  const KernelOperator green = models::friedrichs_green(model, 0.0);
  const KernelOperator reduced = extensions::krein_reduced_inverse(model);
  CompactnessReport out;
  out.jmax = jmax;
  out.sigma_green = numlin::singular_values(green);
  out.sigma_reduced = numlin::singular_values(reduced);
  out.dominated = true;
  for (int j = 0; j < jmax && j < out.sigma_green.size(); ++j) {
    const double slack = out.sigma_green(j) - out.sigma_reduced(j);
    out.dominated = out.dominated && slack >= -1e-10 * out.sigma_green(j);
  }
  out.green_norm_p = numlin::schatten_norm(green, p);
  out.reduced_norm_p = numlin::schatten_norm(reduced, p);
  out.dominated = out.dominated && out.reduced_norm_p <= out.green_norm_p *
                                                             (1.0 + 1e-10);
  return out;
}

}  // namespace kreinkit::ideals
