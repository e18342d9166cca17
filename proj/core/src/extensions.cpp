#include "kreinkit/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lapack_wrap.hpp"

namespace kreinkit::extensions {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

ComplexMatrix require_psd_hermitian(const ComplexMatrix& b) {
  require(b.rows() == b.cols(), "B must be square");
  if (b.rows() == 0) return b;
  const double scale = std::max(1.0, b.norm());
  require((b - b.adjoint()).norm() <= 1e-10 * scale, "B must be Hermitian");
  ComplexMatrix h = 0.5 * (b + b.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, "B must be PSD");
  return h;
}

}  // namespace

ExtensionSpec ExtensionSpec::friedrichs() {
  ExtensionSpec s;
  s.kind = Kind::Friedrichs;
  return s;
}

ExtensionSpec ExtensionSpec::krein() {
  ExtensionSpec s;
  s.kind = Kind::Krein;
  return s;
}

ExtensionSpec ExtensionSpec::param(ComplexMatrix b, std::vector<int> w_indices) {
  ExtensionSpec s;
  s.kind = Kind::Param;
  s.b = require_psd_hermitian(b);
  s.w_indices = std::move(w_indices);
  require(static_cast<Eigen::Index>(s.w_indices.size()) == s.b.rows(),
          "B size must match the W selection");
  return s;
}

ExtensionSpec ExtensionSpec::boundary(ComplexMatrix rows) {
  ExtensionSpec s;
  s.kind = Kind::Boundary;
  s.boundary_rows = std::move(rows);
  return s;
}

std::string ExtensionSpec::label() const {
  switch (kind) {
    case Kind::Friedrichs: return "friedrichs";
    case Kind::Krein: return "krein";
    case Kind::Param: {
      std::ostringstream os;
      os << "param(r'=" << b.rows() << ")";
      return os.str();
    }
    case Kind::Boundary: return "boundary";
  }
  return "unknown";
}

namespace {

/// Boundary rows for the Param family: traces of the spanning set
/// f + (S_F)^{-1}(B w + eta) + w of the extension domain.
ComplexMatrix param_boundary_rows(const Model& model, const ComplexMatrix& b,
                                  const std::vector<int>& w_indices) {
  const int r = model.deficiency_index();
  for (int idx : w_indices)
    require(idx >= 0 && idx < r, "W index out of range");
  const auto rp = static_cast<Eigen::Index>(w_indices.size());
  require(b.rows() == rp, "B size must match the W selection");

  const SubspaceBasis& kb = model.kernel_basis();
  const ComplexMatrix ktr = model.kernel_basis_traces();
  const ComplexMatrix fbc = model.friedrichs_bc();

  ComplexMatrix span_traces(2 * r, r);
  Eigen::Index col = 0;
  for (Eigen::Index k = 0; k < rp; ++k) {
    // grid function B w_k expressed through the selected kernel columns
    ComplexVector bw = ComplexVector::Zero(model.space()->size());
    ComplexVector tr = ComplexVector::Zero(2 * r);
    for (Eigen::Index j = 0; j < rp; ++j) {
      bw += b(j, k) * kb.columns.col(w_indices[static_cast<std::size_t>(j)]);
    }
    const ComplexVector g = model.resolve(fbc, 0.0, bw);
    tr = model.dirichlet_traces(g);
    tr += ktr.col(w_indices[static_cast<std::size_t>(k)]);
    span_traces.col(col++) = tr;
  }
  for (int e = 0; e < r; ++e) {
    if (std::find(w_indices.begin(), w_indices.end(), e) != w_indices.end())
      continue;
    const ComplexVector g = model.resolve(fbc, 0.0, ComplexVector(kb.columns.col(e)));
    span_traces.col(col++) = model.dirichlet_traces(g);
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(span_traces, Eigen::ComputeFullU);
  svd.setThreshold(1e-10);
  if (svd.rank() < r)
    throw std::invalid_argument("extension domain traces are rank deficient");
  ComplexMatrix bc = svd.matrixU().rightCols(r).adjoint();
  if (bc.imag().cwiseAbs().maxCoeff() < 1e-13 * bc.norm()) bc.imag().setZero();
  return bc;
}

std::optional<SubspaceBasis> extension_kernel(const Model& model,
                                              const ComplexMatrix& bc) {
  const auto modes = model.kernel_modes();
  const auto r = static_cast<Eigen::Index>(modes.size());
  ComplexMatrix tr(2 * r, r), vals(model.space()->size(), r);
  for (Eigen::Index k = 0; k < r; ++k) {
    tr.col(k) = modes[static_cast<std::size_t>(k)].traces;
    vals.col(k) = modes[static_cast<std::size_t>(k)].values;
  }
  const ComplexMatrix cond = bc * tr;  // r x r
  Eigen::JacobiSVD<ComplexMatrix> svd(cond, Eigen::ComputeFullV);
  // rank against the scale of the inputs, not of cond itself: the product is
  // an exact zero matrix for the soft extension
  const double scale = std::max(1.0, bc.norm() * tr.norm());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8 * scale) ++rank;
  const Eigen::Index null_dim = r - rank;
  if (null_dim == 0) return std::nullopt;
  const ComplexMatrix combo = svd.matrixV().rightCols(null_dim);
  return numlin::orthonormalize_columns(model.space(), ComplexMatrix(vals * combo));
}

}  // namespace

ExtensionRealization::ExtensionRealization(ModelPtr model, ExtensionSpec spec)
    : model_(std::move(model)), spec_(std::move(spec)) {
  require(model_ != nullptr, "extension needs a model");
  const int r = model_->deficiency_index();
  switch (spec_.kind) {
    case ExtensionSpec::Kind::Friedrichs:
      bc_ = model_->friedrichs_bc();
      break;
    case ExtensionSpec::Kind::Krein:
      bc_ = model_->krein_bc();
      break;
    case ExtensionSpec::Kind::Param:
      bc_ = param_boundary_rows(*model_, spec_.b, spec_.w_indices);
      break;
    case ExtensionSpec::Kind::Boundary:
      require(spec_.boundary_rows.rows() == r &&
                  spec_.boundary_rows.cols() == 2 * r,
              "boundary rows must be r x 2r");
      bc_ = spec_.boundary_rows;
      break;
  }
  // validate the closure early (throws on rank-deficient or non-self-adjoint rows)
  (void)model_->resolve(bc_, Complex(0.0, 1.0),
                        ComplexVector::Zero(model_->space()->size()));
  kernel_ = extension_kernel(*model_, bc_);
}

ComplexVector ExtensionRealization::apply_resolvent(Complex z,
                                                    const ComplexVector& f) const {
  return model_->resolve(bc_, z, f);
}

GridFun ExtensionRealization::apply_resolvent(Complex z, const GridFun& f) const {
  return GridFun(model_->space(), apply_resolvent(z, f.values));
}

ComplexMatrix ExtensionRealization::resolvent_dense(Complex z) const {
  return model_->resolve_dense(bc_, z);
}

KernelOperator ExtensionRealization::resolvent_at(Complex z) const {
  return KernelOperator(model_->space(), resolvent_dense(z), z.imag() == 0.0);
}

int ExtensionRealization::kernel_dim() const {
  return kernel_ ? static_cast<int>(kernel_->dim()) : 0;
}

KernelOperator ExtensionRealization::kernel_projector() const {
  if (!kernel_) {
    const Eigen::Index n = model_->space()->size();
    return KernelOperator(model_->space(), ComplexMatrix::Zero(n, n), true);
  }
  return numlin::projector_matrix(*kernel_);
}

const Eigensystem& ExtensionRealization::eigensystem() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!eig_) {
    const ComplexMatrix t = model_->operator_dense(bc_);
    auto sys = std::make_shared<Eigensystem>();
    const RealVector& w = model_->space()->weights();
    const RealVector sqw = w.cwiseSqrt();
    ComplexMatrix s = sqw.cast<Complex>().asDiagonal() * t *
                      sqw.cwiseInverse().cast<Complex>().asDiagonal();
    s = Complex(0.5, 0.0) * (s + s.adjoint()).eval();
    if (s.imag().cwiseAbs().maxCoeff() == 0.0) {
      auto es = detail::eigh(Eigen::MatrixXd(s.real()));
      sys->values = std::move(es.values);
      sys->vectors = es.vectors.cast<Complex>();
    } else {
      auto es = detail::eigh(s);
      sys->values = std::move(es.values);
      sys->vectors = std::move(es.vectors);
    }
    sys->vectors = sqw.cwiseInverse().cast<Complex>().asDiagonal() * sys->vectors;
    eig_ = std::move(sys);
  }
  return *eig_;
}

const RealVector& ExtensionRealization::eigenvalues() const {
  return eigensystem().values;
}

double ExtensionRealization::spectrum_distance(Complex z) const {
  const RealVector& ev = eigenvalues();
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    d = std::min(d, std::abs(z - Complex(ev(i), 0.0)));
  return d;
}

bool ExtensionRealization::in_resolvent_set(Complex z, double margin) const {
  return spectrum_distance(z) > margin * std::max(1.0, std::abs(z));
}

void ExtensionRealization::require_resolvent_point(Complex z) const {
  if (!in_resolvent_set(z))
    throw std::invalid_argument("spectral parameter inside the spectrum margin");
}

KernelOperator ExtensionRealization::operator_matrix() const {
  return KernelOperator(model_->space(), model_->operator_dense(bc_), true);
}

ExtensionRealization build_extension(const ModelPtr& model, ExtensionSpec spec) {
  return ExtensionRealization(model, std::move(spec));
}

KernelOperator kernel_projector(const Model& model) {
  return numlin::projector_matrix(model.kernel_basis());
}

ComplexMatrix compress_out_kernel(const Model& model, const ComplexMatrix& a) {
  const ComplexMatrix& v = model.kernel_basis().columns;
  const ComplexMatrix vw =
      v.adjoint() * model.space()->weights().cast<Complex>().asDiagonal();
  const ComplexMatrix va = vw * a;  // r x n
  const ComplexMatrix av = a * v;   // n x r
  ComplexMatrix out = a;
  out.noalias() -= v * va;
  out.noalias() -= av * vw;
  out.noalias() += v * ((va * v) * vw);
  return out;
}

KernelOperator krein_reduced_inverse(const Model& model) {
  const ComplexMatrix g = model.resolve_dense(model.friedrichs_bc(), 0.0);
  return KernelOperator(model.space(), compress_out_kernel(model, g), true);
}

FormValue form_value(const ModelPtr& model, const ExtensionSpec& spec,
                     const GridFun& g, const ComplexVector& u) {
  require(g.space->same_as(*model->space()), "grid space mismatch");
  // form domain requires vanishing face values
  const double gmax = std::max(1e-300, g.values.cwiseAbs().maxCoeff());
  const ComplexVector faces = model->port_face_values(g.values);
  if (faces.cwiseAbs().maxCoeff() > 1e-4 * gmax)
    throw std::invalid_argument(
        "g has a nonvanishing Dirichlet trace (outside the form domain)");

  ExtensionRealization friedrichs(model, ExtensionSpec::friedrichs());
  const Eigensystem& es = friedrichs.eigensystem();
  const Eigen::Index modes = es.values.size() / 2;
  const RealVector& w = model->space()->weights();
  const ComplexVector coef =
      es.vectors.leftCols(modes).adjoint() *
      (w.cast<Complex>().asDiagonal() * g.values).eval();
  FormValue out;
  for (Eigen::Index j = 0; j < modes; ++j)
    out.friedrichs_part += es.values(j) * std::norm(coef(j));

  if (u.size() > 0) {
    ComplexMatrix b = spec.b;
    if (spec.kind == ExtensionSpec::Kind::Krein)
      b = ComplexMatrix::Zero(u.size(), u.size());
    require(b.rows() == u.size(), "coefficient vector does not match B");
    out.b_part = std::real((u.adjoint() * (b * u))(0, 0));
  }
  out.value = out.friedrichs_part + out.b_part;
  return out;
}

OrderCheck order_check(const ExtensionRealization& ext_a,
                       const ExtensionRealization& ext_b, double a,
                       double tolerance) {
  require(a > 0.0, "shift a must be positive");
  require(ext_a.model().get() == ext_b.model().get(),
          "order check requires extensions of one model");
  const Complex z(-a, 0.0);
  const ComplexMatrix d = ext_b.resolvent_dense(z) - ext_a.resolvent_dense(z);
  // the difference has exact rank <= 2r; probe its range and diagonalize the
  // Hermitian section there (the complement carries only the zero eigenvalue)
  const Eigen::Index n = d.rows();
  const int r = ext_a.model()->deficiency_index();
  const Eigen::Index k = std::min<Eigen::Index>(n, 2 * r + 4);
  const RealVector sqw = ext_a.model()->space()->weights().cwiseSqrt();
  ComplexMatrix ds = sqw.cast<Complex>().asDiagonal() * d *
                     sqw.cwiseInverse().cast<Complex>().asDiagonal();
  ds = 0.5 * (ds + ds.adjoint()).eval();
  ComplexMatrix probe(n, k);
  std::mt19937_64 rng(0xa11ce);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) probe(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(ComplexMatrix(ds * probe));
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, k);
  ComplexMatrix small = q.adjoint() * ds * q;
  small = 0.5 * (small + small.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(small);
  OrderCheck out;
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.nonnegative = out.min_eigenvalue >= -tolerance;
  return out;
}

double krein_sup_form(const Model& model, const GridFun& u, int trial_count,
                      std::uint64_t seed) {
  require(trial_count >= 100, "need at least 100 trials");
  require(u.space->same_as(*model.space()), "grid space mismatch");
  std::mt19937_64 rng(seed);
  const RealVector& w = model.space()->weights();
  double best = 0.0;
  for (int t = 0; t < trial_count; ++t) {
    const GridFun v = model.sample_domain_element(rng);
    const ComplexVector sv = model.apply_adjoint_minimal(v.values);
    Complex den = 0.0, num = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      den += w(i) * std::conj(v.values(i)) * sv(i);
      num += w(i) * std::conj(u.values(i)) * sv(i);
    }
    const double d = std::real(den);
    if (d <= 1e-14) continue;  // 0/0 convention: a vanishing form kills Sv
    best = std::max(best, std::norm(num) / d);
  }
  return best;
}

ShiftCheck shift_noncommute_check(const ModelPtr& model, double c) {
  require(c >= 0.0, "shift must be nonnegative");
  const double a = 1.0;
  ExtensionRealization f0(model, ExtensionSpec::friedrichs());
  ExtensionRealization k0(model, ExtensionSpec::krein());
  const ModelPtr shifted = model->with_shift(c);
  ExtensionRealization fc(shifted, ExtensionSpec::friedrichs());
  ExtensionRealization kc(shifted, ExtensionSpec::krein());
  ShiftCheck out;
  out.friedrichs_residual = numlin::operator_norm_estimate(
      ComplexMatrix(fc.resolvent_dense(Complex(-a, 0.0)) -
                    f0.resolvent_dense(Complex(-(a + c), 0.0))));
  out.krein_gap = numlin::operator_norm_estimate(
      ComplexMatrix(kc.resolvent_dense(Complex(-a, 0.0)) -
                    k0.resolvent_dense(Complex(-(a + c), 0.0))));
  return out;
}

bool relatively_prime_check(const ExtensionRealization& ext_a,
                            const ExtensionRealization& ext_b) {
  require(ext_a.model().get() == ext_b.model().get(),
          "relative primeness is defined for extensions of one model");
  const int r = ext_a.model()->deficiency_index();
  ComplexMatrix stacked(2 * r, 2 * r);
  stacked.topRows(r) = ext_a.bc();
  stacked.bottomRows(r) = ext_b.bc();
  Eigen::JacobiSVD<ComplexMatrix> svd(stacked);
  svd.setThreshold(1e-8);
  return svd.rank() == 2 * r;
}

}  // namespace kreinkit::extensions
