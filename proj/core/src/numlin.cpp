#include "kreinkit/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lapack_wrap.hpp"

namespace kreinkit::numlin {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kSchattenFloor = 1e-14;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

std::string to_string(QuadRule rule) {
  switch (rule) {
    case QuadRule::Trapezoid: return "trapezoid";
    case QuadRule::Midpoint: return "midpoint";
    case QuadRule::Gregory6: return "gregory6";
  }
  return "unknown";
}

GridSpace::GridSpace(Domain domain, RealVector nodes, RealVector weights,
                     QuadRule rule)
    : domain_(domain), nodes_(std::move(nodes)), weights_(std::move(weights)),
      rule_(rule) {
  require(nodes_.size() == weights_.size(), "nodes/weights length mismatch");
  require(nodes_.size() >= 2, "grid too small");
  for (Eigen::Index i = 0; i < weights_.size(); ++i)
    require(weights_(i) > 0.0, "quadrature weights must be positive");
  for (Eigen::Index i = 1; i < nodes_.size(); ++i)
    require(nodes_(i) > nodes_(i - 1), "nodes must be strictly increasing");
  // <1,1> must reproduce the domain length up to quadrature tolerance
  const double mass = weights_.sum();
  const double tol = 2.0 * weights_.maxCoeff() + 1e-12 * domain_.length();
  require(std::abs(mass - domain_.length()) <= tol,
          "weights do not integrate the constant function to the domain length");
}

double GridSpace::spacing() const {
  const double h = nodes_(1) - nodes_(0);
  for (Eigen::Index i = 1; i + 1 < nodes_.size(); ++i) {
    if (std::abs((nodes_(i + 1) - nodes_(i)) - h) > 1e-12 * std::abs(h))
      throw std::logic_error("grid is not uniform");
  }
  return h;
}

bool GridSpace::same_as(const GridSpace& other) const {
  if (this == &other) return true;
  return nodes_.size() == other.nodes_.size() && nodes_ == other.nodes_ &&
         weights_ == other.weights_;
}

namespace {

RealVector uniform_nodes(double a, double b, Eigen::Index n, bool midpoint) {
  RealVector x(n);
  if (midpoint) {
    const double h = (b - a) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = a + (static_cast<double>(i) + 0.5) * h;
  } else {
    const double h = (b - a) / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = a + static_cast<double>(i) * h;
  }
  return x;
}

RealVector rule_weights(QuadRule rule, double a, double b, Eigen::Index n) {
  RealVector w(n);
  switch (rule) {
    case QuadRule::Trapezoid: {
      const double h = (b - a) / static_cast<double>(n - 1);
      w.setConstant(h);
      w(0) = w(n - 1) = h / 2.0;
      break;
    }
    case QuadRule::Midpoint: {
      const double h = (b - a) / static_cast<double>(n);
      w.setConstant(h);
      break;
    }
    case QuadRule::Gregory6: {
      if (n < 10) throw std::invalid_argument("Gregory rule needs n >= 10");
      const double h = (b - a) / static_cast<double>(n - 1);
      w.setConstant(h);
      const double c[5] = {95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0,
                           793.0 / 720.0, 157.0 / 160.0};
      for (int i = 0; i < 5; ++i) {
        w(i) = h * c[i];
        w(n - 1 - i) = h * c[i];
      }
      break;
    }
  }
  return w;
}

}  // namespace

SpacePtr make_grid_space(double a, double b, Eigen::Index n, QuadRule rule) {
  require(n >= 8, "node count too small (need n >= 8)");
  require(b > a, "endpoints out of order / non-positive length");
  Domain d{a, b, false};
  return std::make_shared<GridSpace>(
      d, uniform_nodes(a, b, n, rule == QuadRule::Midpoint),
      rule_weights(rule, a, b, n), rule);
}

SpacePtr make_halfline_space(double L, Eigen::Index n, QuadRule rule) {
  require(n >= 8, "node count too small (need n >= 8)");
  require(L > 0, "non-positive truncation length");
  Domain d{0.0, L, true};
  return std::make_shared<GridSpace>(
      d, uniform_nodes(0.0, L, n, rule == QuadRule::Midpoint),
      rule_weights(rule, 0.0, L, n), rule);
}

GridFun::GridFun(SpacePtr s, ComplexVector v) : space(std::move(s)), values(std::move(v)) {
  require(space != nullptr, "grid function needs a space");
  require(values.size() == space->size(), "value count does not match space");
}

GridFun sample(const SpacePtr& space, const std::function<Complex(double)>& f) {
  ComplexVector v(space->size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f(space->nodes()(i));
  return GridFun(space, std::move(v));
}

namespace {
void require_same_space(const GridFun& u, const GridFun& v) {
  require(u.space && v.space && u.space->same_as(*v.space), "grid space mismatch");
}
}  // namespace

Complex inner(const GridFun& u, const GridFun& v) {
  require_same_space(u, v);
  const auto& w = u.space->weights();
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    s += w(i) * std::conj(u.values(i)) * v.values(i);
  return s;
}

double norm(const GridFun& u) { return std::sqrt(std::abs(inner(u, u))); }

GridFun SubspaceBasis::column(Eigen::Index k) const {
  return GridFun(space, columns.col(k));
}

ComplexVector SubspaceBasis::coefficients(const GridFun& u) const {
  require(space->same_as(*u.space), "grid space mismatch");
  return columns.adjoint() * (space->weights().cast<Complex>().asDiagonal() * u.values);
}

double SubspaceBasis::gram_defect() const {
  ComplexMatrix gram = columns.adjoint() *
                       (space->weights().cast<Complex>().asDiagonal() * columns);
  gram -= ComplexMatrix::Identity(dim(), dim());
  return gram.norm();
}

SubspaceBasis orthonormalize_columns(const SpacePtr& space,
                                     const ComplexMatrix& raw) {
  require(raw.cols() >= 1, "no vectors to orthonormalize");
  const RealVector& w = space->weights();
  const RealVector sqw = w.cwiseSqrt();

  // rank screen on the weighted column matrix
  ComplexMatrix scaled = sqw.cast<Complex>().asDiagonal() * raw;
  const RealVector sv = detail::svdvals(scaled);
  if (sv(0) <= 0.0 || sv(sv.size() - 1) < kRankTolerance * sv(0))
    throw std::invalid_argument("rank-deficient vector family");

  // modified Gram-Schmidt with one reorthogonalization pass
  ComplexMatrix q = raw;
  auto wdot = [&](const ComplexVector& x, const ComplexVector& y) {
    Complex s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) s += w(i) * std::conj(x(i)) * y(i);
    return s;
  };
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) {
        ComplexVector qj = q.col(j);
        q.col(k) -= wdot(qj, q.col(k)) * qj;
      }
    }
    const double nk = std::sqrt(std::abs(wdot(q.col(k), q.col(k))));
    q.col(k) /= nk;
  }
  SubspaceBasis basis;
  basis.space = space;
  basis.columns = std::move(q);
  return basis;
}

SubspaceBasis orthonormalize(const std::vector<GridFun>& vectors) {
  require(!vectors.empty(), "no vectors to orthonormalize");
  const SpacePtr space = vectors.front().space;
  ComplexMatrix raw(space->size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require(vectors[k].space->same_as(*space), "grid space mismatch");
    raw.col(static_cast<Eigen::Index>(k)) = vectors[k].values;
  }
  return orthonormalize_columns(space, raw);
}

GridFun project(const SubspaceBasis& basis, const GridFun& u) {
  return GridFun(basis.space, basis.columns * basis.coefficients(u));
}

KernelOperator::KernelOperator(SpacePtr s, ComplexMatrix m, bool hermitian)
    : space(std::move(s)), matrix(std::move(m)), hermitian_flag(hermitian) {
  require(space != nullptr, "kernel operator needs a space");
  require(matrix.rows() == matrix.cols() && matrix.rows() == space->size(),
          "matrix size does not match space");
}

GridFun KernelOperator::apply(const GridFun& u) const {
  require(space->same_as(*u.space), "grid space mismatch");
  return GridFun(space, matrix * u.values);
}

KernelOperator projector_matrix(const SubspaceBasis& basis) {
  const auto& w = basis.space->weights();
  ComplexMatrix p = basis.columns *
                    (basis.columns.adjoint() * w.cast<Complex>().asDiagonal());
  return KernelOperator(basis.space, std::move(p), true);
}

ComplexMatrix weighted_adjoint(const GridSpace& space, const ComplexMatrix& m) {
  const auto& w = space.weights();
  return w.cwiseInverse().cast<Complex>().asDiagonal() *
         (m.adjoint() * w.cast<Complex>().asDiagonal()).eval();
}

double hermitian_defect(const KernelOperator& k) {
  ComplexMatrix d = k.matrix - weighted_adjoint(*k.space, k.matrix);
  return operator_norm_estimate(d);
}

namespace {

/// Similarity to a plainly Hermitian matrix: W^{1/2} M W^{-1/2}.
ComplexMatrix symmetrized(const GridSpace& space, const ComplexMatrix& m) {
  const RealVector sqw = space.weights().cwiseSqrt();
  return sqw.cast<Complex>().asDiagonal() * m *
         sqw.cwiseInverse().cast<Complex>().asDiagonal();
}

bool is_real(const ComplexMatrix& m) {
  return m.imag().cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

std::vector<EigenPair> hermitian_eig(const KernelOperator& k) {
  if (!k.hermitian_flag)
    throw std::invalid_argument("hermitian_eig requires the hermitian flag");
  const RealVector sqw = k.space->weights().cwiseSqrt();
  ComplexMatrix s = symmetrized(*k.space, k.matrix);
  s = Complex(0.5, 0.0) * (s + s.adjoint()).eval();

  RealVector values;
  ComplexMatrix vectors;
  if (is_real(s)) {
    auto es = detail::eigh(RealMatrix(s.real()));
    values = std::move(es.values);
    vectors = es.vectors.cast<Complex>();
  } else {
    auto es = detail::eigh(s);
    values = std::move(es.values);
    vectors = std::move(es.vectors);
  }
  std::vector<EigenPair> out;
  out.reserve(values.size());
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    ComplexVector v = sqw.cwiseInverse().cast<Complex>().asDiagonal() * vectors.col(j);
    out.push_back({values(j), GridFun(k.space, std::move(v))});
  }
  return out;
}

RealVector hermitian_eigenvalues(const KernelOperator& k) {
  if (!k.hermitian_flag)
    throw std::invalid_argument("hermitian_eigenvalues requires the hermitian flag");
  ComplexMatrix s = symmetrized(*k.space, k.matrix);
  s = Complex(0.5, 0.0) * (s + s.adjoint()).eval();
  if (is_real(s)) return detail::eigh(RealMatrix(s.real()), false).values;
  return detail::eigh(s, false).values;
}

RealVector singular_values(const KernelOperator& k) {
  ComplexMatrix s = symmetrized(*k.space, k.matrix);
  if (k.hermitian_flag) {
    s = Complex(0.5, 0.0) * (s + s.adjoint()).eval();
    RealVector ev = is_real(s) ? detail::eigh(RealMatrix(s.real()), false).values
                               : detail::eigh(s, false).values;
    RealVector sv = ev.cwiseAbs();
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
    return sv;
  }
  return detail::svdvals(s);
}

double schatten_norm(const KernelOperator& k, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("Schatten exponent must be positive");
  const RealVector sv = singular_values(k);
  if (sv.size() == 0) return 0.0;
  const double smax = sv(0);
  if (std::isinf(p) || smax == 0.0) return smax;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) < kSchattenFloor * smax) break;
    sum += std::pow(sv(i), p);
  }
  return std::pow(sum, 1.0 / p);
}

double operator_norm_estimate(const ComplexMatrix& m, int iterations) {
  if (m.rows() == 0) return 0.0;
  ComplexVector v = ComplexVector::Ones(m.cols());
  v.normalize();
  double s = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ComplexVector w = m.adjoint() * (m * v).eval();
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    s = std::sqrt(nw);
  }
  return s;
}

RealVector top_singular_values(const ComplexMatrix& m, int k, int iterations) {
  const Eigen::Index n = m.cols();
  k = static_cast<int>(std::min<Eigen::Index>(k, n));
  // deterministic pseudo-random start block
  ComplexMatrix v(n, k);
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&state]() {
    state ^= state << 13; state ^= state >> 7; state ^= state << 17;
    return static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
  };
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) v(i, j) = Complex(next(), next());
  Eigen::HouseholderQR<ComplexMatrix> qr0(v);
  v = qr0.householderQ() * ComplexMatrix::Identity(n, k);
  for (int it = 0; it < iterations; ++it) {
    ComplexMatrix w = m.adjoint() * (m * v).eval();
    Eigen::HouseholderQR<ComplexMatrix> qr(w);
    v = qr.householderQ() * ComplexMatrix::Identity(n, k);
  }
  // final pass on M itself (a Gram section would floor small values at
  // sqrt(machine epsilon) times the norm)
  ComplexMatrix mv = m * v;
  Eigen::JacobiSVD<ComplexMatrix> svd(mv);
  RealVector sv = svd.singularValues();
  std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
  return sv;
}

KernelOperator kernel_from_function(
    const SpacePtr& space, const std::function<Complex(double, double)>& kappa,
    bool hermitian) {
  const Eigen::Index n = space->size();
  const auto& x = space->nodes();
  const auto& w = space->weights();
  ComplexMatrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = w(j) * kappa(x(i), x(j));
  return KernelOperator(space, std::move(m), hermitian);
}

KernelOperator kernel_from_function_corrected(
    const SpacePtr& space, const std::function<Complex(double, double)>& kappa,
    const std::function<Complex(double)>& slope_jump,
    const std::function<Complex(double, double)>& dkernel_dy, bool hermitian) {
  if (space->rule() != QuadRule::Trapezoid)
    throw std::invalid_argument("kink correction is set up for the trapezoid rule");
  KernelOperator k = kernel_from_function(space, kappa, hermitian);
  const Eigen::Index n = space->size();
  const auto& x = space->nodes();
  const double h = space->spacing();
  const double c = h * h / 12.0;
  // composite trapezoid of a piecewise-smooth g with a kink at an interior
  // node x_i: T(g) - I(g) = (h^2/12)[g'(b) - g'(a) - jump_i(g')] + O(h^4)
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0 && i < n - 1) k.matrix(i, i) += c * slope_jump(x(i));
    k.matrix(i, n - 1) -= c * dkernel_dy(x(i), x(n - 1));
    k.matrix(i, 0) += c * dkernel_dy(x(i), x(0));
  }
  k.hermitian_flag = false;  // endpoint terms break exact weighted symmetry
  if (hermitian) {
    // restore Hermitian structure by averaging with the weighted adjoint
    ComplexMatrix adj = weighted_adjoint(*space, k.matrix);
    k.matrix = 0.5 * (k.matrix + adj);
    k.hermitian_flag = true;
  }
  return KernelOperator(space, std::move(k.matrix), k.hermitian_flag);
}

}  // namespace kreinkit::numlin
