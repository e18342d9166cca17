#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace kreinkit::numlin {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Quadrature rules on a fixed node set. Trapezoid and Gregory use endpoint
/// nodes, Midpoint uses cell centers.
enum class QuadRule { Trapezoid, Midpoint, Gregory6 };

std::string to_string(QuadRule rule);

struct Domain {
  double a = 0.0;
  double b = 1.0;
  bool half_line = false;  ///< (0, inf) truncated at b
  double length() const { return b - a; }
};

/// A quadrature-discretized Hilbert space on an interval or truncated
/// half-line: nodes, positive weights, and the weighted inner product
/// (conjugate-linear in the first argument).
class GridSpace {
 public:
  GridSpace(Domain domain, RealVector nodes, RealVector weights, QuadRule rule);

  const RealVector& nodes() const { return nodes_; }
  const RealVector& weights() const { return weights_; }
  const Domain& domain() const { return domain_; }
  QuadRule rule() const { return rule_; }
  Eigen::Index size() const { return nodes_.size(); }

  /// Uniform spacing; throws if the grid is not uniform.
  double spacing() const;

  bool same_as(const GridSpace& other) const;

 private:
  Domain domain_;
  RealVector nodes_;
  RealVector weights_;
  QuadRule rule_;
};

using SpacePtr = std::shared_ptr<const GridSpace>;

/// Uniform grid on (a,b). Default rule: composite trapezoid.
SpacePtr make_grid_space(double a, double b, Eigen::Index n,
                         QuadRule rule = QuadRule::Trapezoid);

/// Uniform grid on the truncated half-line (0,L). Default rule: Gregory
/// (endpoint-corrected trapezoid, degree-5 exact), which resolves the
/// smooth exponentially decaying integrands this space exists for.
SpacePtr make_halfline_space(double L, Eigen::Index n,
                             QuadRule rule = QuadRule::Gregory6);

/// One complex value per node of an owning space.
struct GridFun {
  SpacePtr space;
  ComplexVector values;

  GridFun() = default;
  GridFun(SpacePtr s, ComplexVector v);

  Eigen::Index size() const { return values.size(); }
};

GridFun sample(const SpacePtr& space, const std::function<Complex(double)>& f);

Complex inner(const GridFun& u, const GridFun& v);
double norm(const GridFun& u);

/// Orthonormal column family (w.r.t. the weighted inner product).
struct SubspaceBasis {
  SpacePtr space;
  ComplexMatrix columns;  ///< n x k, weighted-orthonormal
  double gram_tolerance = 1e-10;

  Eigen::Index dim() const { return columns.cols(); }
  GridFun column(Eigen::Index k) const;
  /// Coefficients <v_k, u> of u against the basis columns.
  ComplexVector coefficients(const GridFun& u) const;
  double gram_defect() const;
};

/// Gram-Schmidt with reorthogonalization. Singular values below
/// 1e-12 x (largest) are treated as rank deficiency and rejected.
SubspaceBasis orthonormalize(const std::vector<GridFun>& vectors);
SubspaceBasis orthonormalize_columns(const SpacePtr& space,
                                     const ComplexMatrix& columns);

GridFun project(const SubspaceBasis& basis, const GridFun& u);

/// Matrix of an operator with respect to the weighted inner product:
/// u |-> matrix * u acting on nodal values.
struct KernelOperator {
  SpacePtr space;
  ComplexMatrix matrix;
  bool hermitian_flag = false;

  KernelOperator() = default;
  KernelOperator(SpacePtr s, ComplexMatrix m, bool hermitian);

  Eigen::Index size() const { return matrix.rows(); }
  GridFun apply(const GridFun& u) const;
};

/// P = sum_k v_k <v_k, .>, idempotent and weighted-self-adjoint.
KernelOperator projector_matrix(const SubspaceBasis& basis);

/// Adjoint with respect to the weighted inner product: W^{-1} M^* W.
ComplexMatrix weighted_adjoint(const GridSpace& space, const ComplexMatrix& m);

/// || K - K^*w || (spectral norm estimate) -- 0 for weighted-Hermitian K.
double hermitian_defect(const KernelOperator& k);

struct EigenPair {
  double eigenvalue;
  GridFun eigenvector;
};

/// Full eigensystem of a weighted-Hermitian kernel operator, eigenvalues
/// ascending, eigenvectors weighted-orthonormal.
std::vector<EigenPair> hermitian_eig(const KernelOperator& k);

/// Eigenvalues only (ascending) of a weighted-Hermitian kernel operator.
RealVector hermitian_eigenvalues(const KernelOperator& k);

/// Singular values (descending) w.r.t. the weighted inner product.
RealVector singular_values(const KernelOperator& k);

/// (sum_k sigma_k^p)^{1/p}; p = infinity gives the operator norm.
/// Singular values below 1e-14 x sigma_max are dropped before summation.
double schatten_norm(const KernelOperator& k, double p);
inline constexpr double schatten_infinity = std::numeric_limits<double>::infinity();

/// Spectral-norm estimate by power iteration on M^* M (deterministic start).
double operator_norm_estimate(const ComplexMatrix& m, int iterations = 20);

/// Leading k singular values of a dense matrix by blocked subspace
/// iteration; exact up to iteration tolerance, cheap for low-rank inputs.
RealVector top_singular_values(const ComplexMatrix& m, int k, int iterations = 16);

/// Nystrom discretization of an integral kernel kappa(x,y):
/// matrix(i,j) = w_j kappa(x_i, x_j).
KernelOperator kernel_from_function(
    const SpacePtr& space, const std::function<Complex(double, double)>& kappa,
    bool hermitian = false);

/// Nystrom discretization with the product-integration correction for a
/// kernel whose y-derivative jumps across the diagonal by `slope_jump(x)`
/// (plus the endpoint Euler-Maclaurin terms). Raises the quadrature order
/// past the diagonal kink; exact eigenvalue convergence improves from
/// O(h^2) to O(h^4) for Green-type kernels.
KernelOperator kernel_from_function_corrected(
    const SpacePtr& space, const std::function<Complex(double, double)>& kappa,
    const std::function<Complex(double)>& slope_jump,
    const std::function<Complex(double, double)>& dkernel_dy, bool hermitian);

}  // namespace kreinkit::numlin
