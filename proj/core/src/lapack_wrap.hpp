#pragma once

// Thin LAPACKE wrappers for the dense factorizations the toolkit leans on.
// Eigen's own solvers are used for small problems; these cover the large
// symmetric/Hermitian eigenproblems where LAPACK is markedly faster.

#include <Eigen/Dense>
#include <stdexcept>

namespace kreinkit::detail {

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
};

struct HermitianEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

SymmetricEigen eigh(const Eigen::MatrixXd& a, bool with_vectors = true);
HermitianEigen eigh(const Eigen::MatrixXcd& a, bool with_vectors = true);

/// Singular values of a general complex matrix, descending.
Eigen::VectorXd svdvals(const Eigen::MatrixXcd& a);

}  // namespace kreinkit::detail
