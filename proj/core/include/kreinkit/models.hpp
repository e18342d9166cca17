#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kreinkit/numlin.hpp"

namespace kreinkit::models {

using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::GridFun;
using numlin::KernelOperator;
using numlin::RealVector;
using numlin::SpacePtr;
using numlin::SubspaceBasis;

/// An exact solution of the interior three-point recurrence together with
/// its ghost-cell face traces. Modes span ker(S* - z) for the discretized
/// operator; their traces are exact, not finite-difference approximations.
struct Mode {
  ComplexVector values;  ///< nodal values on the model grid
  ComplexVector traces;  ///< (value, derivative) per boundary port, 2r entries
};

/// A computable realization of a strictly positive symmetric operator with
/// finite equal deficiency indices. The grid is cell-centered; boundary
/// conditions act on face traces (value, +x-derivative) at each
/// parametrized port, and every self-adjoint condition family yields an
/// exactly Hermitian matrix after ghost elimination.
class Model : public std::enable_shared_from_this<Model> {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual const SpacePtr& space() const = 0;
  virtual double epsilon() const = 0;
  virtual int deficiency_index() const = 0;
  virtual int port_count() const = 0;

  /// S* u via the interior stencil. Entries at rows adjacent to a
  /// parametrized boundary face are trace data, not operator values; they
  /// are returned as zero and listed by flagged_rows().
  virtual GridFun apply_adjoint(const GridFun& u) const = 0;
  virtual const std::vector<Eigen::Index>& flagged_rows() const = 0;
  /// Rows adjacent to any face, including built-in truncation closures.
  virtual const std::vector<Eigen::Index>& boundary_rows() const = 0;

  /// Minimal-domain action: u must vanish at all flagged rows; the stencil
  /// then closes with zero ghosts and agrees with every extension.
  virtual ComplexVector apply_adjoint_minimal(const ComplexVector& u) const = 0;

  /// Exact recurrence solutions at spectral parameter z (r of them).
  virtual std::vector<Mode> solution_modes(Complex z) const = 0;

  virtual const std::vector<Mode>& kernel_modes() const = 0;
  virtual const SubspaceBasis& kernel_basis() const = 0;
  /// Face traces of the orthonormalized kernel columns, 2r x r.
  virtual ComplexMatrix kernel_basis_traces() const = 0;
  virtual SubspaceBasis deficiency_basis_at(Complex z) const = 0;
  /// Orthonormal basis of N_+ = ker(S* - i), fixed once per model.
  virtual const SubspaceBasis& nplus_basis() const = 0;

  /// Face-value rows: u = 0 at every port (the Friedrichs realization).
  virtual ComplexMatrix friedrichs_bc() const = 0;
  /// Rows annihilating the kernel-mode traces (the Krein realization).
  virtual ComplexMatrix krein_bc() const = 0;

  /// Resolvent of the extension selected by boundary rows `bc` (r x 2r).
  virtual ComplexVector resolve(const ComplexMatrix& bc, Complex z,
                                const ComplexVector& f) const = 0;
  virtual ComplexMatrix resolve_dense(const ComplexMatrix& bc, Complex z) const = 0;
  /// Dense matrix of the extension operator itself.
  virtual ComplexMatrix operator_dense(const ComplexMatrix& bc) const = 0;

  /// Traces of a function produced by the Friedrichs solve (value 0 at all
  /// ports; derivative from the Dirichlet ghost closure).
  virtual ComplexVector dirichlet_traces(const ComplexVector& u) const = 0;

  /// Second-order extrapolated values of u at the port faces (one per port).
  virtual ComplexVector port_face_values(const ComplexVector& u) const = 0;

  /// Face values of a resolvent output reconstructed from the stencil row
  /// itself, (S - z) u = f: cross-validates the boundary closure against the
  /// equation at machine precision.
  virtual ComplexVector pde_face_values(const ComplexVector& u,
                                        const ComplexVector& f,
                                        Complex z) const = 0;

  /// Smooth random element of dom(S): vanishes at flagged rows exactly.
  virtual GridFun sample_domain_element(std::mt19937_64& rng) const = 0;

  virtual std::shared_ptr<const Model> resized(Eigen::Index n) const = 0;
  /// The operator S + c (same grid, shifted potential).
  virtual std::shared_ptr<const Model> with_shift(double c) const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

/// -d^2/dx^2 with minimal domain on (0,1): epsilon = pi^2, r = 2,
/// ker(S*) = span{1, x}, Friedrichs = Dirichlet.
ModelPtr interval_laplacian(Eigen::Index n);

/// -d^2/dx^2 + 1 minimal on (0,inf) truncated at L: epsilon = 1, r = 1,
/// ker(S*) = span{e^{-x}}. Throws if exp(-L) exceeds the decay tolerance.
ModelPtr halfline_schroedinger(Eigen::Index n, double L);

ModelPtr direct_sum(const std::vector<ModelPtr>& parts);

/// Conjugated model U S U^{-1}; U must be unitary within 1e-10.
ModelPtr unitary_conjugate(const ModelPtr& model, const KernelOperator& u);

/// Friedrichs resolvent (S_F - z)^{-1} as a kernel operator.
KernelOperator friedrichs_green(const Model& model, Complex z);

}  // namespace kreinkit::models
