#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kreinkit/models.hpp"

namespace kreinkit::extensions {

using models::Model;
using models::ModelPtr;
using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::GridFun;
using numlin::KernelOperator;
using numlin::RealVector;
using numlin::SubspaceBasis;

/// Selects a nonnegative self-adjoint extension of the model operator.
/// Param(B, W) carries a Hermitian PSD matrix B acting on the span of the
/// selected orthonormalized kernel columns; Boundary carries explicit
/// condition rows on the face traces.
struct ExtensionSpec {
  enum class Kind { Friedrichs, Krein, Param, Boundary };
  Kind kind = Kind::Friedrichs;
  ComplexMatrix b;               // Param: r' x r', Hermitian PSD
  std::vector<int> w_indices;    // Param: columns of the orthonormal N0 basis
  ComplexMatrix boundary_rows;   // Boundary: r x 2r rows on port traces

  static ExtensionSpec friedrichs();
  static ExtensionSpec krein();
  static ExtensionSpec param(ComplexMatrix b, std::vector<int> w_indices);
  static ExtensionSpec boundary(ComplexMatrix rows);

  std::string label() const;
};

struct Eigensystem {
  RealVector values;       ///< ascending
  ComplexMatrix vectors;   ///< weighted-orthonormal columns
};

/// A self-adjoint extension realized as boundary conditions on face traces,
/// with resolvent access, kernel projector, and spectral data.
class ExtensionRealization {
 public:
  ExtensionRealization(ModelPtr model, ExtensionSpec spec);

  const ModelPtr& model() const { return model_; }
  const ExtensionSpec& spec() const { return spec_; }
  const ComplexMatrix& bc() const { return bc_; }

  ComplexVector apply_resolvent(Complex z, const ComplexVector& f) const;
  GridFun apply_resolvent(Complex z, const GridFun& f) const;
  ComplexMatrix resolvent_dense(Complex z) const;
  KernelOperator resolvent_at(Complex z) const;

  int kernel_dim() const;
  /// Orthonormal basis of ker(extension); empty optional when trivial.
  const std::optional<SubspaceBasis>& kernel_basis() const { return kernel_; }
  KernelOperator kernel_projector() const;

  const Eigensystem& eigensystem() const;           // computed lazily
  const RealVector& eigenvalues() const;
  double spectrum_distance(Complex z) const;
  bool in_resolvent_set(Complex z, double margin = 1e-9) const;
  void require_resolvent_point(Complex z) const;

  KernelOperator operator_matrix() const;

 private:
  ModelPtr model_;
  ExtensionSpec spec_;
  ComplexMatrix bc_;
  std::optional<SubspaceBasis> kernel_;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const Eigensystem> eig_;
};

ExtensionRealization build_extension(const ModelPtr& model, ExtensionSpec spec);

/// Orthogonal projection onto ker(S*) of the model.
KernelOperator kernel_projector(const Model& model);

/// (I - P)(S_F)^{-1}(I - P): the inverse of the reduced soft extension on
/// the orthogonal complement of the kernel.
KernelOperator krein_reduced_inverse(const Model& model);

/// (I - P) A (I - P) with P the rank-r kernel projector, in O(r n^2).
ComplexMatrix compress_out_kernel(const Model& model, const ComplexMatrix& a);

struct FormValue {
  double value = 0.0;
  double friedrichs_part = 0.0;
  double b_part = 0.0;
};

/// Quadratic-form value of the extension at g + u, computed spectrally in
/// the Dirichlet eigenbasis (n/2 modes) plus the u* B u boundary part.
/// u holds coefficients over the selected kernel columns.
FormValue form_value(const ModelPtr& model, const ExtensionSpec& spec,
                     const GridFun& g, const ComplexVector& u);

struct OrderCheck {
  bool nonnegative = false;        ///< difference PSD within tolerance
  double min_eigenvalue = 0.0;     ///< smallest range eigenvalue of the difference
};

/// Checks (ext_b + a)^{-1} - (ext_a + a)^{-1} >= 0, i.e. ext_a >= ext_b in
/// the resolvent order. The difference has exact rank <= 2r; its nonzero
/// spectrum is computed through a range probe.
OrderCheck order_check(const ExtensionRealization& ext_a,
                       const ExtensionRealization& ext_b, double a,
                       double tolerance = 1e-8);

/// Randomized lower bound for sup_v |<u,Sv>|^2 / <v,Sv> over dom(S).
double krein_sup_form(const Model& model, const GridFun& u, int trial_count,
                      std::uint64_t seed = 0x5eed5eedULL);

struct ShiftCheck {
  double friedrichs_residual = 0.0;
  double krein_gap = 0.0;
};

/// Shifting commutes with the hard extension and fails for the soft one:
/// compares ((S+c)_X + 1)^{-1} with (S_X + (1+c))^{-1} for X = F, K.
ShiftCheck shift_noncommute_check(const ModelPtr& model, double c);

/// True iff the stacked boundary rows of the two extensions have full rank
/// 2r (domains intersect exactly in dom(S)).
bool relatively_prime_check(const ExtensionRealization& ext_a,
                            const ExtensionRealization& ext_b);

}  // namespace kreinkit::extensions
