#pragma once

#include <string>
#include <vector>

#include "kreinkit/extensions.hpp"

namespace kreinkit::moperator {

using extensions::ExtensionRealization;
using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::GridFun;
using numlin::KernelOperator;
using numlin::RealVector;
using numlin::SubspaceBasis;

/// U_{S,z,z0} = I + (z - z0)(S - z)^{-1}: maps ker(S* - z0) onto ker(S* - z)
/// and composes along chains of spectral parameters.
GridFun u_transform(const ExtensionRealization& ext, Complex z, Complex z0,
                    const GridFun& u);

/// Cayley transform C_S = (S + i)(S - i)^{-1}, unitary, maps N_- onto N_+.
GridFun cayley(const ExtensionRealization& ext, const GridFun& u);
GridFun cayley_inverse(const ExtensionRealization& ext, const GridFun& u);

/// (S1-z)(S1-i)^{-1} [(S2-z)^{-1} - (S1-z)^{-1}] (S1-z)(S1+i)^{-1}:
/// vanishes on the orthogonal complement of N_+ and maps N_+ into itself.
KernelOperator p12(const ExtensionRealization& ext1,
                   const ExtensionRealization& ext2, Complex z);

/// The self-adjoint angle operator of an extension pair, defined through
/// C_{S2} C_{S1}^{-1}|_{N_+} = -exp(-2i alpha). Matrices are expressed in
/// the model's fixed orthonormal N_+ basis; eigenphases of the unitary are
/// taken in (-pi, pi] and halved into (-pi/2, pi/2].
struct AlphaOperator {
  ComplexMatrix restricted_unitary;  ///< C_{S2} C_{S1}^{-1} on N_+
  ComplexMatrix eigvecs;             ///< unitary eigenbasis (columns)
  RealVector angles;                 ///< alpha eigenvalues in (-pi/2, pi/2]
  std::string branch_note;

  ComplexMatrix matrix() const;                 ///< Hermitian alpha
  ComplexMatrix apply(double (*f)(double)) const;
  ComplexMatrix tan_matrix() const;
  ComplexMatrix cos_matrix() const;
  ComplexMatrix sin_matrix() const;
  ComplexMatrix exp_i(double scale) const;      ///< exp(i * scale * alpha)
  double unitary_defect() const;
};

AlphaOperator alpha_of_pair(const ExtensionRealization& ext1,
                            const ExtensionRealization& ext2);

struct MOperatorSample {
  Complex z;
  ComplexMatrix matrix;  ///< r' x r' in the supplied orthonormal basis of N
};

/// M(z) = z I_N + (1 + z^2) P_N (S - z)^{-1} P_N |_N, the operator-valued
/// Herglotz function of the pair (extension, N), N a subspace of N_+.
MOperatorSample donoghue_m(const ExtensionRealization& ext,
                           const SubspaceBasis& n_basis, Complex z);

/// M2(z) = e^{-ia}[cos(a) + sin(a) M1(z)][sin(a) - cos(a) M1(z)]^{-1} e^{ia}.
/// Throws when the bracket is singular, naming the offending z.
MOperatorSample lft_transform(const MOperatorSample& m1,
                              const AlphaOperator& alpha,
                              double* condition = nullptr);

/// Spectral-measure data of M: jumps (1+l^2) P_N E({l}) P_N at the
/// eigenvalues of the extension.
struct SpectralMeasure {
  RealVector locations;
  std::vector<ComplexMatrix> jumps;
  double normalization_defect = 0.0;  ///< || sum jumps/(1+l^2) - I ||
  double min_jump_eigenvalue = 0.0;
};

SpectralMeasure spectral_measure(const ExtensionRealization& ext,
                                 const SubspaceBasis& n_basis);

struct HerglotzReport {
  double normalization_defect = 0.0;
  std::vector<std::pair<Complex, double>> reconstruction_defects;
  double total_mass_fine = 0.0;    ///< trace mass at the model resolution
  double total_mass_coarse = 0.0;  ///< same at half resolution
  double mass_growth() const {
    return total_mass_coarse > 0 ? total_mass_fine / total_mass_coarse : 0.0;
  }
};

/// Rebuilds M from the spectral measure and reports the defects; the mass
/// comparison across two grid sizes is the divergence proxy for the
/// infinite total measure of the continuum limit.
HerglotzReport herglotz_rep_check(const ExtensionRealization& ext,
                                  const SubspaceBasis& n_basis,
                                  const std::vector<Complex>& z_samples);

enum class BoundaryMode { FriedrichsTest, KreinTest };

struct BoundaryDiagnostic {
  std::vector<double> lambdas;
  std::vector<double> values;      ///< (u+, M(lambda) u+)
  bool monotone = false;           ///< strictly in the mode's direction
  bool diverged = false;           ///< crossed the +-50 threshold
  bool bounded = false;            ///< stayed within +-50 on the whole ladder
  double final_value = 0.0;
  // partial sums at two truncations: sum l_k |<u+, e_k>|^2 and the
  // reciprocal-weighted analog over the positive spectrum
  double sum_up_fine = 0.0, sum_up_coarse = 0.0;
  double sum_down_fine = 0.0, sum_down_coarse = 0.0;
};

/// Classifies an extension against the hard/soft endpoints by the boundary
/// behavior of (u+, M(lambda) u+) along a ladder of real lambda.
BoundaryDiagnostic boundary_behavior(const ExtensionRealization& ext,
                                     const SubspaceBasis& n_basis,
                                     BoundaryMode mode,
                                     bool with_partial_sums = true);

}  // namespace kreinkit::moperator
