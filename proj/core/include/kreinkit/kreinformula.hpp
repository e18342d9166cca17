#pragma once

#include <vector>

#include "kreinkit/moperator.hpp"

namespace kreinkit::kreinformula {

using extensions::ExtensionRealization;
using models::Model;
using models::ModelPtr;
using numlin::Complex;
using numlin::ComplexMatrix;
using numlin::ComplexVector;
using numlin::KernelOperator;
using numlin::RealVector;

/// Resolvent of ext2 assembled from ext1 data alone:
///   R1(z) + [(S1-i)R1(z)] P [tan(alpha_{1,2}) - M_{S1}(z)]^{-1} P [(S1+i)R1(z)].
/// Requires the pair to be relatively prime; throws on a singular bracket.
KernelOperator general_krein_rhs(const ExtensionRealization& ext1,
                                 const ExtensionRealization& ext2, Complex z,
                                 double* bracket_condition = nullptr);

/// Soft-extension resolvent assembled from hard-extension data:
/// the angle operator collapses to M_{S_F}(0).
KernelOperator krein_fk_rhs(const Model& model, Complex z,
                            double* bracket_condition = nullptr);

/// Hard-extension resolvent assembled from soft-extension data, bracket
/// [-M_{S_F}(0) - M_{S_K}(z)].
KernelOperator reversed_krein_rhs(const Model& model, Complex z,
                                  double* bracket_condition = nullptr);

struct LaurentReport {
  std::vector<double> z_abs;
  std::vector<double> defects;   ///< || z U_{K,z,i} u+  -  i P u+ ||, worst column
  std::vector<double> ratios;    ///< defect ratio / |z| ratio, consecutive samples
  bool linear_decay = false;     ///< all ratios within [0.8, 1.2]
  double richardson_defect = 0.0;  ///< || extrapolated z R(z) + P ||
};

/// Principal-part structure of the soft resolvent at its zero eigenvalue.
LaurentReport laurent_limit_check(const ModelPtr& model,
                                  const std::vector<Complex>& z_values);

/// (S_K - z)^{-1}(I - P) through the small-z expansion built from hard-
/// extension data, truncated at `terms` powers; at z = 0 this reproduces the
/// reduced inverse exactly.
KernelOperator small_z_series(const Model& model, Complex z, int terms);

struct IdealCheckReport {
  RealVector sigma_difference;   ///< leading singular values of R2(z)-R1(z)
  RealVector sigma_exponential;  ///< singular values of e^{2ia02}-e^{2ia01}
  int rank_difference = 0;
  int rank_exponential = 0;
  double factorization_residual = 0.0;  ///< at z = i
  double difference_norms[3] = {0, 0, 0};    ///< p = 1, 2, inf
  double exponential_norms[3] = {0, 0, 0};
};

/// Rank and trace-ideal comparison between a resolvent difference and the
/// difference of Cayley-angle exponentials, plus the exact z = i
/// factorization through the angle operators of the reference extension.
IdealCheckReport resolvent_diff_ideal_check(const ExtensionRealization& ext0,
                                            const ExtensionRealization& ext1,
                                            const ExtensionRealization& ext2,
                                            Complex z);

}  // namespace kreinkit::kreinformula
