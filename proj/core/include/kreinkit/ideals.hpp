#pragma once

#include <array>
#include <string>
#include <vector>

#include "kreinkit/extensions.hpp"

namespace kreinkit::ideals {

using models::Model;
using numlin::KernelOperator;
using numlin::RealVector;

/// Spectral counting values mu_j (nondecreasing). With `invert`, the input
/// must be PSD and the counts are reciprocals of its positive eigenvalues in
/// descending order (counting for the inverse operator on its range).
struct SpectralCounts {
  RealVector mu;
  std::string source;
};

SpectralCounts spectral_counts(const KernelOperator& k, int jmax, bool invert,
                               std::string source = {});

struct EigenInequalityReport {
  RealVector mu_friedrichs;
  RealVector mu_reduced_krein;
  double epsilon = 0.0;
  bool holds = false;
  double max_violation = 0.0;  ///< most negative slack, 0 when clean
};

/// epsilon <= mu_{F,j} <= mu_{K^,j} within 1e-4 relative tolerance.
EigenInequalityReport eigen_inequality_check(const Model& model, int jmax);

struct SchattenReport {
  double p = 0.0;
  double reduced_inverse_norm = 0.0;        ///< (i)  ||(S_K^)^{-1}||_p
  double compressed_inverse_norm = 0.0;     ///< (ii) ||(I-P)G(I-P)||_p
  double halfpower_left_norm = 0.0;         ///< (iii) ||(I-P)G^{1/2}||_{2p}
  double halfpower_right_norm = 0.0;        ///< (iv)  ||G^{1/2}(I-P)||_{2p}
  double i_vs_ii = 0.0;                     ///< |(i)-(ii)|
  double iii_vs_iv = 0.0;                   ///< |(iii)-(iv)|
  double iii_sq_vs_ii = 0.0;                ///< |(iii)^2-(ii)| / (ii)
};

/// The four equivalent trace-ideal quantities built from the hard-extension
/// inverse and the kernel projector, with their pairwise consistency.
SchattenReport schatten_equivalence_suite(const Model& model, double p);

/// Same suite across several exponents with the spectra computed once.
std::vector<SchattenReport> schatten_equivalence_sweep(
    const Model& model, const std::vector<double>& p_values);

struct BlockDecomposition {
  KernelOperator pp, pq, qp, qq;   ///< P G P, P G (I-P), (I-P) G P, (I-P) G (I-P)
  double reconstruction_defect = 0.0;
  double adjoint_defect = 0.0;     ///< off-diagonal blocks as mutual adjoints
  std::array<double, 4> schatten_p2{};
};

/// 2x2 block decomposition of (S_F)^{-1} against ker(S*) + its complement.
BlockDecomposition block_decompose(const Model& model);

struct CompactnessReport {
  RealVector sigma_reduced;   ///< singular values of the reduced inverse
  RealVector sigma_green;     ///< singular values of (S_F)^{-1}
  bool dominated = false;     ///< sigma_reduced(j) <= sigma_green(j), j <= jmax
  int jmax = 0;
  double reduced_norm_p = 0.0;
  double green_norm_p = 0.0;
};

/// Singular-value domination sigma_j((S_K^)^{-1}) <= sigma_j((S_F)^{-1}):
/// the transfer of trace-ideal membership from hard to reduced-soft inverse.
CompactnessReport compactness_transfer_check(const Model& model, double p,
                                             int jmax = 10);

}  // namespace kreinkit::ideals
