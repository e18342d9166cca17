#include "lapack_wrap.hpp"

#include <complex>

#define lapack_complex_double std::complex<double>
#define lapack_complex_float std::complex<float>
#include <lapacke.h>

namespace kreinkit::detail {

SymmetricEigen eigh(const Eigen::MatrixXd& a, bool with_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  SymmetricEigen out;
  out.vectors = a;
  out.values.resize(n);
  const int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', n,
                     out.vectors.data(), n, out.values.data());
  if (info != 0) throw std::runtime_error("dsyevd failed, info=" + std::to_string(info));
  if (!with_vectors) out.vectors.resize(0, 0);
  return out;
}

HermitianEigen eigh(const Eigen::MatrixXcd& a, bool with_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  HermitianEigen out;
  out.vectors = a;
  out.values.resize(n);
  const int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L', n,
                     out.vectors.data(), n, out.values.data());
  if (info != 0) throw std::runtime_error("zheevd failed, info=" + std::to_string(info));
  if (!with_vectors) out.vectors.resize(0, 0);
  return out;
}

Eigen::VectorXd svdvals(const Eigen::MatrixXcd& a) {
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  Eigen::MatrixXcd work = a;
  Eigen::VectorXd s(std::min(m, n));
  Eigen::VectorXd superb(std::max<lapack_int>(1, std::min(m, n) - 1));
  const int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', 'N', m, n, work.data(),
                                  m, s.data(), nullptr, 1, nullptr, 1,
                                  superb.data());
  if (info != 0) throw std::runtime_error("zgesvd failed, info=" + std::to_string(info));
  return s;
}

}  // namespace kreinkit::detail
