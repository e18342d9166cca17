#include <doctest.h>

#include <kreinkit/ideals.hpp>

#include <cmath>

#include "oracles.hpp"

using namespace kreinkit;
using namespace kreinkit::numlin;

TEST_CASE("spectral counting") {
  auto sp = make_grid_space(0.0, 1.0, 16);
  const Eigen::Index n = sp->size();
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = static_cast<double>(16 - i);
  KernelOperator kd(sp, d, true);
  const auto counts = ideals::spectral_counts(kd, 2, false);
  CHECK(counts.mu(0) == doctest::Approx(1.0));
  CHECK(counts.mu(1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(ideals::spectral_counts(kd, 200, false),
                  std::invalid_argument);
  KernelOperator bad(sp, ComplexMatrix::Random(n, n), false);
  CHECK_THROWS_AS(ideals::spectral_counts(bad, 2, false),
                  std::invalid_argument);

  // counts of the operator behind a PSD inverse
  auto m = models::interval_laplacian(1024);
  const auto green = models::friedrichs_green(*m, 0.0);
  const auto mu = ideals::spectral_counts(green, 10, true, "hard");
  for (int j = 1; j <= 10; ++j) {
    const double expect = j * j * M_PI * M_PI;
    CHECK(std::abs(mu.mu(j - 1) - expect) / expect < 1e-4);
  }

  const auto reduced = extensions::krein_reduced_inverse(*m);
  const auto muk = ideals::spectral_counts(reduced, 5, true, "reduced");
  const auto oracle = oracles::interval_eigenvalues(
      oracles::interval_krein_rows(), 9.0 * M_PI);
  REQUIRE(oracle.size() >= 5);
  for (int j = 0; j < 5; ++j)
    CHECK(std::abs(muk.mu(j) - oracle[static_cast<std::size_t>(j)]) /
              oracle[static_cast<std::size_t>(j)] <
          1e-4);
}

TEST_CASE("counting inequality between hard and reduced-soft spectra") {
  auto m = models::interval_laplacian(1024);
  const auto rep = ideals::eigen_inequality_check(*m, 10);
  CHECK(rep.holds);
  CHECK(rep.max_violation >= -1e-12);
  CHECK(rep.mu_friedrichs(0) == doctest::Approx(M_PI * M_PI).epsilon(1e-4));
  CHECK(rep.mu_reduced_krein(0) ==
        doctest::Approx(4 * M_PI * M_PI).epsilon(1e-4));

  auto ds = models::direct_sum({models::interval_laplacian(256),
                                models::interval_laplacian(256)});
  const auto rep2 = ideals::eigen_inequality_check(*ds, 12);
  CHECK(rep2.holds);
}

TEST_CASE("trace-ideal equivalences") {
  auto m = models::interval_laplacian(512);
  for (double p : {1.0, 2.0}) {
    const auto rep = ideals::schatten_equivalence_suite(*m, p);
    CHECK(rep.i_vs_ii <= 1e-12 * std::max(1.0, rep.reduced_inverse_norm));
    CHECK(rep.iii_sq_vs_ii <= 1e-8);
    CHECK(rep.iii_vs_iv <= 1e-8);
  }
  CHECK_THROWS_AS(ideals::schatten_equivalence_suite(*m, -1.0),
                  std::invalid_argument);

  // frozen closed-form values for the reduced inverse on the interval
  auto fine = models::interval_laplacian(2048);
  const auto reduced = extensions::krein_reduced_inverse(*fine);
  CHECK(std::abs(numlin::schatten_norm(reduced, 1.0) - oracles::reduced_trace) <
        1e-5);
  const double hs = numlin::schatten_norm(reduced, 2.0);
  CHECK(std::abs(hs * hs - oracles::reduced_hs_sq) < 1e-7);
  const auto green = models::friedrichs_green(*fine, 0.0);
  CHECK(numlin::schatten_norm(reduced, 1.0) <
        numlin::schatten_norm(green, 1.0));
}

TEST_CASE("block decomposition of the hard-extension inverse") {
  auto m = models::interval_laplacian(512);
  const auto blocks = ideals::block_decompose(*m);
  CHECK(blocks.reconstruction_defect < 1e-10);
  CHECK(blocks.adjoint_defect < 1e-10);
  const auto reduced = extensions::krein_reduced_inverse(*m);
  CHECK(numlin::operator_norm_estimate(
            ComplexMatrix(blocks.qq.matrix - reduced.matrix)) < 1e-12);
  for (double v : blocks.schatten_p2) CHECK(v >= 0.0);
}

TEST_CASE("compactness transfer by singular-value domination") {
  auto m = models::interval_laplacian(1024);
  const auto rep = ideals::compactness_transfer_check(*m, 1.0, 10);
  CHECK(rep.dominated);
  CHECK(rep.reduced_norm_p <= 1.0 / 6.0 + 1e-6);
  const auto repinf =
      ideals::compactness_transfer_check(*m, numlin::schatten_infinity, 10);
  CHECK(repinf.reduced_norm_p <= 1.0 / (M_PI * M_PI) + 1e-6);
  for (int j = 0; j < 10; ++j)
    CHECK(rep.sigma_reduced(j) <= rep.sigma_green(j) * (1.0 + 1e-10));
}

TEST_CASE("truncation convergence of the trace-ideal quantities") {
  std::vector<double> values;
  for (Eigen::Index n : {512, 1024, 2048}) {
    auto m = models::interval_laplacian(n);
    values.push_back(ideals::schatten_equivalence_suite(*m, 2.0)
                         .compressed_inverse_norm);
  }
  const double step1 = std::abs(values[1] - values[0]);
  const double step2 = std::abs(values[2] - values[1]);
  CHECK(step2 <= 4.0 * step1);
}
