#include <benchmark/benchmark.h>

#include <kreinkit/extensions.hpp>
#include <kreinkit/kreinformula.hpp>
#include <kreinkit/moperator.hpp>

using namespace kreinkit;
using namespace kreinkit::numlin;

static void ResolventApply(benchmark::State& state) {
  const auto n = state.range(0);
  auto m = models::interval_laplacian(n);
  extensions::ExtensionRealization soft(m, extensions::ExtensionSpec::krein());
  ComplexVector f = ComplexVector::Ones(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft.apply_resolvent(Complex(-1.0, 0.5), f));
  }
  state.SetComplexityN(n);
}
BENCHMARK(ResolventApply)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

static void ResolventDense(benchmark::State& state) {
  const auto n = state.range(0);
  auto m = models::interval_laplacian(n);
  extensions::ExtensionRealization soft(m, extensions::ExtensionSpec::krein());
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft.resolvent_dense(Complex(-1.0, 0.0)));
  }
}
BENCHMARK(ResolventDense)->Arg(512)->Arg(1024)->Arg(2048);

static void HermitianEig(benchmark::State& state) {
  const auto n = state.range(0);
  auto m = models::interval_laplacian(n);
  auto green = models::friedrichs_green(*m, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hermitian_eigenvalues(green));
  }
}
BENCHMARK(HermitianEig)->Arg(512)->Arg(1024);

static void OperatorFunctionSample(benchmark::State& state) {
  auto m = models::interval_laplacian(state.range(0));
  extensions::ExtensionRealization hard(m,
                                        extensions::ExtensionSpec::friedrichs());
  const auto& np = m->nplus_basis();
  // warm the cached spectrum so the loop times the sampling itself
  benchmark::DoNotOptimize(moperator::donoghue_m(hard, np, Complex(1.0, 2.0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        moperator::donoghue_m(hard, np, Complex(1.0, 2.0)));
  }
}
BENCHMARK(OperatorFunctionSample)->Arg(1024)->Arg(2048);

static void SoftResolventFormula(benchmark::State& state) {
  auto m = models::interval_laplacian(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kreinformula::krein_fk_rhs(*m, Complex(-1.0, 0.0)));
  }
}
BENCHMARK(SoftResolventFormula)->Arg(512)->Arg(1024);

BENCHMARK_MAIN();
