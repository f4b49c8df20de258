// Microbenchmarks for the hot paths: spectral value measurement, success
// operator assembly, the flooding prepare step, and trace distance.  These
// exist to catch regressions in the exact linear algebra, not to model a
// production workload.

#include <benchmark/benchmark.h>

#include "parrep/memoryless.hpp"
#include "parrep/protocols.hpp"

namespace {

using namespace parrep;

Mat random_hermitian_contraction(int dim, SplitRng& rng) {
  Mat a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
  Mat h = (a + a.adjoint()) / 2.0;
  const double scale = h.cwiseAbs().sum();
  return Mat::Identity(dim, dim) / 2.0 + h / (2.0 * (scale + 1.0));
}

Vec random_amp(int dim, SplitRng& rng) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
  return v / v.norm();
}

void bm_valest_sample(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const RegisterLayout layout{{"x", dim}};
  SplitRng rng(1);
  const ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, random_hermitian_contraction(dim, rng));
  const ValueMeasurement vm = fam.at(0.05, 0.01);
  const QuantumState psi = QuantumState::pure(layout, random_amp(dim, rng));
  for (auto _ : state) {
    SplitRng r = rng.split(1);
    benchmark::DoNotOptimize(vm.sample(psi, r));
  }
}
BENCHMARK(bm_valest_sample)->Arg(8)->Arg(16)->Arg(32);

void bm_success_operator(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const RepeatedProtocol rp = repeat(subset_game(4, 3), k, k);
  const ProverStrategy prover =
      deterministic_prover(rp, [](int, const std::vector<int>&, int) { return 0; });
  const Transcript empty{k, {}, {}, false, {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(residual_operator(rp, prover, empty));
  }
}
BENCHMARK(bm_success_operator)->Arg(2)->Arg(3);

void bm_prepare(benchmark::State& state) {
  const RegisterLayout layout{{"x", 4}};
  SplitRng rng(2);
  const ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, random_hermitian_contraction(4, rng));
  const ProjectionFamily projections = ProjectionFamily::enumerated(
      layout, {Pvm::binary(Projector::onto_vector(layout, random_amp(4, rng))),
               Pvm::binary(Projector::onto_vector(layout, random_amp(4, rng)))});
  const FloodingParams fp = FloodingParams::with_override(0.1, 0.05, 0.5, 2, 8);
  const QuantumState psi = QuantumState::pure(layout, random_amp(4, rng));
  for (auto _ : state) {
    SplitRng r = rng.split(3);
    benchmark::DoNotOptimize(prepare(fam, projections, psi, fp, r));
  }
}
BENCHMARK(bm_prepare);

void bm_trace_distance(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const RegisterLayout layout{{"x", dim}};
  SplitRng rng(3);
  const QuantumState a = QuantumState::pure(layout, random_amp(dim, rng));
  const QuantumState b = QuantumState::pure(layout, random_amp(dim, rng));
  for (auto _ : state) benchmark::DoNotOptimize(trace_distance(a, b));
}
BENCHMARK(bm_trace_distance)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
