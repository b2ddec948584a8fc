// Microbenchmarks for the hot paths: the exact circuit oracle, the closed
// forms, protocol simulation, and the fringe fit.

#include <benchmark/benchmark.h>

#include <vector>

#include "qle/analytic.hpp"
#include "qle/classical.hpp"
#include "qle/experiment.hpp"
#include "qle/fock.hpp"
#include "qle/protocol.hpp"

namespace {

const qle::OpticsParams kReference{0.8, 0.845, 0.0};

void BM_CircuitOracle(benchmark::State& state) {
  for (auto _ : state) {
    auto dist = qle::outcome_distribution(kReference);
    benchmark::DoNotOptimize(dist);
  }
}
BENCHMARK(BM_CircuitOracle);

void BM_ClosedForm(benchmark::State& state) {
  for (auto _ : state) {
    auto probs = qle::pattern_probabilities(kReference);
    benchmark::DoNotOptimize(probs);
  }
}
BENCHMARK(BM_ClosedForm);

void BM_ProtocolElection(benchmark::State& state) {
  const auto dist = qle::pattern_probabilities(kReference).as_distribution();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto ledger = qle::run_protocol_with(dist, qle::kDefaultMaxTrials, seed++);
    benchmark::DoNotOptimize(ledger);
  }
}
BENCHMARK(BM_ProtocolElection);

void BM_ClassicalElection(benchmark::State& state) {
  qle::ClassicalParams params;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto ledger =
        qle::simulate_classical(params, qle::kDefaultMaxTrials, seed++);
    benchmark::DoNotOptimize(ledger);
  }
}
BENCHMARK(BM_ClassicalElection);

void BM_FringeGenerate(benchmark::State& state) {
  std::vector<double> grid(40);
  for (int i = 0; i < 40; ++i) {
    grid[static_cast<std::size_t>(i)] =
        4.0 * 3.14159265358979323846 * static_cast<double>(i) / 39.0;
  }
  qle::OpticsParams base;
  base.nu = 0.845;
  qle::FringeOptions options;
  options.events_per_point = 10000;
  for (auto _ : state) {
    auto scan = qle::generate_fringe(base, grid, options);
    benchmark::DoNotOptimize(scan);
    ++options.seed;
  }
}
BENCHMARK(BM_FringeGenerate);

void BM_FringeFit(benchmark::State& state) {
  std::vector<double> grid(40);
  for (int i = 0; i < 40; ++i) {
    grid[static_cast<std::size_t>(i)] =
        4.0 * 3.14159265358979323846 * static_cast<double>(i) / 39.0;
  }
  qle::OpticsParams base;
  base.nu = 0.845;
  qle::FringeOptions options;
  options.events_per_point = 10000;
  options.seed = 7;
  const auto scan = qle::generate_fringe(base, grid, options);
  for (auto _ : state) {
    auto fit = qle::fit_visibility(scan);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(BM_FringeFit);

}  // namespace

BENCHMARK_MAIN();
