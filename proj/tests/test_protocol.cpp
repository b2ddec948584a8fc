#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qle/analytic.hpp"
#include "qle/protocol.hpp"

using namespace qle;

TEST_CASE("pattern classification covers all ten outcomes") {
  CHECK(classify(double_click(Detector::A1)).kind ==
        OutcomeKind::double_detection);
  CHECK(classify(double_click(Detector::A1)).leader == Leader::alice);
  CHECK(classify(double_click(Detector::A2)).leader == Leader::alice);
  CHECK(classify(double_click(Detector::B1)).leader == Leader::bob);
  CHECK(classify(double_click(Detector::B2)).leader == Leader::bob);

  const auto same_a = classify(coincidence_click(Detector::A1, Detector::A2));
  CHECK(same_a.kind == OutcomeKind::same_party);
  CHECK(same_a.leader == Leader::alice);
  const auto same_b = classify(coincidence_click(Detector::B1, Detector::B2));
  CHECK(same_b.kind == OutcomeKind::same_party);
  CHECK(same_b.leader == Leader::bob);

  const auto win_a = classify(coincidence_click(Detector::A1, Detector::B2));
  CHECK(win_a.kind == OutcomeKind::cross_success);
  CHECK(win_a.leader == Leader::alice);
  const auto win_b = classify(coincidence_click(Detector::A2, Detector::B1));
  CHECK(win_b.kind == OutcomeKind::cross_success);
  CHECK(win_b.leader == Leader::bob);

  const auto fail_1 = classify(coincidence_click(Detector::A1, Detector::B1));
  CHECK(fail_1.kind == OutcomeKind::cross_failure);
  CHECK(fail_1.leader == Leader::none);
  const auto fail_2 = classify(coincidence_click(Detector::A2, Detector::B2));
  CHECK(fail_2.kind == OutcomeKind::cross_failure);
  CHECK(fail_2.leader == Leader::none);
}

TEST_CASE("classification is symmetric under relabeling the parties") {
  std::vector<DetectionPattern> patterns;
  for (auto d : kDetectors) patterns.push_back(double_click(d));
  for (const auto& [a, b] : kDetectorPairs) {
    patterns.push_back(coincidence_click(a, b));
  }
  for (const auto& pattern : patterns) {
    const auto direct = classify(pattern);
    const auto swapped = classify(mirror(pattern));
    CHECK(swapped.kind == direct.kind);
    CHECK(swapped.leader == mirror(direct.leader));
  }
}

TEST_CASE("classification rejects patterns without exactly two photons") {
  DetectionPattern one;
  one.counts[0] = 1;
  CHECK_THROWS_AS(classify(one), std::invalid_argument);
  DetectionPattern three;
  three.counts[0] = 2;
  three.counts[2] = 1;
  CHECK_THROWS_AS(classify(three), std::invalid_argument);
}

TEST_CASE("a protocol run ends with a leader and consistent accounting") {
  OpticsParams params{0.8, 0.845, 0.0};
  const auto run = run_protocol_trace(
      pattern_probabilities(params).as_distribution(), kDefaultMaxTrials, 11);
  CHECK(!run.trials.empty());
  CHECK(run.ledger.trials == static_cast<int>(run.trials.size()));
  CHECK(run.ledger.elected != Leader::none);

  long long qubits = 0;
  long long bits = 0;
  for (const auto& trial : run.trials) {
    qubits += trial.qubits_sent;
    bits += trial.classical_bits_sent;
    CHECK(trial.qubits_sent == 2);
    const bool cross = trial.outcome.kind == OutcomeKind::cross_success ||
                       trial.outcome.kind == OutcomeKind::cross_failure;
    CHECK(trial.classical_bits_sent == (cross ? 2 : 0));
  }
  CHECK(run.ledger.total_qubits == qubits);
  CHECK(run.ledger.total_classical_bits == bits);
  CHECK(run.ledger.total_communication() == qubits + bits);

  // Every attempt before the last must have failed to elect.
  for (std::size_t i = 0; i + 1 < run.trials.size(); ++i) {
    CHECK(run.trials[i].outcome.kind == OutcomeKind::cross_failure);
  }
  CHECK(run.trials.back().outcome.leader == run.ledger.elected);
}

TEST_CASE("protocol runs are reproducible per seed") {
  OpticsParams params{0.8, 0.845, 0.0};
  const auto dist = pattern_probabilities(params).as_distribution();
  const auto a = run_protocol_with(dist, kDefaultMaxTrials, 5);
  const auto b = run_protocol_with(dist, kDefaultMaxTrials, 5);
  CHECK(a.total_qubits == b.total_qubits);
  CHECK(a.total_classical_bits == b.total_classical_bits);
  CHECK(a.trials == b.trials);
  CHECK(a.elected == b.elected);
}

TEST_CASE("a guaranteed-failure distribution exhausts max_trials") {
  PatternDistribution dist;
  dist[coincidence_click(Detector::A1, Detector::B1)] = 1.0;
  const auto ledger = run_protocol_with(dist, 25, 0);
  CHECK(ledger.trials == 25);
  CHECK(ledger.elected == Leader::none);
  CHECK(ledger.total_qubits == 50);
  CHECK(ledger.total_classical_bits == 50);
}

TEST_CASE("run_protocol_with validates its inputs") {
  PatternDistribution dist;
  dist[double_click(Detector::A1)] = 0.5;
  CHECK_THROWS_AS(run_protocol_with(dist, 10, 0), std::invalid_argument);
  dist[double_click(Detector::A2)] = 0.5;
  CHECK_THROWS_AS(run_protocol_with(dist, 0, 0), std::invalid_argument);
}

TEST_CASE("expected cost endpoints") {
  OpticsParams ideal{1.0, 1.0, 0.0};
  CHECK(std::abs(expected_cost(ideal) - 3.0) < 1e-12);
  OpticsParams distinguishable{1.0, 0.0, 0.0};
  CHECK(std::abs(expected_cost(distinguishable) - 4.0) < 1e-12);
  OpticsParams experiment{0.8, 0.845, 0.0};
  CHECK(expected_cost(experiment) == doctest::Approx(3.171375).epsilon(1e-5));
}

TEST_CASE("expected cost agrees with per-class accounting") {
  for (double gamma : {0.5, 0.8, 1.0, 1.3}) {
    for (double nu : {0.0, 0.4, 0.845, 1.0}) {
      OpticsParams params{gamma, nu, 0.0};
      const double p2 = p2_suc(params);
      const double p1 = p1_suc(params);
      const double p = p_suc(params);
      const double direct = (2.0 * p2 + 4.0 * p1 + 4.0 * (1.0 - p)) / p;
      CHECK(expected_cost(params) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("expected cost falls as photons become more alike") {
  for (double gamma : {0.6, 0.8, 1.0}) {
    double previous = 1e9;
    for (double nu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      OpticsParams params{gamma, nu, 0.0};
      const double cost = expected_cost(params);
      CHECK(cost < previous);
      previous = cost;
    }
  }
}

TEST_CASE("cost curve matches the pointwise closed form") {
  const std::vector<double> nus = {0.0, 0.3, 0.845, 1.0};
  const auto curve = cost_curve(0.8, nus);
  REQUIRE(curve.size() == nus.size());
  for (std::size_t i = 0; i < nus.size(); ++i) {
    CHECK(curve[i].first == doctest::Approx(nus[i]));
    OpticsParams params{0.8, nus[i], 0.0};
    CHECK(curve[i].second ==
          doctest::Approx(expected_cost(params)).epsilon(1e-12));
  }
}

TEST_CASE("Monte Carlo mean cost approaches the closed form") {
  OpticsParams params{0.8, 0.845, 0.0};
  const auto dist = pattern_probabilities(params).as_distribution();
  const int runs = 20000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < runs; ++i) {
    const auto ledger =
        run_protocol_with(dist, kDefaultMaxTrials,
                          static_cast<std::uint64_t>(i));
    const double cost = static_cast<double>(ledger.total_communication());
    sum += cost;
    sum_sq += cost * cost;
    CHECK(ledger.elected != Leader::none);
  }
  const double mean = sum / runs;
  const double var = (sum_sq - sum * sum / runs) / (runs - 1);
  const double se = std::sqrt(var / runs);
  CHECK(std::abs(mean - expected_cost(params)) < 5.0 * se);
}

TEST_CASE("leader labels swap cleanly") {
  CHECK(mirror(Leader::alice) == Leader::bob);
  CHECK(mirror(Leader::bob) == Leader::alice);
  CHECK(mirror(Leader::none) == Leader::none);
  CHECK(std::string(to_string(Leader::alice)) == "alice");
  CHECK(std::string(to_string(OutcomeKind::cross_failure)) == "cross_failure");
}
