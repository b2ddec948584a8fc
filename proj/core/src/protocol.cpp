#include "qle/protocol.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qle/analytic.hpp"
#include "rng.hpp"

namespace qle {

const char* to_string(Leader l) {
  switch (l) {
    case Leader::alice: return "alice";
    case Leader::bob: return "bob";
    case Leader::none: return "none";
  }
  return "?";
}

Leader mirror(Leader l) {
  switch (l) {
    case Leader::alice: return Leader::bob;
    case Leader::bob: return Leader::alice;
    case Leader::none: return Leader::none;
  }
  return Leader::none;
}

const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::double_detection: return "double_detection";
    case OutcomeKind::same_party: return "same_party";
    case OutcomeKind::cross_success: return "cross_success";
    case OutcomeKind::cross_failure: return "cross_failure";
  }
  return "?";
}

OutcomeClass classify(const DetectionPattern& pattern) {
  if (pattern.total() != 2) {
    throw std::invalid_argument(
        "classify: pattern must account for exactly two photons");
  }
  for (auto d : kDetectors) {
    if (pattern.at(d) == 2) {
      // Both photons at one detector: only the owner of that detector can
      // tell; they win and nothing needs to be sent.
      const bool alice_side = (d == Detector::A1 || d == Detector::A2);
      return {OutcomeKind::double_detection,
              alice_side ? Leader::alice : Leader::bob};
    }
  }
  const bool a1 = pattern.at(Detector::A1) == 1;
  const bool a2 = pattern.at(Detector::A2) == 1;
  const bool b1 = pattern.at(Detector::B1) == 1;
  const bool b2 = pattern.at(Detector::B2) == 1;
  if (a1 && a2) return {OutcomeKind::same_party, Leader::alice};
  if (b1 && b2) return {OutcomeKind::same_party, Leader::bob};
  // One click on each side: both parties announce which of their two
  // detectors fired (two classical bits in total).
  if (a1 && b2) return {OutcomeKind::cross_success, Leader::alice};
  if (a2 && b1) return {OutcomeKind::cross_success, Leader::bob};
  // a1 && b1 or a2 && b2: symmetric coincidence, no winner, try again.
  return {OutcomeKind::cross_failure, Leader::none};
}

namespace {

struct FlatDistribution {
  std::vector<DetectionPattern> patterns;
  std::vector<double> cdf;
};

FlatDistribution flatten(const PatternDistribution& dist) {
  FlatDistribution flat;
  flat.patterns.reserve(dist.size());
  flat.cdf.reserve(dist.size());
  double acc = 0.0;
  for (const auto& [pattern, prob] : dist) {
    if (prob < -1e-12) {
      throw std::invalid_argument("protocol: negative pattern probability");
    }
    acc += std::max(prob, 0.0);
    flat.patterns.push_back(pattern);
    flat.cdf.push_back(acc);
  }
  if (flat.patterns.empty() || std::abs(acc - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "protocol: pattern probabilities must sum to one");
  }
  flat.cdf.back() = 1.0;
  return flat;
}

const DetectionPattern& draw(const FlatDistribution& flat,
                             std::mt19937_64& engine) {
  const double u = detail::canonical(engine);
  auto it = std::lower_bound(flat.cdf.begin(), flat.cdf.end(), u);
  if (it == flat.cdf.end()) --it;
  return flat.patterns[static_cast<std::size_t>(it - flat.cdf.begin())];
}

}  // namespace

ProtocolRun run_protocol_trace(const PatternDistribution& dist,
                               int max_trials, std::uint64_t seed) {
  if (max_trials < 1) {
    throw std::invalid_argument("run_protocol_trace: max_trials must be >= 1");
  }
  const FlatDistribution flat = flatten(dist);
  auto engine = detail::make_engine(seed);

  ProtocolRun run;
  run.trials.reserve(8);
  for (int t = 0; t < max_trials; ++t) {
    const DetectionPattern& pattern = draw(flat, engine);
    TrialResult trial;
    trial.trial_index = t;
    trial.outcome = classify(pattern);
    trial.qubits_sent = 2;  // one photonic qubit each way per attempt
    switch (trial.outcome.kind) {
      case OutcomeKind::double_detection:
      case OutcomeKind::same_party:
        trial.classical_bits_sent = 0;
        break;
      case OutcomeKind::cross_success:
      case OutcomeKind::cross_failure:
        trial.classical_bits_sent = 2;
        break;
    }
    run.ledger.total_qubits += trial.qubits_sent;
    run.ledger.total_classical_bits += trial.classical_bits_sent;
    run.ledger.trials += 1;
    run.trials.push_back(trial);
    if (trial.outcome.leader != Leader::none) {
      run.ledger.elected = trial.outcome.leader;
      break;
    }
  }
  return run;
}

CostLedger run_protocol_with(const PatternDistribution& dist, int max_trials,
                             std::uint64_t seed) {
  return run_protocol_trace(dist, max_trials, seed).ledger;
}

CostLedger run_protocol(const OpticsParams& params, int max_trials,
                        std::uint64_t seed) {
  const PatternDistribution dist =
      pattern_probabilities(params).as_distribution();
  return run_protocol_with(dist, max_trials, seed);
}

double expected_cost(const OpticsParams& params) {
  const double p2 = p2_suc(params);
  const double p = p_suc(params);
  if (!(p > 0.0)) {
    throw std::invalid_argument("expected_cost: success probability is zero");
  }
  // Per attempt: 2 qubits always; 2 classical bits whenever one photon lands
  // on each side.  Doubles and same-party events decide silently, successful
  // cross events decide after the announcement, and failed attempts carry
  // their 4 units into the next round.  Geometric accounting gives
  //   E[cost] = (2 P2 + 4 P1 + 4 (1 - P)) / P = (4 - 2 P2) / P.
  return (4.0 - 2.0 * p2) / p;
}

std::vector<std::pair<double, double>> cost_curve(
    double gamma, std::span<const double> nus) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(nus.size());
  for (double nu : nus) {
    OpticsParams params;
    params.gamma = gamma;
    params.nu = nu;
    curve.emplace_back(nu, expected_cost(params));
  }
  return curve;
}

}  // namespace qle
