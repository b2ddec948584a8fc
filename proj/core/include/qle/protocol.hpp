#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qle/fock.hpp"
#include "qle/params.hpp"

namespace qle {

enum class Leader { alice, bob, none };

const char* to_string(Leader l);
Leader mirror(Leader l);

/// Outcome classes for a post-selected two-photon round:
///  - double_detection: both photons on one detector; that party leads and
///    no classical message is needed.
///  - same_party: one photon on each of one party's detectors; same result.
///  - cross_success: A1&B2 or A2&B1; the party whose port-1 detector fired
///    leads, announced with a two-bit classical exchange.
///  - cross_failure: A1&B1 or A2&B2; two classical bits to agree on a retry.
enum class OutcomeKind {
  double_detection,
  same_party,
  cross_success,
  cross_failure
};

const char* to_string(OutcomeKind k);

struct OutcomeClass {
  OutcomeKind kind;
  Leader leader;  // none for cross_failure
};

OutcomeClass classify(const DetectionPattern& pattern);

struct TrialResult {
  OutcomeClass outcome;
  int qubits_sent = 2;          // one photon each way, every round
  int classical_bits_sent = 0;  // 0 or 2
  int trial_index = 0;          // 1-based
};

struct CostLedger {
  std::uint64_t total_qubits = 0;
  std::uint64_t total_classical_bits = 0;
  std::uint64_t trials = 0;
  Leader elected = Leader::none;

  std::uint64_t total_communication() const {
    return total_qubits + total_classical_bits;
  }
};

inline constexpr int kDefaultMaxTrials = 10000;

/// Repeat rounds drawn from the given click distribution until a leader is
/// elected or max_trials is exhausted, accumulating communication cost.
CostLedger run_protocol_with(const PatternDistribution& dist, int max_trials,
                             std::uint64_t seed);

/// As run_protocol_with, but keeping the per-trial record.
struct ProtocolRun {
  CostLedger ledger;
  std::vector<TrialResult> trials;
};
ProtocolRun run_protocol_trace(const PatternDistribution& dist, int max_trials,
                               std::uint64_t seed);

CostLedger run_protocol(const OpticsParams& params,
                        int max_trials = kDefaultMaxTrials,
                        std::uint64_t seed = 0);

/// Mean total communication cost to elect a leader with unbounded retries:
/// (2 p2 + 4 p1 + 4 (1 - p)) / p with p = p2 + p1.  Equals 3 at
/// (gamma, nu) = (1, 1) and 4 at (1, 0).
double expected_cost(const OpticsParams& params);

/// expected_cost along a grid of nu values at fixed gamma.
std::vector<std::pair<double, double>> cost_curve(double gamma,
                                                  std::span<const double> nus);

}  // namespace qle
