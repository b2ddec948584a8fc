#pragma once

#include <cstdint>

#include "qle/protocol.hpp"

namespace qle {

/// One round of the classical protocol: each party draws n independent
/// biased bits (P(1) = p_one), both send their strings (2n bits total), and
/// the larger n-bit value, most significant bit first, wins.  Equal strings
/// mean a retry.
struct ClassicalParams {
  int bits_per_round = 1;
  double p_one = 0.5;

  void validate() const;
};

/// Single-round success probability 1 - (2p^2 - 2p + 1)^n.
double classical_success_prob(int bits_per_round, double p_one);

/// The bias maximizing the success probability for any n: 1/2.
double optimal_p(int bits_per_round);

/// Mean bits exchanged until a round breaks the tie, at the optimal bias:
/// 2n / (1 - 2^-n).  Minimized at n = 1, where it equals 4.
double expected_classical_cost(int bits_per_round);

CostLedger simulate_classical(const ClassicalParams& params,
                              int max_rounds = kDefaultMaxTrials,
                              std::uint64_t seed = 0);

}  // namespace qle
