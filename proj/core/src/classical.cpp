#include "qle/classical.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace qle {

void ClassicalParams::validate() const {
  if (bits_per_round < 1) {
    throw std::invalid_argument(
        "ClassicalParams: bits_per_round must be >= 1");
  }
  if (!(p_one > 0.0 && p_one < 1.0)) {
    throw std::invalid_argument(
        "ClassicalParams: p_one must lie in (0, 1)");
  }
}

double classical_success_prob(int bits_per_round, double p_one) {
  ClassicalParams params{bits_per_round, p_one};
  params.validate();
  // A round ties exactly when every bit pair matches; each pair matches with
  // probability p^2 + (1-p)^2.
  const double match = p_one * p_one + (1.0 - p_one) * (1.0 - p_one);
  return 1.0 - std::pow(match, bits_per_round);
}

double optimal_p(int bits_per_round) {
  ClassicalParams params{bits_per_round, 0.5};
  params.validate();
  // The per-bit match probability 2p^2 - 2p + 1 is minimized at p = 1/2 for
  // any round length, so the fair coin is always optimal.
  return 0.5;
}

double expected_classical_cost(int bits_per_round) {
  const double p = classical_success_prob(bits_per_round, 0.5);
  // Both parties send their strings every round; rounds are geometric.
  return 2.0 * bits_per_round / p;
}

CostLedger simulate_classical(const ClassicalParams& params, int max_rounds,
                              std::uint64_t seed) {
  params.validate();
  if (max_rounds < 1) {
    throw std::invalid_argument("simulate_classical: max_rounds must be >= 1");
  }
  // Independent per-party streams so each party's coin flips do not depend
  // on what the other drew.
  auto alice = detail::make_engine(seed, 1);
  auto bob = detail::make_engine(seed, 2);
  const int n = params.bits_per_round;

  CostLedger ledger;
  std::vector<std::uint8_t> a_bits(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> b_bits(static_cast<std::size_t>(n));
  for (int round = 0; round < max_rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      a_bits[static_cast<std::size_t>(i)] =
          detail::canonical(alice) < params.p_one ? 1 : 0;
      b_bits[static_cast<std::size_t>(i)] =
          detail::canonical(bob) < params.p_one ? 1 : 0;
    }
    ledger.total_classical_bits += 2 * n;
    ledger.trials += 1;
    // First bit drawn is the most significant; the larger string wins.
    if (a_bits != b_bits) {
      ledger.elected = a_bits > b_bits ? Leader::alice : Leader::bob;
      break;
    }
  }
  return ledger;
}

}  // namespace qle
