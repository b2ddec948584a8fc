#pragma once

#include <array>
#include <utility>

#include "qle/fock.hpp"
#include "qle/params.hpp"

namespace qle {

/// The six unordered detector pairs, in the fixed order used throughout:
/// (A1,A2), (B1,B2), (A1,B1), (A2,B2), (A1,B2), (A2,B1).
inline constexpr std::array<std::pair<Detector, Detector>, 6> kDetectorPairs = {{
    {Detector::A1, Detector::A2},
    {Detector::B1, Detector::B2},
    {Detector::A1, Detector::B1},
    {Detector::A2, Detector::B2},
    {Detector::A1, Detector::B2},
    {Detector::A2, Detector::B1},
}};

int pair_index(Detector a, Detector b);

/// The ten post-selected two-photon event probabilities: four double
/// detections (both photons on one detector) and six coincidences.
struct PatternProbabilities {
  std::array<double, 4> two_photon{};   // indexed by Detector
  std::array<double, 6> coincidence{};  // indexed as kDetectorPairs

  double double_at(Detector d) const {
    return two_photon[static_cast<int>(d)];
  }
  double pair(Detector a, Detector b) const {
    return coincidence[pair_index(a, b)];
  }
  double total() const;
  PatternDistribution as_distribution() const;
};

/// Closed-form event probabilities as a function of gamma, nu and the fringe
/// detuning (params.phase; 0 = operating point).  All ten entries are
/// normalized by (1+gamma)^4 and sum to one for any phase.
PatternProbabilities pattern_probabilities(const OpticsParams& params);

/// pattern_probabilities at the operating point (phase forced to 0).
PatternProbabilities simplified_probabilities(const OpticsParams& params);

/// Wave-packet model: Gaussian overlap envelopes on the interference terms
/// and a cos(center_frequency * (dt_a + dt_b) / 2) fringe factor.  Collapses
/// to pattern_probabilities when dt_a = dt_b, pump_bandwidth = 2 * bandwidth
/// (then nu = exp(-bandwidth^2 dt^2 / 2)).
PatternProbabilities full_probabilities(double gamma,
                                        const FullModelParams& params);

/// Photon-pair overlap implied by a path delay: exp(-bandwidth^2 dt^2 / 2).
double visibility_from_delay(double bandwidth, double dt);

/// Probability that one round ends with both photons at a single party
/// (double detections plus same-party coincidences): 2 gamma / (1+gamma)^2.
/// Independent of nu.
double p2_suc(const OpticsParams& params);

/// Probability of the cross coincidences that still elect a leader
/// (A1&B2 or A2&B1): 2 gamma (1 + 2 nu gamma + gamma^2) / (1+gamma)^4.
double p1_suc(const OpticsParams& params);

/// Total single-round success probability p2_suc + p1_suc
/// = 4 gamma (1 + (1+nu) gamma + gamma^2) / (1+gamma)^4.
double p_suc(const OpticsParams& params);

}  // namespace qle
