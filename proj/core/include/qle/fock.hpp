#pragma once

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <variant>

#include "qle/params.hpp"

namespace qle {

/// The four detector ports.  Alice reads A1/A2, Bob reads B1/B2; port "1" on
/// each side is the output dominated by host-arm transmission.
enum class Detector : int { A1 = 0, A2 = 1, B1 = 2, B2 = 3 };

inline constexpr int kModeCount = 4;
inline constexpr std::array<Detector, 4> kDetectors = {
    Detector::A1, Detector::A2, Detector::B1, Detector::B2};

const char* to_string(Detector d);

/// Swap the roles of the two parties (A1 <-> B1, A2 <-> B2).
Detector mirror(Detector d);

/// Photon count per mode; total occupation is capped at two photons.
using Occupation = std::array<std::uint8_t, kModeCount>;

/// A click record: photons seen per detector.  With threshold_mode set the
/// counts are clamped to 0/1, modelling non-number-resolving detectors.
struct DetectionPattern {
  std::array<std::uint8_t, kModeCount> counts{};
  bool threshold_mode = false;

  int total() const;
  int at(Detector d) const { return counts[static_cast<int>(d)]; }
  DetectionPattern clamped() const;

  auto operator<=>(const DetectionPattern&) const = default;
};

DetectionPattern mirror(const DetectionPattern& p);

/// Convenience constructors for the two event shapes that matter here.
DetectionPattern double_click(Detector d);
DetectionPattern coincidence_click(Detector a, Detector b);

using PatternDistribution = std::map<DetectionPattern, double>;

/// Pure state of up to two photons in the four spatial modes, stored as a
/// sparse map from occupation tuples to complex amplitudes.
class FockState {
 public:
  using Amplitudes = std::map<Occupation, std::complex<double>>;

  FockState() = default;
  explicit FockState(Amplitudes amps);
  static FockState basis(const Occupation& occ);

  const Amplitudes& amplitudes() const { return amps_; }
  std::complex<double> amplitude(const Occupation& occ) const;
  double norm_squared() const;
  int total_photons() const;

  /// Probability of each click pattern for number-resolving detectors on all
  /// four modes.  Keys cover every pattern in the state's support.
  PatternDistribution detection_probabilities() const;

 private:
  Amplitudes amps_;
};

/// Same state space but each photon also carries an internal tag (0 or 1)
/// that the optics never mixes.  Photons with different tags do not
/// interfere; detectors are tag-blind.  This is the fully distinguishable
/// sector used for partial-overlap mixtures.
class LabeledFockState {
 public:
  static constexpr int kLabels = 2;
  /// Slot layout: mode + kModeCount * tag.
  using LabeledOccupation = std::array<std::uint8_t, kModeCount * kLabels>;
  using Amplitudes = std::map<LabeledOccupation, std::complex<double>>;

  LabeledFockState() = default;
  explicit LabeledFockState(Amplitudes amps);
  static LabeledFockState basis(const LabeledOccupation& occ);

  const Amplitudes& amplitudes() const { return amps_; }
  double norm_squared() const;

  /// Tag-blind detection: sums |amplitude|^2 over every tag assignment that
  /// produces the same spatial click pattern.
  PatternDistribution detection_probabilities() const;

 private:
  Amplitudes amps_;
};

/// Lossless two-port coupler.
///
/// Amplitude convention: the transmitted path carries +sqrt(T) on both
/// outputs; the reflected path carries +sqrt(R) into port a and -sqrt(R)
/// into port b.  Equivalently, as a map on mode operators,
///   a -> sqrt(T) a - sqrt(R) b,   b -> sqrt(R) a + sqrt(T) b.
struct BeamSplitter {
  int mode_a = 0;
  int mode_b = 1;
  double reflectance = 0.5;
  double transmittance = 0.5;
};

struct PhaseShift {
  int mode = 0;
  double angle = 0.0;  // radians; amplitude factor exp(i * angle) per photon
};

struct PortSwap {
  int mode_a = 0;
  int mode_b = 1;
};

using OpticalElement = std::variant<BeamSplitter, PhaseShift, PortSwap>;

/// Both sources fired: one photon in each party's splitter input mode.
FockState initial_state();
LabeledFockState initial_labeled_state();

FockState apply_element(const FockState& state, const OpticalElement& element);
LabeledFockState apply_element(const LabeledFockState& state,
                               const OpticalElement& element);

/// Run the full leader-election interferometer: each party splits its photon
/// (R = gamma/(1+gamma), T = 1/(1+gamma)), the outward "guest" arms are
/// exchanged and phase shifted by guest_phase (pi/2 in the protocol), and
/// each party recombines its host arm with the partner's guest arm onto its
/// two detectors.
FockState run_qle_circuit(double gamma,
                          double guest_phase = 1.5707963267948966);
LabeledFockState run_qle_circuit_distinguishable(
    double gamma, double guest_phase = 1.5707963267948966);

/// Click-pattern distribution for partially distinguishable photons:
/// the nu-weighted mixture of the interfering and the tagged (non-
/// interfering) sectors.  params.phase is the fringe detuning from the
/// operating point; the guest shifters are set to pi/2 + phase/2 each.
PatternDistribution outcome_distribution(const OpticsParams& params);

/// Draw one click pattern from a distribution (must sum to 1 within 1e-9).
/// Deterministic for a given seed.
DetectionPattern sample_pattern(const PatternDistribution& dist,
                                std::uint64_t seed);

/// Draw `count` patterns from one seeded stream and tally them.
std::map<DetectionPattern, long long> sample_counts(
    const PatternDistribution& dist, long long count, std::uint64_t seed);

}  // namespace qle
