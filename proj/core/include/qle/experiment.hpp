#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qle/analytic.hpp"
#include "qle/fock.hpp"
#include "qle/params.hpp"

namespace qle {

/// Raw detector tallies from a run with lossy threshold detectors: singles
/// per detector plus the six pairwise coincidence counts.
struct CountsTable {
  std::array<std::int64_t, 4> singles{};       // indexed by Detector
  std::array<std::int64_t, 6> coincidences{};  // indexed as kDetectorPairs

  std::int64_t singles_total() const;
  std::int64_t pair(Detector a, Detector b) const {
    return coincidences[pair_index(a, b)];
  }
};

/// Parse the lower-triangular counts layout:
///   header  detector,A1,A2,B1,B2
///   rows    one per detector; diagonal cells are singles, sub-diagonal
///           cells are coincidences, cells above the diagonal stay empty.
/// Throws std::runtime_error naming the offending row/column on malformed,
/// missing, or negative cells.
CountsTable parse_counts_csv(std::istream& in);
CountsTable load_counts_csv(const std::string& path);

/// Per-component transmittances whose product is the end-to-end heralding
/// efficiency eta.
struct LossBudget {
  std::vector<std::pair<std::string, double>> components;

  double eta() const;
};

/// Parse "component,transmittance" rows (header required).
LossBudget parse_loss_csv(std::istream& in);
LossBudget load_loss_csv(const std::string& path);

/// Fraction of generated pairs surviving as two-photon events among all
/// registered events when each photon survives with probability eta:
/// eta^2 / (2 (1-eta) eta + eta^2) = eta / (2 - eta), about eta/2 for small
/// eta.
double two_photon_fraction(double eta);

/// Success probability inferred from counts: the observed singles are scaled
/// by two_photon_fraction(eta) to estimate how many of them were invisible
/// two-photon events (class i), and the failure share is the class-iv
/// coincidences.  standard_error is the binomial error on the class-iv
/// fraction.
struct SuccessEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  double n_double = 0.0;        // class i, reconstructed from singles
  double n_same_party = 0.0;    // class ii
  double n_cross_success = 0.0; // class iii
  double n_cross_failure = 0.0; // class iv
  double events_total = 0.0;
};

SuccessEstimate empirical_success(const CountsTable& counts, double eta);

/// One fringe-scan point: the phase-control setting and the two recorded
/// coincidence series, class iii (A1&B2) and class iv (A2&B2).
struct FringeSample {
  double control = 0.0;
  double counts_iii = 0.0;
  double counts_iv = 0.0;
};

struct FringeScan {
  std::vector<FringeSample> samples;
};

/// Parse/emit "control,counts_iii,counts_iv" rows (header required).
FringeScan parse_fringe_csv(std::istream& in);
FringeScan load_fringe_csv(const std::string& path);
void write_fringe_csv(std::ostream& out, const FringeScan& scan);

struct FringeOptions {
  int events_per_point = 10000;
  std::uint64_t seed = 0;
  /// With expectation set, counts are the exact expected values instead of
  /// multinomial draws.
  bool expectation = false;
};

/// Simulate a fringe scan: at each grid value the phase detuning is set and
/// events_per_point post-selected two-photon events are drawn; the A1&B2 and
/// A2&B2 coincidence tallies form the two series.  base.phase is ignored.
FringeScan generate_fringe(const OpticsParams& base,
                           std::span<const double> phase_grid,
                           const FringeOptions& options);

/// Shared-visibility sinusoid fit of the two antiphase series:
///   iii: A1 (1 + nu cos(w x + phi))     iv: A2 (1 - nu cos(w x + phi))
/// nu, w and phi are shared.  uncertainty is a 95% half-width (twice the
/// covariance standard error); flat data yields nu = 0 with a large
/// uncertainty.  Throws on fewer than five samples or non-convergence.
struct VisibilityFit {
  double nu = 0.0;
  double uncertainty = 0.0;
  double amplitude_iii = 0.0;
  double amplitude_iv = 0.0;
  double frequency = 0.0;
  double phase_offset = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

VisibilityFit fit_visibility(const FringeScan& scan);

/// Model prediction for one series at control x (sign +1 for iii, -1 for iv).
double fringe_model(const VisibilityFit& fit, double x, int sign);

}  // namespace qle
