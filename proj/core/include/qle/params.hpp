#pragma once

#include <stdexcept>
#include <string>

namespace qle {

/// Source/apparatus parameters for the two-photon interferometer model.
///
/// gamma is the beam-splitter asymmetry R/T, so R = gamma/(1+gamma) and
/// T = 1/(1+gamma); gamma = 1 is the balanced 50:50 case.
/// nu in [0,1] is the pairwise indistinguishability of the two photons
/// (1 = perfect overlap, 0 = fully distinguishable).
/// phase is the detuning, in radians, of the combined guest-arm phase from
/// the protocol operating point (each party applies a pi/2 guest shift; the
/// interference fringes move as cos(phase)).  phase = 0 is where the
/// protocol is meant to run.
struct OpticsParams {
  double gamma = 1.0;
  double nu = 1.0;
  double phase = 0.0;

  void validate() const {
    if (!(gamma > 0.0)) {
      throw std::invalid_argument("OpticsParams: gamma must be > 0, got " +
                                  std::to_string(gamma));
    }
    if (!(nu >= 0.0 && nu <= 1.0)) {
      throw std::invalid_argument("OpticsParams: nu must lie in [0, 1], got " +
                                  std::to_string(nu));
    }
  }
};

/// Wave-packet parameters for the unsimplified coincidence model.
///
/// dt_a and dt_b are the host-guest path delays at the two stations,
/// bandwidth is the single-photon spectral width (the Gaussian envelope
/// factor exp(-bandwidth^2 dt^2 / 2) plays the role of nu), pump_bandwidth
/// is the pump spectral width, and center_frequency multiplies
/// (dt_a + dt_b)/2 to form the fringe phase.
struct FullModelParams {
  double dt_a = 0.0;
  double dt_b = 0.0;
  double bandwidth = 1.0;
  double pump_bandwidth = 2.0;
  double center_frequency = 0.0;

  void validate() const {
    if (!(bandwidth >= 0.0) || !(pump_bandwidth >= 0.0)) {
      throw std::invalid_argument(
          "FullModelParams: spectral widths must be >= 0");
    }
  }
};

}  // namespace qle
