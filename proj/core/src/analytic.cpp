#include "qle/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace qle {

int pair_index(Detector a, Detector b) {
  for (std::size_t i = 0; i < kDetectorPairs.size(); ++i) {
    const auto& [x, y] = kDetectorPairs[i];
    if ((x == a && y == b) || (x == b && y == a)) return static_cast<int>(i);
  }
  throw std::invalid_argument("pair_index: detectors must differ");
}

double PatternProbabilities::total() const {
  double t = 0.0;
  for (double p : two_photon) t += p;
  for (double p : coincidence) t += p;
  return t;
}

PatternDistribution PatternProbabilities::as_distribution() const {
  PatternDistribution dist;
  for (auto d : kDetectors) dist[double_click(d)] = double_at(d);
  for (const auto& [a, b] : kDetectorPairs) {
    dist[coincidence_click(a, b)] = pair(a, b);
  }
  return dist;
}

namespace {

/// Shared evaluation of the ten event probabilities.  The interference of
/// the two two-photon paths into each pattern carries an envelope (photon
/// overlap) and, for the cross-party patterns, the fringe factor
/// cos(phase).  Writing g for gamma and normalizing by (1+g)^4:
///   doubles:    g^2 (1 + env)
///   same-party: g (1+g^2) - 2 g^2 env                    (no fringe)
///   A1 & B1:    (1 + g^4) - 2 g^2 env cos(phase)
///   A2 & B2:    2 g^2 (1 - env cos(phase))
///   A1 & B2, A2 & B1:  g (1+g^2) + 2 g^2 env cos(phase)
/// At phase = 0 and env = nu these are the operating-point closed forms; the
/// ten entries sum to one for every phase.
PatternProbabilities evaluate(double g, double env_a, double env_b,
                              double env_cross, double fringe) {
  const double norm = std::pow(1.0 + g, 4);
  const double g2 = g * g;
  const double g4 = g2 * g2;
  const double cross = env_cross * fringe;

  PatternProbabilities p;
  p.two_photon[static_cast<int>(Detector::A1)] = g2 * (1.0 + env_a) / norm;
  p.two_photon[static_cast<int>(Detector::A2)] = g2 * (1.0 + env_a) / norm;
  p.two_photon[static_cast<int>(Detector::B1)] = g2 * (1.0 + env_b) / norm;
  p.two_photon[static_cast<int>(Detector::B2)] = g2 * (1.0 + env_b) / norm;

  p.coincidence[pair_index(Detector::A1, Detector::A2)] =
      (g * (1.0 + g2) - 2.0 * g2 * env_a) / norm;
  p.coincidence[pair_index(Detector::B1, Detector::B2)] =
      (g * (1.0 + g2) - 2.0 * g2 * env_b) / norm;
  p.coincidence[pair_index(Detector::A1, Detector::B1)] =
      ((1.0 + g4) - 2.0 * g2 * cross) / norm;
  p.coincidence[pair_index(Detector::A2, Detector::B2)] =
      2.0 * g2 * (1.0 - cross) / norm;
  p.coincidence[pair_index(Detector::A1, Detector::B2)] =
      (g * (1.0 + g2) + 2.0 * g2 * cross) / norm;
  p.coincidence[pair_index(Detector::A2, Detector::B1)] =
      (g * (1.0 + g2) + 2.0 * g2 * cross) / norm;
  return p;
}

}  // namespace

PatternProbabilities pattern_probabilities(const OpticsParams& params) {
  params.validate();
  return evaluate(params.gamma, params.nu, params.nu, params.nu,
                  std::cos(params.phase));
}

PatternProbabilities simplified_probabilities(const OpticsParams& params) {
  OpticsParams at_operating_point = params;
  at_operating_point.phase = 0.0;
  return pattern_probabilities(at_operating_point);
}

double visibility_from_delay(double bandwidth, double dt) {
  const double x = bandwidth * dt;
  return std::exp(-0.5 * x * x);
}

PatternProbabilities full_probabilities(double gamma,
                                        const FullModelParams& params) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("full_probabilities: gamma must be > 0");
  }
  params.validate();
  const double da = params.dt_a;
  const double db = params.dt_b;
  const double w = params.bandwidth;
  const double wp = params.pump_bandwidth;
  const double env_a = std::exp(-0.5 * w * w * da * da);
  const double env_b = std::exp(-0.5 * w * w * db * db);
  // Cross-party interference: pump coherence over the summed delay and
  // photon coherence over the delay difference.
  const double sum = da + db;
  const double diff = da - db;
  const double env_cross = std::exp(-wp * wp * sum * sum / 32.0) *
                           std::exp(-w * w * diff * diff / 8.0);
  const double fringe = std::cos(0.5 * params.center_frequency * sum);
  return evaluate(gamma, env_a, env_b, env_cross, fringe);
}

double p2_suc(const OpticsParams& params) {
  params.validate();
  const double g = params.gamma;
  return 2.0 * g / ((1.0 + g) * (1.0 + g));
}

double p1_suc(const OpticsParams& params) {
  params.validate();
  const double g = params.gamma;
  return 2.0 * g * (1.0 + 2.0 * params.nu * g + g * g) / std::pow(1.0 + g, 4);
}

double p_suc(const OpticsParams& params) {
  params.validate();
  const double g = params.gamma;
  return 4.0 * g * (1.0 + (1.0 + params.nu) * g + g * g) /
         std::pow(1.0 + g, 4);
}

}  // namespace qle
