#include "qle/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace qle {

namespace {

using Complex = std::complex<double>;

constexpr double kUnitarityTol = 1e-9;

template <std::size_t N>
using Matrix = std::array<std::array<Complex, N>, N>;

template <std::size_t N>
Matrix<N> identity() {
  Matrix<N> m{};
  for (std::size_t i = 0; i < N; ++i) m[i][i] = 1.0;
  return m;
}

void check_mode(int mode, int limit, const char* what) {
  if (mode < 0 || mode >= limit) {
    throw std::invalid_argument(std::string(what) + ": mode index " +
                                std::to_string(mode) + " out of range");
  }
}

/// 4x4 single-photon matrix of one element.  Columns are input modes.
Matrix<4> element_matrix(const OpticalElement& element) {
  auto m = identity<4>();
  if (const auto* bs = std::get_if<BeamSplitter>(&element)) {
    check_mode(bs->mode_a, kModeCount, "BeamSplitter");
    check_mode(bs->mode_b, kModeCount, "BeamSplitter");
    if (bs->mode_a == bs->mode_b) {
      throw std::invalid_argument("BeamSplitter: ports must differ");
    }
    const double r = bs->reflectance;
    const double t = bs->transmittance;
    if (!(r >= 0.0 && t >= 0.0) || std::abs(r + t - 1.0) > kUnitarityTol) {
      throw std::invalid_argument(
          "BeamSplitter: need R, T >= 0 with R + T = 1; got R = " +
          std::to_string(r) + ", T = " + std::to_string(t));
    }
    const int a = bs->mode_a;
    const int b = bs->mode_b;
    const double sr = std::sqrt(r);
    const double st = std::sqrt(t);
    // a -> sqrt(T) a - sqrt(R) b;  b -> sqrt(R) a + sqrt(T) b.
    m[a][a] = st;
    m[b][a] = -sr;
    m[a][b] = sr;
    m[b][b] = st;
  } else if (const auto* ps = std::get_if<PhaseShift>(&element)) {
    check_mode(ps->mode, kModeCount, "PhaseShift");
    m[ps->mode][ps->mode] = std::polar(1.0, ps->angle);
  } else {
    const auto& sw = std::get<PortSwap>(element);
    check_mode(sw.mode_a, kModeCount, "PortSwap");
    check_mode(sw.mode_b, kModeCount, "PortSwap");
    if (sw.mode_a == sw.mode_b) {
      throw std::invalid_argument("PortSwap: ports must differ");
    }
    m[sw.mode_a][sw.mode_a] = 0.0;
    m[sw.mode_b][sw.mode_b] = 0.0;
    m[sw.mode_a][sw.mode_b] = 1.0;
    m[sw.mode_b][sw.mode_a] = 1.0;
  }
  return m;
}

template <std::size_t N>
std::vector<int> photon_slots(const std::array<std::uint8_t, N>& occ) {
  std::vector<int> slots;
  for (std::size_t i = 0; i < N; ++i) {
    for (int k = 0; k < occ[i]; ++k) slots.push_back(static_cast<int>(i));
  }
  return slots;
}

/// Transform a sparse <=2-photon amplitude map by a single-photon matrix.
/// The bosonic sqrt(2) enhancement for double occupation enters through the
/// normalization of the one- and two-photon basis kets.
template <std::size_t N>
std::map<std::array<std::uint8_t, N>, Complex> apply_matrix(
    const std::map<std::array<std::uint8_t, N>, Complex>& in,
    const Matrix<N>& u) {
  constexpr double kSqrt2 = std::numbers::sqrt2;
  std::map<std::array<std::uint8_t, N>, Complex> out;
  for (const auto& [occ, amp] : in) {
    const auto slots = photon_slots<N>(occ);
    if (slots.empty()) {
      out[occ] += amp;
      continue;
    }
    if (slots.size() == 1) {
      const int p = slots[0];
      for (std::size_t v = 0; v < N; ++v) {
        if (u[v][p] == 0.0) continue;
        auto target = std::array<std::uint8_t, N>{};
        target[v] = 1;
        out[target] += amp * u[v][p];
      }
      continue;
    }
    const int p = slots[0];
    const int q = slots[1];
    const double in_norm = (p == q) ? kSqrt2 : 1.0;
    for (std::size_t v = 0; v < N; ++v) {
      for (std::size_t w = v; w < N; ++w) {
        Complex k = (v == w) ? u[v][p] * u[v][q] * kSqrt2
                             : u[v][p] * u[w][q] + u[w][p] * u[v][q];
        if (k == 0.0) continue;
        auto target = std::array<std::uint8_t, N>{};
        ++target[v];
        ++target[w];
        out[target] += amp * k / in_norm;
      }
    }
  }
  return out;
}

template <std::size_t N>
int occupation_total(const std::array<std::uint8_t, N>& occ) {
  int n = 0;
  for (auto c : occ) n += c;
  return n;
}

/// Element list for the leader-election interferometer.
///
/// Mode slots double as detector labels (A1, A2, B1, B2).  The photons
/// start in the A2/B2 slots, which the first splitters keep as the local
/// host arms (transmitted, +sqrt(T)) while reflecting +sqrt(R) into the
/// A1/B1 slots, the outward guest arms that get exchanged and phase
/// shifted.  At the recombiners the transmitted beam crosses slots (host
/// slot -> detector-1 slot), so with the slot-preserving element convention
/// their (R, T) arguments appear exchanged; the physical coupler is the
/// same.  Composed, each detector sees the path amplitudes
///   A1: (T, R e^{i phi})     A2: (sqrt(RT), -sqrt(RT) e^{i phi})
///   B1: (R e^{i phi}, T)     B2: (-sqrt(RT) e^{i phi}, sqrt(RT))
/// from (own photon, partner photon), which carries the Hong-Ou-Mandel
/// cancellations that make A1&B1 and A2&B2 vanish at gamma = 1.
std::vector<OpticalElement> circuit_elements(double gamma, double guest_phase) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("run_qle_circuit: gamma must be > 0");
  }
  const double r = gamma / (1.0 + gamma);
  const double t = 1.0 / (1.0 + gamma);
  const int a1 = static_cast<int>(Detector::A1);
  const int a2 = static_cast<int>(Detector::A2);
  const int b1 = static_cast<int>(Detector::B1);
  const int b2 = static_cast<int>(Detector::B2);
  return {
      BeamSplitter{a1, a2, r, t},
      BeamSplitter{b1, b2, r, t},
      PortSwap{a1, b1},
      PhaseShift{a1, guest_phase},
      PhaseShift{b1, guest_phase},
      BeamSplitter{a1, a2, t, r},
      BeamSplitter{b1, b2, t, r},
  };
}

}  // namespace

const char* to_string(Detector d) {
  switch (d) {
    case Detector::A1: return "A1";
    case Detector::A2: return "A2";
    case Detector::B1: return "B1";
    case Detector::B2: return "B2";
  }
  return "?";
}

Detector mirror(Detector d) {
  switch (d) {
    case Detector::A1: return Detector::B1;
    case Detector::A2: return Detector::B2;
    case Detector::B1: return Detector::A1;
    case Detector::B2: return Detector::A2;
  }
  return d;
}

int DetectionPattern::total() const {
  int n = 0;
  for (auto c : counts) n += c;
  return n;
}

DetectionPattern DetectionPattern::clamped() const {
  DetectionPattern p;
  p.threshold_mode = true;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p.counts[i] = std::min<std::uint8_t>(counts[i], 1);
  }
  return p;
}

DetectionPattern mirror(const DetectionPattern& p) {
  DetectionPattern m = p;
  std::swap(m.counts[0], m.counts[2]);
  std::swap(m.counts[1], m.counts[3]);
  return m;
}

DetectionPattern double_click(Detector d) {
  DetectionPattern p;
  p.counts[static_cast<int>(d)] = 2;
  return p;
}

DetectionPattern coincidence_click(Detector a, Detector b) {
  if (a == b) {
    throw std::invalid_argument("coincidence_click: detectors must differ");
  }
  DetectionPattern p;
  p.counts[static_cast<int>(a)] = 1;
  p.counts[static_cast<int>(b)] = 1;
  return p;
}

FockState::FockState(Amplitudes amps) : amps_(std::move(amps)) {
  for (const auto& [occ, amp] : amps_) {
    if (occupation_total<4>(occ) > 2) {
      throw std::invalid_argument("FockState: more than two photons");
    }
  }
}

FockState FockState::basis(const Occupation& occ) {
  if (occupation_total<4>(occ) > 2) {
    throw std::invalid_argument("FockState: more than two photons");
  }
  Amplitudes a;
  a[occ] = 1.0;
  return FockState(std::move(a));
}

std::complex<double> FockState::amplitude(const Occupation& occ) const {
  auto it = amps_.find(occ);
  return it == amps_.end() ? 0.0 : it->second;
}

double FockState::norm_squared() const {
  double n = 0.0;
  for (const auto& [occ, amp] : amps_) n += std::norm(amp);
  return n;
}

int FockState::total_photons() const {
  if (amps_.empty()) return 0;
  int n = occupation_total<4>(amps_.begin()->first);
  for (const auto& [occ, amp] : amps_) {
    if (occupation_total<4>(occ) != n) {
      throw std::logic_error("FockState: mixed photon numbers in support");
    }
  }
  return n;
}

PatternDistribution FockState::detection_probabilities() const {
  PatternDistribution dist;
  for (const auto& [occ, amp] : amps_) {
    DetectionPattern p;
    p.counts = occ;
    dist[p] += std::norm(amp);
  }
  return dist;
}

LabeledFockState::LabeledFockState(Amplitudes amps) : amps_(std::move(amps)) {
  for (const auto& [occ, amp] : amps_) {
    if (occupation_total<8>(occ) > 2) {
      throw std::invalid_argument("LabeledFockState: more than two photons");
    }
  }
}

LabeledFockState LabeledFockState::basis(const LabeledOccupation& occ) {
  if (occupation_total<8>(occ) > 2) {
    throw std::invalid_argument("LabeledFockState: more than two photons");
  }
  Amplitudes a;
  a[occ] = 1.0;
  return LabeledFockState(std::move(a));
}

double LabeledFockState::norm_squared() const {
  double n = 0.0;
  for (const auto& [occ, amp] : amps_) n += std::norm(amp);
  return n;
}

PatternDistribution LabeledFockState::detection_probabilities() const {
  PatternDistribution dist;
  for (const auto& [occ, amp] : amps_) {
    DetectionPattern p;
    for (int m = 0; m < kModeCount; ++m) {
      p.counts[m] = static_cast<std::uint8_t>(occ[m] + occ[m + kModeCount]);
    }
    dist[p] += std::norm(amp);
  }
  return dist;
}

FockState initial_state() {
  return FockState::basis(Occupation{0, 1, 0, 1});
}

LabeledFockState initial_labeled_state() {
  // Alice's photon carries tag 0, Bob's tag 1.
  LabeledFockState::LabeledOccupation occ{};
  occ[static_cast<int>(Detector::A2)] = 1;
  occ[static_cast<int>(Detector::B2) + kModeCount] = 1;
  return LabeledFockState::basis(occ);
}

FockState apply_element(const FockState& state, const OpticalElement& element) {
  return FockState(apply_matrix<4>(state.amplitudes(),
                                   element_matrix(element)));
}

LabeledFockState apply_element(const LabeledFockState& state,
                               const OpticalElement& element) {
  // The optics act on the spatial mode only: lift the 4x4 matrix to a block
  // diagonal 8x8 so both tag sectors transform identically.
  const auto m4 = element_matrix(element);
  Matrix<8> m8{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      m8[i][j] = m4[i][j];
      m8[i + 4][j + 4] = m4[i][j];
    }
  }
  return LabeledFockState(apply_matrix<8>(state.amplitudes(), m8));
}

FockState run_qle_circuit(double gamma, double guest_phase) {
  FockState state = initial_state();
  for (const auto& e : circuit_elements(gamma, guest_phase)) {
    state = apply_element(state, e);
  }
  return state;
}

LabeledFockState run_qle_circuit_distinguishable(double gamma,
                                                 double guest_phase) {
  LabeledFockState state = initial_labeled_state();
  for (const auto& e : circuit_elements(gamma, guest_phase)) {
    state = apply_element(state, e);
  }
  return state;
}

PatternDistribution outcome_distribution(const OpticsParams& params) {
  params.validate();
  // phase measures the fringe detuning from the operating point; the cross
  // interference terms go as cos(sum of guest shifts), so split it evenly.
  const double guest = std::numbers::pi / 2 + params.phase / 2;
  const auto interfering =
      run_qle_circuit(params.gamma, guest).detection_probabilities();
  PatternDistribution labeled;
  if (params.nu < 1.0) {
    labeled = run_qle_circuit_distinguishable(params.gamma, guest)
                  .detection_probabilities();
  }

  PatternDistribution dist;
  auto add = [&](const DetectionPattern& p) {
    double value = 0.0;
    if (auto it = interfering.find(p); it != interfering.end()) {
      value += params.nu * it->second;
    }
    if (auto it = labeled.find(p); it != labeled.end()) {
      value += (1.0 - params.nu) * it->second;
    }
    dist[p] = value;
  };
  for (auto d : kDetectors) add(double_click(d));
  for (std::size_t i = 0; i < kDetectors.size(); ++i) {
    for (std::size_t j = i + 1; j < kDetectors.size(); ++j) {
      add(coincidence_click(kDetectors[i], kDetectors[j]));
    }
  }
  return dist;
}

DetectionPattern sample_pattern(const PatternDistribution& dist,
                                std::uint64_t seed) {
  double total = 0.0;
  for (const auto& [p, w] : dist) {
    if (w < -1e-12) {
      throw std::invalid_argument("sample_pattern: negative probability");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "sample_pattern: distribution sums to " + std::to_string(total) +
        ", expected 1");
  }
  auto eng = detail::make_engine(seed);
  const double u = detail::canonical(eng) * total;
  double acc = 0.0;
  const DetectionPattern* last = nullptr;
  for (const auto& [p, w] : dist) {
    acc += w;
    last = &p;
    if (u < acc) return p;
  }
  return last ? *last : DetectionPattern{};
}

std::map<DetectionPattern, long long> sample_counts(
    const PatternDistribution& dist, long long count, std::uint64_t seed) {
  if (count < 0) {
    throw std::invalid_argument("sample_counts: count must be >= 0");
  }
  std::vector<double> cdf;
  std::vector<const DetectionPattern*> patterns;
  cdf.reserve(dist.size());
  patterns.reserve(dist.size());
  double total = 0.0;
  for (const auto& [p, w] : dist) {
    if (w < -1e-12) {
      throw std::invalid_argument("sample_counts: negative probability");
    }
    total += std::max(w, 0.0);
    cdf.push_back(total);
    patterns.push_back(&p);
  }
  if (patterns.empty() || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("sample_counts: distribution must sum to 1");
  }
  cdf.back() = 1.0;

  std::vector<long long> tallies(patterns.size(), 0);
  auto eng = detail::make_engine(seed);
  for (long long i = 0; i < count; ++i) {
    const double u = detail::canonical(eng);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::size_t>(
        it == cdf.end() ? cdf.size() - 1 : it - cdf.begin());
    ++tallies[idx];
  }
  std::map<DetectionPattern, long long> result;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    result[*patterns[i]] = tallies[i];
  }
  return result;
}

}  // namespace qle
