#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qle/analytic.hpp"
#include "qle/fock.hpp"

using namespace qle;

namespace {

double prob_of(const PatternDistribution& dist, const DetectionPattern& p) {
  const auto it = dist.find(p);
  return it == dist.end() ? 0.0 : it->second;
}

}  // namespace

TEST_CASE("balanced ideal case reproduces the textbook distribution") {
  OpticsParams params;  // gamma = 1, nu = 1, phase = 0
  const PatternProbabilities probs = simplified_probabilities(params);
  for (auto d : kDetectors) {
    CHECK(probs.double_at(d) == doctest::Approx(0.125).epsilon(1e-12));
  }
  CHECK(probs.pair(Detector::A1, Detector::B2) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(probs.pair(Detector::A2, Detector::B1) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(probs.pair(Detector::A1, Detector::B1)) < 1e-12);
  CHECK(std::abs(probs.pair(Detector::A2, Detector::B2)) < 1e-12);
  CHECK(std::abs(probs.pair(Detector::A1, Detector::A2)) < 1e-12);
  CHECK(std::abs(probs.pair(Detector::B1, Detector::B2)) < 1e-12);
  CHECK(probs.total() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed forms match the circuit oracle across the grid") {
  for (double gamma : {0.5, 0.8, 1.0}) {
    for (double nu : {0.0, 0.5, 0.845, 1.0}) {
      for (double phase : {0.0, 0.7, 2.4}) {
        OpticsParams params{gamma, nu, phase};
        const auto formula = pattern_probabilities(params).as_distribution();
        const auto oracle = outcome_distribution(params);
        for (const auto& [pattern, p] : oracle) {
          CHECK(std::abs(p - prob_of(formula, pattern)) < 1e-10);
        }
        for (const auto& [pattern, p] : formula) {
          CHECK(std::abs(p - prob_of(oracle, pattern)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("operating-point forms ignore the stored phase") {
  OpticsParams detuned{0.8, 0.845, 1.9};
  OpticsParams at_zero{0.8, 0.845, 0.0};
  const auto a = simplified_probabilities(detuned);
  const auto b = pattern_probabilities(at_zero);
  for (std::size_t i = 0; i < a.two_photon.size(); ++i) {
    CHECK(a.two_photon[i] == doctest::Approx(b.two_photon[i]).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < a.coincidence.size(); ++i) {
    CHECK(a.coincidence[i] ==
          doctest::Approx(b.coincidence[i]).epsilon(1e-14));
  }
}

TEST_CASE("probabilities stay normalized over random parameters") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    OpticsParams params;
    params.gamma = 0.1 + 2.4 * uni(rng);
    params.nu = uni(rng);
    params.phase = 6.28 * uni(rng) - 3.14;
    CHECK(std::abs(pattern_probabilities(params).total() - 1.0) < 1e-12);
  }
}

TEST_CASE("phase moves only the cross-party coincidences") {
  OpticsParams base{0.8, 0.845, 0.0};
  OpticsParams detuned{0.8, 0.845, 1.1};
  const auto a = pattern_probabilities(base);
  const auto b = pattern_probabilities(detuned);
  for (auto d : kDetectors) {
    CHECK(a.double_at(d) == doctest::Approx(b.double_at(d)).epsilon(1e-14));
  }
  CHECK(a.pair(Detector::A1, Detector::A2) ==
        doctest::Approx(b.pair(Detector::A1, Detector::A2)).epsilon(1e-14));
  CHECK(a.pair(Detector::B1, Detector::B2) ==
        doctest::Approx(b.pair(Detector::B1, Detector::B2)).epsilon(1e-14));
  CHECK(a.pair(Detector::A1, Detector::B1) !=
        doctest::Approx(b.pair(Detector::A1, Detector::B1)).epsilon(1e-6));
}

TEST_CASE("fringe extremes swap the cross-pair roles") {
  // At phase pi the interference term flips sign, exchanging the bright and
  // dark cross-party pairs.
  OpticsParams bright{1.0, 1.0, 0.0};
  OpticsParams dark{1.0, 1.0, 3.14159265358979323846};
  const auto at0 = pattern_probabilities(bright);
  const auto atpi = pattern_probabilities(dark);
  CHECK(at0.pair(Detector::A1, Detector::B2) ==
        doctest::Approx(atpi.pair(Detector::A1, Detector::B1)).epsilon(1e-9));
  CHECK(std::abs(atpi.pair(Detector::A1, Detector::B2) -
                 at0.pair(Detector::A1, Detector::B1)) < 1e-9);
}

TEST_CASE("success probabilities carry their class meaning") {
  for (double gamma : {0.5, 0.8, 1.0, 1.5}) {
    for (double nu : {0.0, 0.5, 1.0}) {
      OpticsParams params{gamma, nu, 0.0};
      const auto probs = pattern_probabilities(params);
      double doubles = 0.0;
      for (auto d : kDetectors) doubles += probs.double_at(d);
      const double same_party = probs.pair(Detector::A1, Detector::A2) +
                                probs.pair(Detector::B1, Detector::B2);
      const double cross_success = probs.pair(Detector::A1, Detector::B2) +
                                   probs.pair(Detector::A2, Detector::B1);
      const double cross_failure = probs.pair(Detector::A1, Detector::B1) +
                                   probs.pair(Detector::A2, Detector::B2);
      CHECK(p2_suc(params) ==
            doctest::Approx(doubles + same_party).epsilon(1e-12));
      CHECK(p1_suc(params) == doctest::Approx(cross_success).epsilon(1e-12));
      CHECK(p_suc(params) ==
            doctest::Approx(1.0 - cross_failure).epsilon(1e-12));
      CHECK(p_suc(params) ==
            doctest::Approx(p1_suc(params) + p2_suc(params)).epsilon(1e-12));
    }
  }
}

TEST_CASE("silent-success share does not depend on indistinguishability") {
  OpticsParams lo{0.8, 0.0, 0.0};
  OpticsParams hi{0.8, 1.0, 0.0};
  CHECK(p2_suc(lo) == doctest::Approx(p2_suc(hi)).epsilon(1e-14));
}

TEST_CASE("reference operating point values") {
  OpticsParams params{0.8, 0.845, 0.0};
  CHECK(p_suc(params) == doctest::Approx(0.94985520).epsilon(1e-7));
  const auto probs = pattern_probabilities(params);
  CHECK(probs.pair(Detector::A1, Detector::B1) ==
        doctest::Approx(0.0312453).epsilon(1e-4));
  CHECK(probs.pair(Detector::A2, Detector::B2) ==
        doctest::Approx(0.0188995).epsilon(1e-4));
}

TEST_CASE("delay visibility is the Gaussian overlap") {
  CHECK(visibility_from_delay(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(visibility_from_delay(2.0, 0.5) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(visibility_from_delay(1.0, 10.0) < 1e-20);
}

TEST_CASE("wave-packet model reduces to the operating-point forms") {
  const double gamma = 0.8;
  for (double dt : {0.0, 0.3, 0.9}) {
    FullModelParams wp;
    wp.dt_a = dt;
    wp.dt_b = dt;
    wp.bandwidth = 1.0;
    wp.pump_bandwidth = 2.0;  // degenerate pairing
    wp.center_frequency = 0.0;
    const auto full = full_probabilities(gamma, wp);
    OpticsParams equivalent;
    equivalent.gamma = gamma;
    equivalent.nu = visibility_from_delay(1.0, dt);
    equivalent.phase = 0.0;
    const auto simple = pattern_probabilities(equivalent);
    for (std::size_t i = 0; i < full.two_photon.size(); ++i) {
      CHECK(full.two_photon[i] ==
            doctest::Approx(simple.two_photon[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < full.coincidence.size(); ++i) {
      CHECK(full.coincidence[i] ==
            doctest::Approx(simple.coincidence[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("wave-packet model carries the fringe through the center frequency") {
  FullModelParams wp;
  wp.dt_a = 0.2;
  wp.dt_b = 0.2;
  wp.bandwidth = 1.0;
  wp.pump_bandwidth = 2.0;
  wp.center_frequency = 5.0;
  const auto full = full_probabilities(1.0, wp);
  OpticsParams equivalent;
  equivalent.nu = visibility_from_delay(1.0, 0.2);
  equivalent.phase = 5.0 * 0.2;  // omega_0 (dt_a + dt_b) / 2
  const auto simple = pattern_probabilities(equivalent);
  for (std::size_t i = 0; i < full.coincidence.size(); ++i) {
    CHECK(full.coincidence[i] ==
          doctest::Approx(simple.coincidence[i]).epsilon(1e-12));
  }
}

TEST_CASE("wave-packet model with unequal delays stays normalized") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    FullModelParams wp;
    wp.dt_a = 2.0 * uni(rng) - 1.0;
    wp.dt_b = 2.0 * uni(rng) - 1.0;
    wp.bandwidth = 0.2 + 2.0 * uni(rng);
    wp.pump_bandwidth = 0.2 + 3.0 * uni(rng);
    wp.center_frequency = 10.0 * uni(rng);
    const double gamma = 0.3 + 1.5 * uni(rng);
    const auto full = full_probabilities(gamma, wp);
    CHECK(std::abs(full.total() - 1.0) < 1e-12);
    for (double p : full.two_photon) CHECK(p >= -1e-15);
    for (double p : full.coincidence) CHECK(p >= -1e-15);
  }
}

TEST_CASE("parameter validation") {
  OpticsParams bad_gamma{-1.0, 1.0, 0.0};
  CHECK_THROWS_AS(pattern_probabilities(bad_gamma), std::invalid_argument);
  OpticsParams bad_nu{1.0, 1.5, 0.0};
  CHECK_THROWS_AS(pattern_probabilities(bad_nu), std::invalid_argument);
  CHECK_THROWS_AS(p_suc(bad_nu), std::invalid_argument);
  CHECK_THROWS_AS(full_probabilities(0.0, FullModelParams{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pair_index(Detector::A1, Detector::A1),
                  std::invalid_argument);
}
