// qle: command-line front end for the two-photon leader-election toolkit.
//
// Subcommands
//   simulate   exact click-pattern distribution, optionally with sampled
//              frequencies
//   cost       expected communication cost of the quantum protocol
//   classical  the classical coin-flip baseline
//   analyze    success probability from recorded detector counts
//   fringe     interference-fringe generation and visibility fitting
//
// Every subcommand prints a report on stdout in --format {table,csv,json};
// identical flags and seed give byte-identical output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qle/analytic.hpp"
#include "qle/classical.hpp"
#include "qle/experiment.hpp"
#include "qle/fock.hpp"
#include "qle/params.hpp"
#include "qle/protocol.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
constexpr double kGuestOperatingPoint = kPi / 2.0;

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string general(double v, int significant = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
  return buf;
}

std::string pattern_label(const qle::DetectionPattern& pattern) {
  for (auto d : qle::kDetectors) {
    if (pattern.at(d) == 2) return std::string("2x") + qle::to_string(d);
  }
  std::string label;
  for (auto d : qle::kDetectors) {
    if (pattern.at(d) == 1) {
      if (!label.empty()) label += '&';
      label += qle::to_string(d);
    }
  }
  return label;
}

std::string class_label(qle::OutcomeKind kind) {
  switch (kind) {
    case qle::OutcomeKind::double_detection: return "i";
    case qle::OutcomeKind::same_party: return "ii";
    case qle::OutcomeKind::cross_success: return "iii";
    case qle::OutcomeKind::cross_failure: return "iv";
  }
  return "?";
}

/// The ten two-photon patterns in display order: the four doubles, then the
/// six coincidences.
std::vector<qle::DetectionPattern> canonical_patterns() {
  std::vector<qle::DetectionPattern> patterns;
  for (auto d : qle::kDetectors) patterns.push_back(qle::double_click(d));
  for (const auto& [a, b] : qle::kDetectorPairs) {
    patterns.push_back(qle::coincidence_click(a, b));
  }
  return patterns;
}

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec grid;
  const auto first = text.find(':');
  const auto second = first == std::string::npos
                          ? std::string::npos
                          : text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw std::invalid_argument("--grid expects LO:HI:STEP, got \"" + text +
                                "\"");
  }
  try {
    grid.lo = std::stod(text.substr(0, first));
    grid.hi = std::stod(text.substr(first + 1, second - first - 1));
    grid.step = std::stod(text.substr(second + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("--grid expects numeric LO:HI:STEP, got \"" +
                                text + "\"");
  }
  if (!(grid.step > 0.0) || grid.hi < grid.lo) {
    throw std::invalid_argument(
        "--grid requires STEP > 0 and HI >= LO, got \"" + text + "\"");
  }
  return grid;
}

std::vector<double> grid_points(const GridSpec& grid) {
  std::vector<double> points;
  const double count_f = (grid.hi - grid.lo) / grid.step;
  const auto count = static_cast<long long>(std::floor(count_f + 1e-9)) + 1;
  points.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    points.push_back(grid.lo + static_cast<double>(i) * grid.step);
  }
  return points;
}

void deliver(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw std::runtime_error("cannot open output file \"" + out_path + "\"");
  }
  out << text;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  double gamma = 1.0;
  double nu = 1.0;
  double guest_phase = kGuestOperatingPoint;
  long long trials = 0;
  std::uint64_t seed = 0;
  std::string format = "table";
  std::string out;
};

int cmd_simulate(const SimulateOpts& opts) {
  qle::OpticsParams params;
  params.gamma = opts.gamma;
  params.nu = opts.nu;
  // The flag sets each party's guest shifter; the distribution depends on
  // the detuning of the combined shift from the operating point.
  params.phase = 2.0 * opts.guest_phase - kPi;
  params.validate();

  const qle::PatternDistribution dist = qle::outcome_distribution(params);
  std::map<qle::DetectionPattern, long long> tallies;
  if (opts.trials > 0) {
    tallies = qle::sample_counts(dist, opts.trials, opts.seed);
  }

  const auto patterns = canonical_patterns();
  std::array<double, 4> class_prob{};
  for (const auto& pattern : patterns) {
    const auto cls = qle::classify(pattern);
    const auto it = dist.find(pattern);
    class_prob[static_cast<int>(cls.kind)] +=
        it == dist.end() ? 0.0 : it->second;
  }
  const double success = qle::p_suc(params);

  std::ostringstream text;
  if (opts.format == "table") {
    text << "two-photon outcome distribution\n";
    text << "  gamma " << general(params.gamma) << "   nu "
         << general(params.nu) << "   guest phase "
         << general(opts.guest_phase) << " rad (detuning "
         << general(params.phase) << ")\n\n";
    text << "  pattern  class  probability ";
    if (opts.trials > 0) text << "  frequency   std_error";
    text << "\n";
    for (const auto& pattern : patterns) {
      const auto it = dist.find(pattern);
      const double p = it == dist.end() ? 0.0 : it->second;
      char line[160];
      if (opts.trials > 0) {
        const auto tally_it = tallies.find(pattern);
        const double n =
            tally_it == tallies.end() ? 0.0
                                      : static_cast<double>(tally_it->second);
        const double freq = n / static_cast<double>(opts.trials);
        const double se = std::sqrt(freq * (1.0 - freq) /
                                    static_cast<double>(opts.trials));
        std::snprintf(line, sizeof(line),
                      "  %-7s  %-5s  %.10f  %.6f    %.6f\n",
                      pattern_label(pattern).c_str(),
                      class_label(qle::classify(pattern).kind).c_str(), p,
                      freq, se);
      } else {
        std::snprintf(line, sizeof(line), "  %-7s  %-5s  %.10f\n",
                      pattern_label(pattern).c_str(),
                      class_label(qle::classify(pattern).kind).c_str(), p);
      }
      text << line;
    }
    text << "\n  class totals   i " << fixed(class_prob[0], 6) << "   ii "
         << fixed(class_prob[1], 6) << "   iii " << fixed(class_prob[2], 6)
         << "   iv " << fixed(class_prob[3], 6) << "\n";
    text << "  success probability per attempt  " << fixed(success, 6)
         << "\n";
  } else if (opts.format == "csv") {
    text << "pattern,class,probability";
    if (opts.trials > 0) text << ",frequency,std_error";
    text << "\n";
    for (const auto& pattern : patterns) {
      const auto it = dist.find(pattern);
      const double p = it == dist.end() ? 0.0 : it->second;
      text << pattern_label(pattern) << ','
           << class_label(qle::classify(pattern).kind) << ','
           << general(p, 12);
      if (opts.trials > 0) {
        const auto tally_it = tallies.find(pattern);
        const double n =
            tally_it == tallies.end() ? 0.0
                                      : static_cast<double>(tally_it->second);
        const double freq = n / static_cast<double>(opts.trials);
        const double se = std::sqrt(freq * (1.0 - freq) /
                                    static_cast<double>(opts.trials));
        text << ',' << general(freq, 12) << ',' << general(se, 6);
      }
      text << "\n";
    }
  } else {
    json report;
    report["gamma"] = params.gamma;
    report["nu"] = params.nu;
    report["guest_phase"] = opts.guest_phase;
    report["phase_detuning"] = params.phase;
    if (opts.trials > 0) {
      report["trials"] = opts.trials;
      report["seed"] = opts.seed;
    }
    json rows = json::array();
    for (const auto& pattern : patterns) {
      const auto it = dist.find(pattern);
      const double p = it == dist.end() ? 0.0 : it->second;
      json row;
      row["pattern"] = pattern_label(pattern);
      row["class"] = class_label(qle::classify(pattern).kind);
      row["probability"] = p;
      if (opts.trials > 0) {
        const auto tally_it = tallies.find(pattern);
        const long long n = tally_it == tallies.end() ? 0 : tally_it->second;
        const double freq =
            static_cast<double>(n) / static_cast<double>(opts.trials);
        row["count"] = n;
        row["frequency"] = freq;
        row["std_error"] = std::sqrt(freq * (1.0 - freq) /
                                     static_cast<double>(opts.trials));
      }
      rows.push_back(row);
    }
    report["patterns"] = rows;
    report["class_totals"] = {{"i", class_prob[0]},
                              {"ii", class_prob[1]},
                              {"iii", class_prob[2]},
                              {"iv", class_prob[3]}};
    report["success_probability"] = success;
    text << report.dump(2) << "\n";
  }
  deliver(text.str(), opts.out);
  return 0;
}

// ---------------------------------------------------------------------------
// cost

struct CostOpts {
  double gamma = 1.0;
  double nu = 1.0;
  long long trials = 0;
  std::uint64_t seed = 0;
  std::string grid;
  std::string format = "table";
  std::string out;
};

struct CostMonteCarlo {
  double mean_cost = 0.0;
  double std_error = 0.0;
  double mean_attempts = 0.0;
  double undecided_fraction = 0.0;
};

CostMonteCarlo run_cost_monte_carlo(const qle::OpticsParams& params,
                                    long long trials, std::uint64_t seed) {
  const qle::PatternDistribution dist =
      qle::pattern_probabilities(params).as_distribution();
  double sum = 0.0;
  double sum_sq = 0.0;
  double attempts = 0.0;
  long long undecided = 0;
  for (long long i = 0; i < trials; ++i) {
    const auto ledger = qle::run_protocol_with(
        dist, qle::kDefaultMaxTrials, seed + static_cast<std::uint64_t>(i));
    const double cost = static_cast<double>(ledger.total_communication());
    sum += cost;
    sum_sq += cost * cost;
    attempts += static_cast<double>(ledger.trials);
    if (ledger.elected == qle::Leader::none) ++undecided;
  }
  CostMonteCarlo mc;
  const double n = static_cast<double>(trials);
  mc.mean_cost = sum / n;
  const double variance =
      std::max(0.0, (sum_sq - sum * sum / n) / std::max(1.0, n - 1.0));
  mc.std_error = std::sqrt(variance / n);
  mc.mean_attempts = attempts / n;
  mc.undecided_fraction = static_cast<double>(undecided) / n;
  return mc;
}

int cmd_cost(const CostOpts& opts) {
  qle::OpticsParams params;
  params.gamma = opts.gamma;
  params.nu = opts.nu;
  params.validate();

  const double p2 = qle::p2_suc(params);
  const double p1 = qle::p1_suc(params);
  const double p = qle::p_suc(params);
  const double cost = qle::expected_cost(params);

  std::optional<CostMonteCarlo> mc;
  if (opts.trials > 0) {
    mc = run_cost_monte_carlo(params, opts.trials, opts.seed);
  }

  std::vector<std::pair<double, double>> curve;
  if (!opts.grid.empty()) {
    const auto points = grid_points(parse_grid(opts.grid));
    curve = qle::cost_curve(params.gamma, points);
  }

  std::ostringstream text;
  if (opts.format == "table") {
    text << "quantum leader-election communication cost\n";
    text << "  gamma " << general(params.gamma) << "   nu "
         << general(params.nu) << "\n\n";
    text << "  p2_suc (silent success, one party holds both photons)  "
         << fixed(p2, 6) << "\n";
    text << "  p1_suc (announced success, one photon each)            "
         << fixed(p1, 6) << "\n";
    text << "  p_suc  (success per attempt)                           "
         << fixed(p, 6) << "\n";
    text << "  expected cost N_quantum (qubits + bits)                "
         << fixed(cost, 6) << "\n";
    text << "  classical limit                                        4\n";
    if (mc) {
      text << "\n  monte carlo (" << opts.trials << " runs, seed "
           << opts.seed << ")\n";
      text << "    mean cost      " << fixed(mc->mean_cost, 4) << " +/- "
           << fixed(mc->std_error, 4) << " (1 sigma)\n";
      text << "    mean attempts  " << fixed(mc->mean_attempts, 4) << "\n";
      text << "    undecided      " << general(mc->undecided_fraction, 6)
           << "\n";
    }
    if (!curve.empty()) {
      text << "\n  nu        expected_cost\n";
      for (const auto& [nu, c] : curve) {
        char line[64];
        std::snprintf(line, sizeof(line), "  %-8s  %.6f\n",
                      general(nu, 6).c_str(), c);
        text << line;
      }
    }
  } else if (opts.format == "csv") {
    if (!curve.empty()) {
      text << "nu,expected_cost\n";
      for (const auto& [nu, c] : curve) {
        text << general(nu, 12) << ',' << general(c, 12) << "\n";
      }
    } else {
      text << "quantity,value\n";
      text << "gamma," << general(params.gamma, 12) << "\n";
      text << "nu," << general(params.nu, 12) << "\n";
      text << "p2_suc," << general(p2, 12) << "\n";
      text << "p1_suc," << general(p1, 12) << "\n";
      text << "p_suc," << general(p, 12) << "\n";
      text << "expected_cost," << general(cost, 12) << "\n";
      text << "classical_limit,4\n";
      if (mc) {
        text << "mc_trials," << opts.trials << "\n";
        text << "mc_mean_cost," << general(mc->mean_cost, 12) << "\n";
        text << "mc_std_error," << general(mc->std_error, 6) << "\n";
        text << "mc_mean_attempts," << general(mc->mean_attempts, 12) << "\n";
        text << "mc_undecided_fraction,"
             << general(mc->undecided_fraction, 6) << "\n";
      }
    }
  } else {
    json report;
    report["gamma"] = params.gamma;
    report["nu"] = params.nu;
    report["p2_suc"] = p2;
    report["p1_suc"] = p1;
    report["p_suc"] = p;
    report["expected_cost"] = cost;
    report["classical_limit"] = 4.0;
    if (mc) {
      report["monte_carlo"] = {{"trials", opts.trials},
                               {"seed", opts.seed},
                               {"mean_cost", mc->mean_cost},
                               {"std_error", mc->std_error},
                               {"mean_attempts", mc->mean_attempts},
                               {"undecided_fraction",
                                mc->undecided_fraction}};
    }
    if (!curve.empty()) {
      json rows = json::array();
      for (const auto& [nu, c] : curve) {
        rows.push_back({{"nu", nu}, {"expected_cost", c}});
      }
      report["curve"] = rows;
    }
    text << report.dump(2) << "\n";
  }
  deliver(text.str(), opts.out);
  return 0;
}

// ---------------------------------------------------------------------------
// classical

struct ClassicalOpts {
  int n = 1;
  double p = 0.5;
  long long trials = 0;
  std::uint64_t seed = 0;
  std::string format = "table";
  std::string out;
};

int cmd_classical(const ClassicalOpts& opts) {
  qle::ClassicalParams params;
  params.bits_per_round = opts.n;
  params.p_one = opts.p;
  params.validate();

  const double success = qle::classical_success_prob(opts.n, opts.p);
  const double cost_at_p = 2.0 * opts.n / success;
  const double best_p = qle::optimal_p(opts.n);
  const double cost_at_best = qle::expected_classical_cost(opts.n);

  struct MonteCarlo {
    double mean_bits = 0.0;
    double std_error = 0.0;
    double mean_rounds = 0.0;
    long long alice = 0;
    long long bob = 0;
    long long undecided = 0;
  };
  std::optional<MonteCarlo> mc;
  if (opts.trials > 0) {
    MonteCarlo result;
    double sum = 0.0;
    double sum_sq = 0.0;
    double rounds = 0.0;
    for (long long i = 0; i < opts.trials; ++i) {
      const auto ledger = qle::simulate_classical(
          params, qle::kDefaultMaxTrials,
          opts.seed + static_cast<std::uint64_t>(i));
      const double bits = static_cast<double>(ledger.total_classical_bits);
      sum += bits;
      sum_sq += bits * bits;
      rounds += static_cast<double>(ledger.trials);
      switch (ledger.elected) {
        case qle::Leader::alice: ++result.alice; break;
        case qle::Leader::bob: ++result.bob; break;
        case qle::Leader::none: ++result.undecided; break;
      }
    }
    const double n = static_cast<double>(opts.trials);
    result.mean_bits = sum / n;
    const double variance =
        std::max(0.0, (sum_sq - sum * sum / n) / std::max(1.0, n - 1.0));
    result.std_error = std::sqrt(variance / n);
    result.mean_rounds = rounds / n;
    mc = result;
  }

  std::ostringstream text;
  if (opts.format == "table") {
    text << "classical leader-election baseline\n";
    text << "  bits per round n  " << opts.n << "   bias p "
         << general(opts.p) << "\n\n";
    text << "  success probability per round  " << fixed(success, 6) << "\n";
    text << "  expected cost at this bias     " << fixed(cost_at_p, 6)
         << " bits\n";
    text << "  optimal bias                   " << general(best_p) << "\n";
    text << "  expected cost at optimal bias  " << fixed(cost_at_best, 6)
         << " bits\n";
    text << "  minimum over round lengths     4 bits (at n = 1)\n";
    if (mc) {
      text << "\n  monte carlo (" << opts.trials << " runs, seed "
           << opts.seed << ")\n";
      text << "    mean bits    " << fixed(mc->mean_bits, 4) << " +/- "
           << fixed(mc->std_error, 4) << " (1 sigma)\n";
      text << "    mean rounds  " << fixed(mc->mean_rounds, 4) << "\n";
      text << "    alice " << mc->alice << "   bob " << mc->bob
           << "   undecided " << mc->undecided << "\n";
    }
  } else if (opts.format == "csv") {
    text << "quantity,value\n";
    text << "bits_per_round," << opts.n << "\n";
    text << "p_one," << general(opts.p, 12) << "\n";
    text << "success_prob," << general(success, 12) << "\n";
    text << "expected_cost," << general(cost_at_p, 12) << "\n";
    text << "optimal_p," << general(best_p, 12) << "\n";
    text << "expected_cost_at_optimal," << general(cost_at_best, 12) << "\n";
    text << "minimum_cost,4\n";
    if (mc) {
      text << "mc_trials," << opts.trials << "\n";
      text << "mc_mean_bits," << general(mc->mean_bits, 12) << "\n";
      text << "mc_std_error," << general(mc->std_error, 6) << "\n";
      text << "mc_mean_rounds," << general(mc->mean_rounds, 12) << "\n";
      text << "mc_alice," << mc->alice << "\n";
      text << "mc_bob," << mc->bob << "\n";
      text << "mc_undecided," << mc->undecided << "\n";
    }
  } else {
    json report;
    report["bits_per_round"] = opts.n;
    report["p_one"] = opts.p;
    report["success_prob"] = success;
    report["expected_cost"] = cost_at_p;
    report["optimal_p"] = best_p;
    report["expected_cost_at_optimal"] = cost_at_best;
    report["minimum_cost"] = 4.0;
    if (mc) {
      report["monte_carlo"] = {{"trials", opts.trials},
                               {"seed", opts.seed},
                               {"mean_bits", mc->mean_bits},
                               {"std_error", mc->std_error},
                               {"mean_rounds", mc->mean_rounds},
                               {"alice", mc->alice},
                               {"bob", mc->bob},
                               {"undecided", mc->undecided}};
    }
    text << report.dump(2) << "\n";
  }
  deliver(text.str(), opts.out);
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string counts;
  std::string loss;
  double eta = 0.0;  // 0 means "not given"
  std::string format = "table";
  std::string out;
};

int cmd_analyze(const AnalyzeOpts& opts) {
  const qle::CountsTable counts = qle::load_counts_csv(opts.counts);

  std::optional<qle::LossBudget> budget;
  if (!opts.loss.empty()) budget = qle::load_loss_csv(opts.loss);

  double eta = 0.0;
  std::string eta_source;
  if (opts.eta > 0.0) {
    eta = opts.eta;
    eta_source = "--eta flag";
  } else if (budget) {
    eta = budget->eta();
    eta_source = "loss budget product";
  } else {
    throw std::runtime_error(
        "analyze needs --eta VALUE or --loss FILE to fix the heralding "
        "efficiency");
  }

  const qle::SuccessEstimate est = qle::empirical_success(counts, eta);
  const double fraction = qle::two_photon_fraction(eta);

  std::ostringstream text;
  if (opts.format == "table") {
    text << "detector-count analysis\n";
    if (budget) {
      text << "  loss budget (" << opts.loss << ")\n";
      for (const auto& [name, t] : budget->components) {
        char line[128];
        std::snprintf(line, sizeof(line), "    %-30s %.4f\n", name.c_str(),
                      t);
        text << line;
      }
      text << "    product                " << general(budget->eta(), 6)
           << "  (rounds to " << fixed(budget->eta(), 2) << ")\n";
    }
    text << "  eta (heralding efficiency)  " << general(eta, 6) << "  ["
         << eta_source << "]\n";
    text << "  two-photon fraction         " << general(fraction, 6)
         << "\n\n";
    text << "  singles   A1 " << counts.singles[0] << "   A2 "
         << counts.singles[1] << "   B1 " << counts.singles[2] << "   B2 "
         << counts.singles[3] << "   (total " << counts.singles_total()
         << ")\n\n";
    char line[160];
    std::snprintf(line, sizeof(line),
                  "  class i   (both photons, one detector)  %10.2f  "
                  "reconstructed from singles\n",
                  est.n_double);
    text << line;
    std::snprintf(line, sizeof(line),
                  "  class ii  (same-party coincidence)      %10.2f  "
                  "[A1&A2 %lld   B1&B2 %lld]\n",
                  est.n_same_party,
                  static_cast<long long>(
                      counts.pair(qle::Detector::A1, qle::Detector::A2)),
                  static_cast<long long>(
                      counts.pair(qle::Detector::B1, qle::Detector::B2)));
    text << line;
    std::snprintf(line, sizeof(line),
                  "  class iii (cross success)               %10.2f  "
                  "[A1&B2 %lld   A2&B1 %lld]\n",
                  est.n_cross_success,
                  static_cast<long long>(
                      counts.pair(qle::Detector::A1, qle::Detector::B2)),
                  static_cast<long long>(
                      counts.pair(qle::Detector::A2, qle::Detector::B1)));
    text << line;
    std::snprintf(line, sizeof(line),
                  "  class iv  (cross failure)               %10.2f  "
                  "[A1&B1 %lld   A2&B2 %lld]\n",
                  est.n_cross_failure,
                  static_cast<long long>(
                      counts.pair(qle::Detector::A1, qle::Detector::B1)),
                  static_cast<long long>(
                      counts.pair(qle::Detector::A2, qle::Detector::B2)));
    text << line;
    std::snprintf(line, sizeof(line), "  events total                %22.2f\n",
                  est.events_total);
    text << line;
    text << "\n  success probability  " << fixed(est.probability, 6)
         << " +/- " << fixed(est.standard_error, 6) << " (1 sigma)\n";
  } else if (opts.format == "csv") {
    text << "quantity,value\n";
    if (budget) {
      for (const auto& [name, t] : budget->components) {
        text << "loss." << name << ',' << general(t, 12) << "\n";
      }
    }
    text << "eta," << general(eta, 12) << "\n";
    text << "two_photon_fraction," << general(fraction, 12) << "\n";
    text << "singles_A1," << counts.singles[0] << "\n";
    text << "singles_A2," << counts.singles[1] << "\n";
    text << "singles_B1," << counts.singles[2] << "\n";
    text << "singles_B2," << counts.singles[3] << "\n";
    text << "n_class_i," << general(est.n_double, 12) << "\n";
    text << "n_class_ii," << general(est.n_same_party, 12) << "\n";
    text << "n_class_iii," << general(est.n_cross_success, 12) << "\n";
    text << "n_class_iv," << general(est.n_cross_failure, 12) << "\n";
    text << "events_total," << general(est.events_total, 12) << "\n";
    text << "success_probability," << general(est.probability, 12) << "\n";
    text << "standard_error," << general(est.standard_error, 6) << "\n";
  } else {
    json report;
    if (budget) {
      json rows = json::array();
      for (const auto& [name, t] : budget->components) {
        rows.push_back({{"component", name}, {"transmittance", t}});
      }
      report["loss_budget"] = rows;
      report["loss_product"] = budget->eta();
    }
    report["eta"] = eta;
    report["eta_source"] = eta_source;
    report["two_photon_fraction"] = fraction;
    report["singles"] = {{"A1", counts.singles[0]},
                         {"A2", counts.singles[1]},
                         {"B1", counts.singles[2]},
                         {"B2", counts.singles[3]}};
    report["classes"] = {{"i", est.n_double},
                         {"ii", est.n_same_party},
                         {"iii", est.n_cross_success},
                         {"iv", est.n_cross_failure}};
    report["events_total"] = est.events_total;
    report["success_probability"] = est.probability;
    report["standard_error"] = est.standard_error;
    text << report.dump(2) << "\n";
  }
  deliver(text.str(), opts.out);
  return 0;
}

// ---------------------------------------------------------------------------
// fringe

struct FringeOpts {
  double gamma = 1.0;
  double nu = 1.0;
  long long events = 10000;
  std::uint64_t seed = 0;
  bool expectation = false;
  std::string grid;
  std::string scan;
  std::string format = "table";
  std::string out;
};

int cmd_fringe(const FringeOpts& opts) {
  qle::FringeScan scan;
  bool generated = false;
  std::vector<double> points;
  if (!opts.scan.empty()) {
    scan = qle::load_fringe_csv(opts.scan);
  } else {
    GridSpec grid;
    if (opts.grid.empty()) {
      // Two full periods sampled at 40 points.
      grid.lo = 0.0;
      grid.hi = 4.0 * kPi;
      grid.step = 4.0 * kPi / 39.0;
    } else {
      grid = parse_grid(opts.grid);
    }
    points = grid_points(grid);
    qle::OpticsParams base;
    base.gamma = opts.gamma;
    base.nu = opts.nu;
    base.validate();
    qle::FringeOptions options;
    if (opts.events < 1 || opts.events > 100000000) {
      throw std::invalid_argument("--events must lie in [1, 1e8]");
    }
    options.events_per_point = static_cast<int>(opts.events);
    options.seed = opts.seed;
    options.expectation = opts.expectation;
    scan = qle::generate_fringe(base, points, options);
    generated = true;
  }

  if (!opts.out.empty()) {
    std::ofstream out(opts.out);
    if (!out) {
      throw std::runtime_error("cannot open output file \"" + opts.out +
                               "\"");
    }
    qle::write_fringe_csv(out, scan);
  }

  const qle::VisibilityFit fit = qle::fit_visibility(scan);
  const double nu_hat = std::clamp(fit.nu, 0.0, 1.0);
  const bool clamped = fit.nu > 1.0;
  qle::OpticsParams implied;
  implied.gamma = opts.gamma;
  implied.nu = nu_hat;
  const double implied_p = qle::p_suc(implied);
  const double implied_cost = qle::expected_cost(implied);

  std::ostringstream text;
  if (opts.format == "table") {
    text << "interference fringe visibility\n";
    if (generated) {
      text << "  generated scan: gamma " << general(opts.gamma) << "   nu "
           << general(opts.nu) << "   points " << scan.samples.size()
           << "   events/point " << opts.events << "   seed " << opts.seed
           << (opts.expectation ? "   (expectation mode)" : "") << "\n";
    } else {
      text << "  ingested scan: " << opts.scan << " (" << scan.samples.size()
           << " points)\n";
    }
    if (!opts.out.empty()) {
      text << "  scan CSV written to " << opts.out << "\n";
    }
    text << "\n  fitted nu          " << fixed(fit.nu, 4) << " +/- "
         << fixed(fit.uncertainty, 4) << " (95% half-width)\n";
    text << "  frequency          " << fixed(fit.frequency, 6) << "\n";
    text << "  phase offset       " << fixed(fit.phase_offset, 6) << "\n";
    text << "  amplitude iii      " << fixed(fit.amplitude_iii, 2) << "\n";
    text << "  amplitude iv       " << fixed(fit.amplitude_iv, 2) << "\n";
    text << "  residual rms       " << fixed(fit.residual_rms, 3) << "\n";
    text << "  iterations         " << fit.iterations << "\n";
    text << "\n  implied p_suc      " << fixed(implied_p, 4) << "  (at gamma "
         << general(opts.gamma) << (clamped ? ", nu clamped to 1" : "")
         << ")\n";
    text << "  implied N_quantum  " << fixed(implied_cost, 4) << "\n";
  } else if (opts.format == "csv") {
    text << "quantity,value\n";
    text << "points," << scan.samples.size() << "\n";
    text << "nu," << general(fit.nu, 12) << "\n";
    text << "uncertainty," << general(fit.uncertainty, 6) << "\n";
    text << "frequency," << general(fit.frequency, 12) << "\n";
    text << "phase_offset," << general(fit.phase_offset, 12) << "\n";
    text << "amplitude_iii," << general(fit.amplitude_iii, 12) << "\n";
    text << "amplitude_iv," << general(fit.amplitude_iv, 12) << "\n";
    text << "residual_rms," << general(fit.residual_rms, 6) << "\n";
    text << "iterations," << fit.iterations << "\n";
    text << "implied_gamma," << general(opts.gamma, 12) << "\n";
    text << "implied_p_suc," << general(implied_p, 12) << "\n";
    text << "implied_expected_cost," << general(implied_cost, 12) << "\n";
  } else {
    json report;
    if (generated) {
      report["generated"] = {{"gamma", opts.gamma},
                             {"nu", opts.nu},
                             {"points", scan.samples.size()},
                             {"events_per_point", opts.events},
                             {"seed", opts.seed},
                             {"expectation", opts.expectation}};
    } else {
      report["ingested"] = {{"path", opts.scan},
                            {"points", scan.samples.size()}};
    }
    report["fit"] = {{"nu", fit.nu},
                     {"uncertainty", fit.uncertainty},
                     {"frequency", fit.frequency},
                     {"phase_offset", fit.phase_offset},
                     {"amplitude_iii", fit.amplitude_iii},
                     {"amplitude_iv", fit.amplitude_iv},
                     {"residual_rms", fit.residual_rms},
                     {"iterations", fit.iterations}};
    report["implied"] = {{"gamma", opts.gamma},
                         {"nu", nu_hat},
                         {"nu_clamped", clamped},
                         {"p_suc", implied_p},
                         {"expected_cost", implied_cost}};
    text << report.dump(2) << "\n";
  }
  // --out carries the scan itself, so the report always goes to stdout.
  std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qle: simulator and analysis toolkit for optical two-party leader "
      "election"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qle 0.1.0");

  const std::vector<std::string> formats = {"table", "csv", "json"};
  const auto format_check = CLI::IsMember(formats);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Exact click-pattern distribution, optionally sampled");
  simulate->add_option("--gamma", sim.gamma,
                       "Beam-splitter branching ratio R/T (> 0)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--nu", sim.nu, "Photon indistinguishability in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simulate->add_option("--phase", sim.guest_phase,
                       "Guest phase shifter angle per party, radians")
      ->capture_default_str();
  simulate->add_option("--trials", sim.trials,
                       "Also sample this many detection events")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "Sampling seed")
      ->capture_default_str();
  simulate->add_option("--format", sim.format, "Output format")
      ->check(format_check)
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Write the report here (else stdout)");
  simulate->footer(
      "CSV columns: pattern,class,probability[,frequency,std_error]");

  CostOpts cost;
  auto* cost_cmd = app.add_subcommand(
      "cost", "Expected communication cost of the quantum protocol");
  cost_cmd->add_option("--gamma", cost.gamma,
                       "Beam-splitter branching ratio R/T (> 0)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cost_cmd->add_option("--nu", cost.nu, "Photon indistinguishability in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cost_cmd->add_option("--trials", cost.trials,
                       "Monte Carlo protocol runs (0 = closed form only)")
      ->check(CLI::NonNegativeNumber);
  cost_cmd->add_option("--seed", cost.seed, "Monte Carlo seed")
      ->capture_default_str();
  cost_cmd->add_option("--grid", cost.grid,
                       "nu sweep LO:HI:STEP for the cost curve");
  cost_cmd->add_option("--format", cost.format, "Output format")
      ->check(format_check)
      ->capture_default_str();
  cost_cmd->add_option("--out", cost.out,
                       "Write the report here (else stdout)");
  cost_cmd->footer(
      "CSV columns: quantity,value; with --grid: nu,expected_cost");

  ClassicalOpts classical;
  auto* classical_cmd =
      app.add_subcommand("classical", "Classical coin-flip baseline");
  classical_cmd->add_option("--n", classical.n, "Bits drawn per round (>= 1)")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  classical_cmd->add_option("--p", classical.p, "Bias P(bit = 1), in (0,1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  classical_cmd
      ->add_option("--trials", classical.trials,
                   "Monte Carlo elections (0 = closed form only)")
      ->check(CLI::NonNegativeNumber);
  classical_cmd->add_option("--seed", classical.seed, "Monte Carlo seed")
      ->capture_default_str();
  classical_cmd->add_option("--format", classical.format, "Output format")
      ->check(format_check)
      ->capture_default_str();
  classical_cmd->add_option("--out", classical.out,
                            "Write the report here (else stdout)");
  classical_cmd->footer("CSV columns: quantity,value");

  AnalyzeOpts analyze;
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Success probability from recorded detector counts");
  analyze_cmd
      ->add_option("--counts", analyze.counts,
                   "Counts CSV (detector,A1,A2,B1,B2 lower triangle)")
      ->required();
  analyze_cmd->add_option("--loss", analyze.loss,
                          "Loss budget CSV (component,transmittance)");
  analyze_cmd->add_option(
      "--eta", analyze.eta,
      "Heralding efficiency; overrides the loss budget product");
  analyze_cmd->add_option("--format", analyze.format, "Output format")
      ->check(format_check)
      ->capture_default_str();
  analyze_cmd->add_option("--out", analyze.out,
                          "Write the report here (else stdout)");
  analyze_cmd->footer("CSV columns: quantity,value");

  FringeOpts fringe;
  auto* fringe_cmd = app.add_subcommand(
      "fringe", "Generate or ingest a fringe scan and fit its visibility");
  fringe_cmd->add_option("--gamma", fringe.gamma,
                         "Beam-splitter branching ratio R/T (> 0)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fringe_cmd->add_option("--nu", fringe.nu,
                         "True indistinguishability for generation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  fringe_cmd->add_option("--events", fringe.events,
                         "Detection events per grid point")
      ->capture_default_str();
  fringe_cmd->add_option("--seed", fringe.seed, "Generation seed")
      ->capture_default_str();
  fringe_cmd->add_flag("--expectation", fringe.expectation,
                       "Emit exact expected counts instead of samples");
  fringe_cmd->add_option("--grid", fringe.grid,
                         "Phase-detuning grid LO:HI:STEP (default 0:4pi, 40 "
                         "points)");
  fringe_cmd->add_option("--scan", fringe.scan,
                         "Fit this fringe CSV instead of generating");
  fringe_cmd->add_option("--format", fringe.format, "Output format")
      ->check(format_check)
      ->capture_default_str();
  fringe_cmd->add_option("--out", fringe.out,
                         "Write the scan CSV here (both series)");
  fringe_cmd->footer(
      "Scan CSV columns: control,counts_iii,counts_iv; report CSV: "
      "quantity,value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (cost_cmd->parsed()) return cmd_cost(cost);
    if (classical_cmd->parsed()) return cmd_classical(classical);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze);
    if (fringe_cmd->parsed()) return cmd_fringe(fringe);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand selected\n";
  return 1;
}
