#include "qle/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"

namespace {
constexpr double kPi = 3.14159265358979323846;
}

namespace qle {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void fail(const std::string& message) {
  throw std::runtime_error(message);
}

std::string cell_label(int row, const std::string& column) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "row %d, column \"%s\"", row,
                column.c_str());
  return buf;
}

std::int64_t parse_count(const std::string& text, int row,
                         const std::string& column) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    if (value < 0) {
      fail("counts CSV " + cell_label(row, column) +
           ": counts must be non-negative, got \"" + text + "\"");
    }
    return value;
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception&) {
    fail("counts CSV " + cell_label(row, column) + ": cannot parse \"" + text +
         "\" as a count");
  }
}

double parse_real(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(value)) {
      throw std::invalid_argument(text);
    }
    return value;
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception&) {
    fail(context + ": cannot parse \"" + text + "\" as a number");
  }
}

/// Read the next non-empty line; returns false at end of stream.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!trim(line).empty()) return true;
  }
  return false;
}

constexpr std::array<const char*, 4> kDetectorNames = {"A1", "A2", "B1", "B2"};

}  // namespace

std::int64_t CountsTable::singles_total() const {
  std::int64_t total = 0;
  for (auto s : singles) total += s;
  return total;
}

CountsTable parse_counts_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) fail("counts CSV: empty input");
  const auto header = split_csv(line);
  const std::vector<std::string> expected = {"detector", "A1", "A2", "B1",
                                             "B2"};
  if (std::vector<std::string>(header.begin(), header.end()) != expected) {
    fail("counts CSV: header must be \"detector,A1,A2,B1,B2\", got \"" +
         trim(line) + "\"");
  }

  CountsTable table;
  for (int row = 0; row < 4; ++row) {
    if (!next_line(in, line)) {
      fail(std::string("counts CSV: missing row for detector ") +
           kDetectorNames[row]);
    }
    const auto cells = split_csv(line);
    const int line_number = row + 2;  // 1-based, after the header
    if (cells.empty() || cells[0] != kDetectorNames[row]) {
      fail("counts CSV row " + std::to_string(line_number) +
           ": expected detector \"" + kDetectorNames[row] + "\" first, got \"" +
           (cells.empty() ? "" : cells[0]) + "\"");
    }
    if (cells.size() > 5) {
      fail("counts CSV row " + std::to_string(line_number) +
           ": too many cells");
    }
    for (int col = 0; col < 4; ++col) {
      const std::string text =
          static_cast<std::size_t>(col + 1) < cells.size() ? cells[col + 1]
                                                           : std::string{};
      if (col > row) {
        if (!text.empty()) {
          fail("counts CSV " + cell_label(line_number, kDetectorNames[col]) +
               ": cells above the diagonal must stay empty");
        }
        continue;
      }
      if (text.empty()) {
        fail("counts CSV " + cell_label(line_number, kDetectorNames[col]) +
             ": missing count");
      }
      const std::int64_t value =
          parse_count(text, line_number, kDetectorNames[col]);
      if (col == row) {
        table.singles[row] = value;
      } else {
        table.coincidences[pair_index(static_cast<Detector>(row),
                                      static_cast<Detector>(col))] = value;
      }
    }
  }
  if (next_line(in, line)) {
    fail("counts CSV: unexpected extra row \"" + trim(line) + "\"");
  }
  return table;
}

CountsTable load_counts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open counts CSV \"" + path + "\"");
  return parse_counts_csv(in);
}

double LossBudget::eta() const {
  double product = 1.0;
  for (const auto& [name, transmittance] : components) {
    (void)name;
    product *= transmittance;
  }
  return product;
}

LossBudget parse_loss_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) fail("loss CSV: empty input");
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"component", "transmittance"}) {
    fail("loss CSV: header must be \"component,transmittance\", got \"" +
         trim(line) + "\"");
  }
  LossBudget budget;
  int line_number = 1;
  while (next_line(in, line)) {
    ++line_number;
    const auto cells = split_csv(line);
    if (cells.size() != 2 || cells[0].empty()) {
      fail("loss CSV row " + std::to_string(line_number) +
           ": expected \"component,transmittance\", got \"" + trim(line) +
           "\"");
    }
    const double value = parse_real(
        cells[1], "loss CSV row " + std::to_string(line_number) + " (\"" +
                      cells[0] + "\")");
    if (!(value > 0.0) || value > 1.0) {
      fail("loss CSV row " + std::to_string(line_number) + " (\"" + cells[0] +
           "\"): transmittance must lie in (0, 1], got " + cells[1]);
    }
    budget.components.emplace_back(cells[0], value);
  }
  if (budget.components.empty()) fail("loss CSV: no components listed");
  return budget;
}

LossBudget load_loss_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open loss CSV \"" + path + "\"");
  return parse_loss_csv(in);
}

double two_photon_fraction(double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument(
        "two_photon_fraction: eta must lie in (0, 1]");
  }
  return eta / (2.0 - eta);
}

SuccessEstimate empirical_success(const CountsTable& counts, double eta) {
  SuccessEstimate est;
  // Both photons at one detector produce a single threshold click, so the
  // class-i population hides inside the singles; scale the singles by the
  // odds that a registered event kept both photons.
  est.n_double = static_cast<double>(counts.singles_total()) *
                 two_photon_fraction(eta);
  est.n_same_party =
      static_cast<double>(counts.pair(Detector::A1, Detector::A2) +
                          counts.pair(Detector::B1, Detector::B2));
  est.n_cross_success =
      static_cast<double>(counts.pair(Detector::A1, Detector::B2) +
                          counts.pair(Detector::A2, Detector::B1));
  est.n_cross_failure =
      static_cast<double>(counts.pair(Detector::A1, Detector::B1) +
                          counts.pair(Detector::A2, Detector::B2));
  est.events_total =
      est.n_double + est.n_same_party + est.n_cross_success +
      est.n_cross_failure;
  if (!(est.events_total > 0.0)) {
    throw std::invalid_argument("empirical_success: no events in table");
  }
  const double failure_fraction = est.n_cross_failure / est.events_total;
  est.probability = 1.0 - failure_fraction;
  est.standard_error = std::sqrt(failure_fraction * (1.0 - failure_fraction) /
                                 est.events_total);
  return est;
}

FringeScan parse_fringe_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) fail("fringe CSV: empty input");
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"control", "counts_iii",
                                         "counts_iv"}) {
    fail("fringe CSV: header must be \"control,counts_iii,counts_iv\", got \"" +
         trim(line) + "\"");
  }
  FringeScan scan;
  int line_number = 1;
  while (next_line(in, line)) {
    ++line_number;
    const auto cells = split_csv(line);
    if (cells.size() != 3) {
      fail("fringe CSV row " + std::to_string(line_number) +
           ": expected 3 cells, got " + std::to_string(cells.size()));
    }
    const std::string context = "fringe CSV row " + std::to_string(line_number);
    FringeSample sample;
    sample.control = parse_real(cells[0], context + ", column \"control\"");
    sample.counts_iii =
        parse_real(cells[1], context + ", column \"counts_iii\"");
    sample.counts_iv = parse_real(cells[2], context + ", column \"counts_iv\"");
    if (sample.counts_iii < 0.0 || sample.counts_iv < 0.0) {
      fail(context + ": counts must be non-negative");
    }
    scan.samples.push_back(sample);
  }
  if (scan.samples.empty()) fail("fringe CSV: no samples");
  return scan;
}

FringeScan load_fringe_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open fringe CSV \"" + path + "\"");
  return parse_fringe_csv(in);
}

namespace {

void append_number(std::string& out, double value) {
  char buf[64];
  if (value == std::floor(value) && std::abs(value) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lld",
                  static_cast<long long>(std::llround(value)));
  } else {
    std::snprintf(buf, sizeof(buf), "%.10g", value);
  }
  out += buf;
}

}  // namespace

void write_fringe_csv(std::ostream& out, const FringeScan& scan) {
  out << "control,counts_iii,counts_iv\n";
  for (const auto& sample : scan.samples) {
    std::string line;
    append_number(line, sample.control);
    line += ',';
    append_number(line, sample.counts_iii);
    line += ',';
    append_number(line, sample.counts_iv);
    line += '\n';
    out << line;
  }
}

FringeScan generate_fringe(const OpticsParams& base,
                           std::span<const double> phase_grid,
                           const FringeOptions& options) {
  base.validate();
  if (phase_grid.empty()) {
    throw std::invalid_argument("generate_fringe: empty phase grid");
  }
  if (options.events_per_point < 1) {
    throw std::invalid_argument(
        "generate_fringe: events_per_point must be >= 1");
  }
  const DetectionPattern pattern_iii =
      coincidence_click(Detector::A1, Detector::B2);
  const DetectionPattern pattern_iv =
      coincidence_click(Detector::A2, Detector::B2);

  FringeScan scan;
  scan.samples.reserve(phase_grid.size());
  for (std::size_t i = 0; i < phase_grid.size(); ++i) {
    OpticsParams point = base;
    point.phase = phase_grid[i];
    const PatternDistribution dist = outcome_distribution(point);

    FringeSample sample;
    sample.control = phase_grid[i];
    if (options.expectation) {
      const double n = static_cast<double>(options.events_per_point);
      auto it = dist.find(pattern_iii);
      sample.counts_iii = it == dist.end() ? 0.0 : n * it->second;
      it = dist.find(pattern_iv);
      sample.counts_iv = it == dist.end() ? 0.0 : n * it->second;
    } else {
      // Flatten once, then draw the events for this grid point.
      std::vector<double> cdf;
      std::vector<const DetectionPattern*> patterns;
      cdf.reserve(dist.size());
      patterns.reserve(dist.size());
      double acc = 0.0;
      for (const auto& [pattern, prob] : dist) {
        acc += prob;
        cdf.push_back(acc);
        patterns.push_back(&pattern);
      }
      cdf.back() = 1.0;
      auto engine = detail::make_engine(options.seed, i);
      long long n_iii = 0;
      long long n_iv = 0;
      for (int event = 0; event < options.events_per_point; ++event) {
        const double u = detail::canonical(engine);
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const auto idx = static_cast<std::size_t>(
            it == cdf.end() ? cdf.size() - 1 : it - cdf.begin());
        if (*patterns[idx] == pattern_iii) {
          ++n_iii;
        } else if (*patterns[idx] == pattern_iv) {
          ++n_iv;
        }
      }
      sample.counts_iii = static_cast<double>(n_iii);
      sample.counts_iv = static_cast<double>(n_iv);
    }
    scan.samples.push_back(sample);
  }
  return scan;
}

namespace {

struct FitParams {
  double a1 = 0.0;
  double a2 = 0.0;
  double nu = 0.0;
  double w = 1.0;
  double phi = 0.0;
};

double model_value(const FitParams& p, double x, int sign) {
  const double c = std::cos(p.w * x + p.phi);
  return sign > 0 ? p.a1 * (1.0 + p.nu * c) : p.a2 * (1.0 - p.nu * c);
}

double sum_squared_error(const FitParams& p, const FringeScan& scan) {
  double s = 0.0;
  for (const auto& sample : scan.samples) {
    const double r1 = model_value(p, sample.control, +1) - sample.counts_iii;
    const double r2 = model_value(p, sample.control, -1) - sample.counts_iv;
    s += r1 * r1 + r2 * r2;
  }
  return s;
}

/// Normal-equation pieces of the least-squares problem at p.
void accumulate(const FitParams& p, const FringeScan& scan, double jtj[5][5],
                double jtr[5]) {
  for (int i = 0; i < 5; ++i) {
    jtr[i] = 0.0;
    for (int j = 0; j < 5; ++j) jtj[i][j] = 0.0;
  }
  for (const auto& sample : scan.samples) {
    const double x = sample.control;
    const double c = std::cos(p.w * x + p.phi);
    const double s = std::sin(p.w * x + p.phi);
    // Series iii row, then series iv row.
    const double rows[2][5] = {
        {1.0 + p.nu * c, 0.0, p.a1 * c, -p.a1 * p.nu * x * s,
         -p.a1 * p.nu * s},
        {0.0, 1.0 - p.nu * c, -p.a2 * c, p.a2 * p.nu * x * s,
         p.a2 * p.nu * s},
    };
    const double residuals[2] = {
        model_value(p, x, +1) - sample.counts_iii,
        model_value(p, x, -1) - sample.counts_iv,
    };
    for (int r = 0; r < 2; ++r) {
      for (int i = 0; i < 5; ++i) {
        jtr[i] += rows[r][i] * residuals[r];
        for (int j = 0; j < 5; ++j) jtj[i][j] += rows[r][i] * rows[r][j];
      }
    }
  }
}

/// Gauss-Jordan solve of A x = b with partial pivoting; false when singular.
bool solve5(double a[5][5], double b[5], double x[5]) {
  double m[5][6];
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) m[i][j] = a[i][j];
    m[i][5] = b[i];
  }
  for (int col = 0; col < 5; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 5; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (std::abs(m[pivot][col]) < 1e-300) return false;
    if (pivot != col) {
      for (int j = 0; j < 6; ++j) std::swap(m[pivot][j], m[col][j]);
    }
    const double inv = 1.0 / m[col][col];
    for (int j = 0; j < 6; ++j) m[col][j] *= inv;
    for (int row = 0; row < 5; ++row) {
      if (row == col) continue;
      const double factor = m[row][col];
      if (factor == 0.0) continue;
      for (int j = 0; j < 6; ++j) m[row][j] -= factor * m[col][j];
    }
  }
  for (int i = 0; i < 5; ++i) x[i] = m[i][5];
  return true;
}

/// Invert a 5x5 symmetric matrix; false when singular.
bool invert5(const double a[5][5], double inv[5][5]) {
  double m[5][10];
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      m[i][j] = a[i][j];
      m[i][j + 5] = i == j ? 1.0 : 0.0;
    }
  }
  for (int col = 0; col < 5; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 5; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (std::abs(m[pivot][col]) < 1e-300) return false;
    if (pivot != col) {
      for (int j = 0; j < 10; ++j) std::swap(m[pivot][j], m[col][j]);
    }
    const double scale = 1.0 / m[col][col];
    for (int j = 0; j < 10; ++j) m[col][j] *= scale;
    for (int row = 0; row < 5; ++row) {
      if (row == col) continue;
      const double factor = m[row][col];
      if (factor == 0.0) continue;
      for (int j = 0; j < 10; ++j) m[row][j] -= factor * m[col][j];
    }
  }
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) inv[i][j] = m[i][j + 5];
  }
  return true;
}

/// Linear least squares of y on {1, cos(w x), sin(w x)}; returns the SSE and
/// fills coef.  Degenerate designs report an infinite SSE.
double harmonic_fit(const FringeScan& scan, double w, bool series_iii,
                    double coef[3]) {
  double ata[3][3] = {};
  double aty[3] = {};
  for (const auto& sample : scan.samples) {
    const double basis[3] = {1.0, std::cos(w * sample.control),
                             std::sin(w * sample.control)};
    const double y = series_iii ? sample.counts_iii : sample.counts_iv;
    for (int i = 0; i < 3; ++i) {
      aty[i] += basis[i] * y;
      for (int j = 0; j < 3; ++j) ata[i][j] += basis[i] * basis[j];
    }
  }
  // Solve the 3x3 system by Gaussian elimination with pivoting.
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = ata[i][j];
    m[i][3] = aty[i];
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (std::abs(m[pivot][col]) < 1e-12) {
      return std::numeric_limits<double>::infinity();
    }
    if (pivot != col) {
      for (int j = 0; j < 4; ++j) std::swap(m[pivot][j], m[col][j]);
    }
    const double inv = 1.0 / m[col][col];
    for (int j = 0; j < 4; ++j) m[col][j] *= inv;
    for (int row = 0; row < 3; ++row) {
      if (row == col) continue;
      const double factor = m[row][col];
      for (int j = 0; j < 4; ++j) m[row][j] -= factor * m[col][j];
    }
  }
  for (int i = 0; i < 3; ++i) coef[i] = m[i][3];
  double sse = 0.0;
  for (const auto& sample : scan.samples) {
    const double predicted = coef[0] + coef[1] * std::cos(w * sample.control) +
                             coef[2] * std::sin(w * sample.control);
    const double y = series_iii ? sample.counts_iii : sample.counts_iv;
    const double r = predicted - y;
    sse += r * r;
  }
  return sse;
}

double wrap_angle(double phi) {
  phi = std::fmod(phi, 2.0 * kPi);
  if (phi <= -kPi) phi += 2.0 * kPi;
  if (phi > kPi) phi -= 2.0 * kPi;
  return phi;
}

FitParams initial_guess(const FringeScan& scan) {
  double lo = scan.samples.front().control;
  double hi = lo;
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<double> xs;
  xs.reserve(scan.samples.size());
  for (const auto& sample : scan.samples) {
    lo = std::min(lo, sample.control);
    hi = std::max(hi, sample.control);
    xs.push_back(sample.control);
  }
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double gap = xs[i] - xs[i - 1];
    if (gap > 1e-12) min_gap = std::min(min_gap, gap);
  }
  const double span = hi - lo;
  if (!(span > 0.0) || !std::isfinite(min_gap)) {
    throw std::invalid_argument(
        "fit_visibility: control values must not all coincide");
  }

  const double w_min = 2.0 * kPi / (8.0 * span);
  const double w_max = 0.95 * kPi / min_gap;
  const int trials = 256;
  double best_w = 1.0;
  double best_sse = std::numeric_limits<double>::infinity();
  double best_iii[3] = {0.0, 0.0, 0.0};
  double best_iv[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < trials; ++k) {
    const double w =
        w_min + (w_max - w_min) * static_cast<double>(k) / (trials - 1);
    double coef_iii[3];
    double coef_iv[3];
    const double sse = harmonic_fit(scan, w, true, coef_iii) +
                       harmonic_fit(scan, w, false, coef_iv);
    if (sse < best_sse) {
      best_sse = sse;
      best_w = w;
      for (int i = 0; i < 3; ++i) {
        best_iii[i] = coef_iii[i];
        best_iv[i] = coef_iv[i];
      }
    }
  }

  FitParams p;
  double mean_iii = 0.0;
  double mean_iv = 0.0;
  for (const auto& sample : scan.samples) {
    mean_iii += sample.counts_iii;
    mean_iv += sample.counts_iv;
  }
  mean_iii /= static_cast<double>(scan.samples.size());
  mean_iv /= static_cast<double>(scan.samples.size());
  p.a1 = best_iii[0] > 0.0 ? best_iii[0] : std::max(mean_iii, 1e-6);
  p.a2 = best_iv[0] > 0.0 ? best_iv[0] : std::max(mean_iv, 1e-6);
  p.w = best_w;

  // iii carries +A1 nu cos(wx+phi): cos coefficient A1 nu cos(phi), sin
  // coefficient -A1 nu sin(phi).  iv carries the opposite sign.
  const double amp_iii = std::hypot(best_iii[1], best_iii[2]);
  const double amp_iv = std::hypot(best_iv[1], best_iv[2]);
  const double phi_iii = std::atan2(-best_iii[2], best_iii[1]);
  const double phi_iv = std::atan2(best_iv[2], -best_iv[1]);
  const double weight_sin =
      amp_iii * std::sin(phi_iii) + amp_iv * std::sin(phi_iv);
  const double weight_cos =
      amp_iii * std::cos(phi_iii) + amp_iv * std::cos(phi_iv);
  p.phi = (weight_sin == 0.0 && weight_cos == 0.0)
              ? 0.0
              : std::atan2(weight_sin, weight_cos);
  const double nu_iii = amp_iii / std::max(p.a1, 1e-12);
  const double nu_iv = amp_iv / std::max(p.a2, 1e-12);
  p.nu = std::clamp(0.5 * (nu_iii + nu_iv), 0.0, 1.2);
  return p;
}

}  // namespace

double fringe_model(const VisibilityFit& fit, double x, int sign) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("fringe_model: sign must be +1 or -1");
  }
  FitParams p;
  p.a1 = fit.amplitude_iii;
  p.a2 = fit.amplitude_iv;
  p.nu = fit.nu;
  p.w = fit.frequency;
  p.phi = fit.phase_offset;
  return model_value(p, x, sign);
}

VisibilityFit fit_visibility(const FringeScan& scan) {
  if (scan.samples.size() < 5) {
    throw std::invalid_argument(
        "fit_visibility: need at least five samples");
  }
  for (const auto& sample : scan.samples) {
    if (!std::isfinite(sample.control) || !std::isfinite(sample.counts_iii) ||
        !std::isfinite(sample.counts_iv)) {
      throw std::invalid_argument(
          "fit_visibility: samples must be finite");
    }
  }

  FitParams p = initial_guess(scan);
  double sse = sum_squared_error(p, scan);
  double lambda = 1e-3;
  int iterations = 0;
  const int max_iterations = 500;
  bool converged = false;
  for (; iterations < max_iterations; ++iterations) {
    double jtj[5][5];
    double jtr[5];
    accumulate(p, scan, jtj, jtr);

    bool stepped = false;
    while (lambda < 1e14) {
      double damped[5][5];
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) damped[i][j] = jtj[i][j];
        damped[i][i] *= 1.0 + lambda;
        if (damped[i][i] == 0.0) damped[i][i] = lambda;
      }
      double rhs[5];
      for (int i = 0; i < 5; ++i) rhs[i] = -jtr[i];
      double step[5];
      if (!solve5(damped, rhs, step)) {
        lambda *= 10.0;
        continue;
      }
      FitParams trial = p;
      trial.a1 += step[0];
      trial.a2 += step[1];
      trial.nu += step[2];
      trial.w += step[3];
      trial.phi += step[4];
      const double trial_sse = sum_squared_error(trial, scan);
      if (std::isfinite(trial_sse) && trial_sse <= sse) {
        const double improvement = sse - trial_sse;
        p = trial;
        sse = trial_sse;
        lambda = std::max(lambda * 0.1, 1e-12);
        stepped = true;
        if (improvement <= 1e-10 * (sse + 1e-30)) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped || converged) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error("fit_visibility: did not converge");
  }

  // Canonical form: positive frequency, non-negative visibility.
  if (p.w < 0.0) {
    p.w = -p.w;
    p.phi = -p.phi;
  }
  if (p.nu < 0.0) {
    p.nu = -p.nu;
    p.phi += kPi;
  }
  p.phi = wrap_angle(p.phi);

  VisibilityFit fit;
  fit.nu = p.nu;
  fit.amplitude_iii = p.a1;
  fit.amplitude_iv = p.a2;
  fit.frequency = p.w;
  fit.phase_offset = p.phi;
  fit.iterations = iterations;
  const double n_residuals = 2.0 * static_cast<double>(scan.samples.size());
  fit.residual_rms = std::sqrt(sse / n_residuals);

  const double dof = n_residuals - 5.0;
  double jtj[5][5];
  double jtr[5];
  accumulate(p, scan, jtj, jtr);
  double cov[5][5];
  // With no resolvable modulation the frequency and phase are unconstrained,
  // so the residual-based error estimate says nothing about the visibility.
  const bool resolvable = fit.nu > 1e-6;
  if (resolvable && dof > 0.0 && invert5(jtj, cov) && cov[2][2] > 0.0) {
    const double sigma2 = sse / dof;
    // Report a 95% half-width so the quoted band covers the truth in at
    // least 95% of repeated scans.
    fit.uncertainty = 2.0 * std::sqrt(sigma2 * cov[2][2]);
  } else {
    fit.uncertainty = 1.0;  // visibility unidentifiable (e.g. flat data)
  }
  return fit;
}

}  // namespace qle
