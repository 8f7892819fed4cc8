#pragma once

// Empirical prediction-error surface f_p(horizon, JND threshold) served as a
// monotone, bilinearly interpolated lookup table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcd {

enum class LookupMode { clamp, strict };

struct LookupResult {
  double value = 0.0;
  bool clamped = false;  // query fell outside the grid and was moved to its edge
};

class TableFormatError : public std::runtime_error {
 public:
  TableFormatError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("table file line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class TradeoffTable {
 public:
  TradeoffTable() = default;

  /// eps and counts are row-major: horizon outer, delta inner.
  TradeoffTable(std::vector<double> horizons_ms, std::vector<double> deltas_pct,
                std::vector<double> eps, std::vector<std::uint64_t> counts = {})
      : horizons_(std::move(horizons_ms)),
        deltas_(std::move(deltas_pct)),
        eps_(std::move(eps)),
        counts_(std::move(counts)) {
    if (horizons_.empty() || deltas_.empty()) {
      throw std::invalid_argument("TradeoffTable: grids must be non-empty");
    }
    for (std::size_t i = 1; i < horizons_.size(); ++i) {
      if (!(horizons_[i] > horizons_[i - 1])) {
        throw std::invalid_argument("TradeoffTable: horizons must be strictly increasing");
      }
    }
    for (std::size_t j = 0; j < deltas_.size(); ++j) {
      if (!(deltas_[j] > 0.0)) throw std::invalid_argument("TradeoffTable: deltas must be > 0");
      if (j > 0 && !(deltas_[j] > deltas_[j - 1])) {
        throw std::invalid_argument("TradeoffTable: deltas must be strictly increasing");
      }
    }
    if (eps_.size() != horizons_.size() * deltas_.size()) {
      throw std::invalid_argument("TradeoffTable: eps has wrong size");
    }
    for (double p : eps_) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("TradeoffTable: eps outside [0,1]");
    }
    if (counts_.empty()) counts_.assign(eps_.size(), 0);
    if (counts_.size() != eps_.size()) {
      throw std::invalid_argument("TradeoffTable: counts has wrong size");
    }
    floored_.assign(eps_.size(), false);
  }

  const std::vector<double>& horizons() const { return horizons_; }
  const std::vector<double>& deltas() const { return deltas_; }
  const std::vector<double>& eps() const { return eps_; }
  const std::vector<std::uint64_t>& sample_counts() const { return counts_; }
  const std::vector<bool>& floored() const { return floored_; }

  std::size_t index(std::size_t h, std::size_t d) const { return h * deltas_.size() + d; }
  double at(std::size_t h, std::size_t d) const { return eps_[index(h, d)]; }
  double& at(std::size_t h, std::size_t d) { return eps_[index(h, d)]; }
  void set_floored(std::size_t h, std::size_t d, bool v) { floored_[index(h, d)] = v; }

  /// Non-decreasing along horizons and non-increasing along deltas.
  bool is_monotone(double tol = 0.0) const {
    for (std::size_t h = 0; h < horizons_.size(); ++h) {
      for (std::size_t d = 0; d < deltas_.size(); ++d) {
        if (h > 0 && at(h, d) + tol < at(h - 1, d)) return false;
        if (d > 0 && at(h, d) > at(h, d - 1) + tol) return false;
      }
    }
    return true;
  }

  /// Bilinear interpolation in (horizon, log10 delta).
  LookupResult lookup(double horizon_ms, double delta_pct,
                      LookupMode mode = LookupMode::clamp) const {
    if (!(delta_pct > 0.0)) throw std::domain_error("TradeoffTable::lookup: delta must be > 0");
    LookupResult r;
    const bool outside = horizon_ms < horizons_.front() || horizon_ms > horizons_.back() ||
                         delta_pct < deltas_.front() || delta_pct > deltas_.back();
    if (outside) {
      if (mode == LookupMode::strict) {
        throw std::out_of_range("TradeoffTable::lookup: (" + std::to_string(horizon_ms) + " ms, " +
                                std::to_string(delta_pct) + " %) outside table grid");
      }
      r.clamped = true;
    }
    const double h = std::clamp(horizon_ms, horizons_.front(), horizons_.back());
    const double d = std::log10(std::clamp(delta_pct, deltas_.front(), deltas_.back()));

    const auto [h0, th] = bracket(horizons_, h, false);
    const auto [d0, td] = bracket(deltas_, d, true);
    const std::size_t h1 = std::min(h0 + 1, horizons_.size() - 1);
    const std::size_t d1 = std::min(d0 + 1, deltas_.size() - 1);
    const double v00 = at(h0, d0), v01 = at(h0, d1), v10 = at(h1, d0), v11 = at(h1, d1);
    r.value = (1.0 - th) * ((1.0 - td) * v00 + td * v01) + th * ((1.0 - td) * v10 + td * v11);
    return r;
  }

 private:
  // Returns the lower node index and the fractional position within the cell.
  static std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double x,
                                                bool log_axis) {
    if (grid.size() == 1) return {0, 0.0};
    auto it = std::upper_bound(grid.begin(), grid.end(), log_axis ? std::pow(10.0, x) : x);
    std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    if (hi == 0) return {0, 0.0};
    if (hi >= grid.size()) return {grid.size() - 1, 0.0};
    const std::size_t lo = hi - 1;
    const double a = log_axis ? std::log10(grid[lo]) : grid[lo];
    const double b = log_axis ? std::log10(grid[hi]) : grid[hi];
    return {lo, std::clamp((x - a) / (b - a), 0.0, 1.0)};
  }

  std::vector<double> horizons_;
  std::vector<double> deltas_;
  std::vector<double> eps_;
  std::vector<std::uint64_t> counts_;
  std::vector<bool> floored_;
};

/// Pool-adjacent-violators: least-squares non-decreasing fit, equal weights.
inline void pava_non_decreasing(std::span<double> values) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& last = blocks.back();
      const Block& prev = blocks[blocks.size() - 2];
      if (prev.sum / static_cast<double>(prev.count) <= last.sum / static_cast<double>(last.count)) {
        break;
      }
      const Block merged{prev.sum + last.sum, prev.count + last.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::size_t k = 0;
  for (const Block& b : blocks) {
    const double mean = b.sum / static_cast<double>(b.count);
    for (std::size_t i = 0; i < b.count; ++i) values[k++] = mean;
  }
}

struct ProjectionReport {
  double max_shift = 0.0;  // largest absolute change of any cell
  int sweeps = 0;
};

/**
 * Projects the table onto {non-decreasing in horizon, non-increasing in delta}
 * by alternating PAVA along both axes. Tables built from nested exceedance
 * counts are already monotone in delta and converge after one sweep.
 */
inline ProjectionReport isotonic_project(TradeoffTable& table) {
  const std::size_t nh = table.horizons().size();
  const std::size_t nd = table.deltas().size();
  const std::vector<double> before = table.eps();
  ProjectionReport report;
  std::vector<double> line;
  for (int sweep = 0; sweep < 200 && !table.is_monotone(); ++sweep) {
    report.sweeps = sweep + 1;
    for (std::size_t d = 0; d < nd; ++d) {
      line.resize(nh);
      for (std::size_t h = 0; h < nh; ++h) line[h] = table.at(h, d);
      pava_non_decreasing(line);
      for (std::size_t h = 0; h < nh; ++h) table.at(h, d) = line[h];
    }
    for (std::size_t h = 0; h < nh; ++h) {
      line.resize(nd);
      // non-increasing in delta == non-decreasing in reversed order
      for (std::size_t d = 0; d < nd; ++d) line[d] = table.at(h, nd - 1 - d);
      pava_non_decreasing(line);
      for (std::size_t d = 0; d < nd; ++d) table.at(h, nd - 1 - d) = line[d];
    }
  }
  for (std::size_t i = 0; i < before.size(); ++i) {
    report.max_shift = std::max(report.max_shift, std::abs(table.eps()[i] - before[i]));
  }
  return report;
}

inline std::string format_probability(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

inline constexpr const char* kTableHeader = "horizon_ms,delta_pct,eps_p,n";

/// Writes the CSV table format. An optional comment line precedes the header.
inline void save_table(const TradeoffTable& table, std::ostream& out,
                       const std::string& comment = {}) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kTableHeader << '\n';
  for (std::size_t h = 0; h < table.horizons().size(); ++h) {
    for (std::size_t d = 0; d < table.deltas().size(); ++d) {
      out << format_probability(table.horizons()[h]) << ','
          << format_probability(table.deltas()[d]) << ',' << format_probability(table.at(h, d))
          << ',' << table.sample_counts()[table.index(h, d)] << '\n';
    }
  }
}

inline void save_table(const TradeoffTable& table, const std::string& path,
                       const std::string& comment = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_table(table, out, comment);
}

/**
 * Reads the CSV table format. Lines starting with '#' are ignored.
 * In strict mode a non-monotone table is rejected; otherwise it is projected.
 */
inline TradeoffTable load_table(std::istream& in, bool strict = false) {
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> hs, ds, eps;
  std::vector<std::uint64_t> ns;

  auto parse_double = [&](const std::string& field, std::size_t col) {
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw TableFormatError(line_no, col, "expected a number, got '" + field + "'");
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    if (!header_seen) {
      if (raw != kTableHeader) {
        throw TableFormatError(line_no, 1, std::string("expected header '") + kTableHeader + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::vector<std::size_t> columns;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = raw.find(',', start);
      fields.push_back(raw.substr(start, comma - start));
      columns.push_back(start + 1);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) {
      throw TableFormatError(line_no, 1, "expected 4 fields, got " + std::to_string(fields.size()));
    }
    hs.push_back(parse_double(fields[0], columns[0]));
    ds.push_back(parse_double(fields[1], columns[1]));
    const double p = parse_double(fields[2], columns[2]);
    if (!(p >= 0.0 && p <= 1.0)) throw TableFormatError(line_no, columns[2], "eps_p outside [0,1]");
    eps.push_back(p);
    const double n = parse_double(fields[3], columns[3]);
    if (n < 0.0 || n != std::floor(n)) {
      throw TableFormatError(line_no, columns[3], "n must be a non-negative integer");
    }
    ns.push_back(static_cast<std::uint64_t>(n));
  }
  if (!header_seen) throw TableFormatError(line_no + 1, 1, "missing header");
  if (eps.empty()) throw TableFormatError(line_no + 1, 1, "table has no rows");

  // Recover the grids from row-major order.
  std::vector<double> deltas;
  for (std::size_t i = 0; i < ds.size() && (i == 0 || hs[i] == hs[0]); ++i) deltas.push_back(ds[i]);
  const std::size_t nd = deltas.size();
  if (eps.size() % nd != 0) throw TableFormatError(line_no, 1, "row count is not a full grid");
  std::vector<double> horizons;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (hs[i] != hs[i - i % nd] || ds[i] != deltas[i % nd]) {
      throw TableFormatError(i + 1, 1, "rows are not in horizon-major grid order");
    }
    if (i % nd == 0) horizons.push_back(hs[i]);
  }
  TradeoffTable table;
  try {
    table = TradeoffTable(horizons, deltas, eps, ns);
  } catch (const std::invalid_argument& e) {
    throw TableFormatError(line_no, 1, e.what());
  }
  if (!table.is_monotone()) {
    if (strict) throw TableFormatError(line_no, 1, "table is not monotone in horizon and delta");
    isotonic_project(table);
  }
  return table;
}

inline TradeoffTable load_table(const std::string& path, bool strict = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open table file " + path);
  return load_table(in, strict);
}

/// Parametric surface log10 f = log10_p_ref + slope_per_ms * T + delta_exponent * log10(delta_ref / delta), capped at 1.
struct StipulatedSurface {
  double log10_p_ref = -4.56;
  double slope_per_ms = 0.002;
  double delta_exponent = 4.45;
  double delta_ref_pct = 1.0;

  double operator()(double horizon_ms, double delta_pct) const {
    const double l = log10_p_ref + slope_per_ms * horizon_ms +
                     delta_exponent * std::log10(delta_ref_pct / delta_pct);
    return std::min(1.0, std::pow(10.0, l));
  }
};

/// Samples a surface on a grid. Used for fixtures and for analysis without a trained predictor.
template <class Surface>
TradeoffTable tabulate(const Surface& surface, const std::vector<double>& horizons_ms,
                       const std::vector<double>& deltas_pct) {
  std::vector<double> eps;
  eps.reserve(horizons_ms.size() * deltas_pct.size());
  for (double h : horizons_ms) {
    for (double d : deltas_pct) eps.push_back(std::clamp(surface(h, d), 0.0, 1.0));
  }
  return TradeoffTable(horizons_ms, deltas_pct, std::move(eps));
}

inline std::vector<double> default_horizon_grid_ms() {
  std::vector<double> h;
  for (int t = 0; t <= 100; ++t) h.push_back(t);
  return h;
}

inline std::vector<double> default_delta_grid_pct() {
  return {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
}

}  // namespace hcd
