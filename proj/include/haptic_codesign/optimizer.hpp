#pragma once

// Two-level search for the smallest bandwidth meeting a reliability target:
// an inner search over bits per TTI at fixed bandwidth and an outer bisection
// on bandwidth. Also the multi-user admission built on single-user optima.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "haptic_codesign/reliability.hpp"

namespace hcd {

struct ToleranceRule {
  enum class Kind { squared, absolute };
  Kind kind = Kind::squared;
  double tau = 0.0;

  /// Acceptance band around the target: eps_max^2 for the squared rule.
  double band(double eps_max) const { return kind == Kind::squared ? eps_max * eps_max : tau; }

  bool operator==(const ToleranceRule&) const = default;
};

struct SearchConfig {
  double w_min_khz = 1.0;
  double w_max_khz = 1000.0;
  std::int64_t b_min = 1;
  std::int64_t b_max = 2000;
  std::int64_t b_step = 1;
  ToleranceRule tolerance;
  int max_iters = 64;
  bool verify_unimodality = false;  // scan the whole b-grid at every probe
  // Search only bits whose decoding error is at most 1/2, i.e. rates up to the
  // point where the normal approximation crosses capacity.
  bool cap_at_capacity = true;

  void validate() const {
    if (!(w_min_khz > 0.0 && w_max_khz > w_min_khz)) {
      throw std::invalid_argument("SearchConfig: need 0 < w_min_khz < w_max_khz");
    }
    if (!(b_min >= 1 && b_max >= b_min)) throw std::invalid_argument("SearchConfig: need 1 <= b_min <= b_max");
    if (b_step < 1) throw std::invalid_argument("SearchConfig: b_step must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("SearchConfig: max_iters must be >= 1");
    if (tolerance.kind == ToleranceRule::Kind::absolute && !(tolerance.tau >= 0.0)) {
      throw std::invalid_argument("SearchConfig: absolute tolerance must be >= 0");
    }
  }

  std::int64_t grid_size() const { return (b_max - b_min) / b_step + 1; }
  std::int64_t grid_bits(std::int64_t i) const { return b_min + i * b_step; }
};

/// Count sign changes of consecutive first differences. Differences within
/// rel_tol of the larger neighbour are treated as zero and skipped.
inline int count_sign_changes(const std::vector<double>& values, double rel_tol = 1e-12) {
  int changes = 0;
  int last_sign = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    const double scale = std::max(std::abs(values[i]), std::abs(values[i - 1]));
    if (std::abs(d) <= rel_tol * scale) continue;
    const int s = d > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++changes;
    last_sign = s;
  }
  return changes;
}

struct GridMinimum {
  std::int64_t index = 0;
  double value = 0.0;
  bool scanned = false;         // exhaustive scan was used
  bool unimodal_violation = false;
  std::int64_t evaluations = 0;
};

/**
 * Minimizes f over the integer indices [0, n) assuming f first decreases and
 * then increases. Ties go to the smaller index. Equal probes inside the
 * ternary search (plateaus) fall back to scanning the remaining interval.
 */
template <class F>
GridMinimum minimize_unimodal(F&& f, std::int64_t n, bool verify = false,
                              std::int64_t guard_samples = 33) {
  if (n < 1) throw std::invalid_argument("minimize_unimodal: empty grid");
  GridMinimum out;
  auto eval = [&](std::int64_t i) {
    ++out.evaluations;
    return static_cast<double>(f(i));
  };
  auto scan = [&](std::int64_t lo, std::int64_t hi) {
    out.scanned = true;
    std::int64_t best = lo;
    double best_v = eval(lo);
    for (std::int64_t i = lo + 1; i <= hi; ++i) {
      const double v = eval(i);
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    out.index = best;
    out.value = best_v;
  };

  if (verify) {
    std::vector<double> all(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = eval(i);
    out.unimodal_violation = count_sign_changes(all) > 1;
    out.scanned = true;
    const auto it = std::min_element(all.begin(), all.end());
    out.index = it - all.begin();
    out.value = *it;
    return out;
  }

  std::int64_t lo = 0, hi = n - 1;
  while (hi - lo > 3) {
    const std::int64_t m1 = lo + (hi - lo) / 3;
    const std::int64_t m2 = hi - (hi - lo) / 3;
    const double f1 = eval(m1), f2 = eval(m2);
    if (f1 < f2) {
      hi = m2 - 1;
    } else if (f1 > f2) {
      lo = m1 + 1;
    } else {
      scan(lo, hi);
      return out;
    }
  }
  scan(lo, hi);
  out.scanned = false;

  // Coarse guard: a second valley or a sampled point below the ternary answer
  // means the objective is not unimodal here, so scan everything.
  if (guard_samples > 1 && n > guard_samples) {
    std::vector<double> coarse;
    bool lower = false;
    for (std::int64_t k = 0; k < guard_samples; ++k) {
      const std::int64_t i = k * (n - 1) / (guard_samples - 1);
      const double v = eval(i);
      coarse.push_back(v);
      lower = lower || v < out.value;
    }
    if (lower || count_sign_changes(coarse) > 1) {
      out.unimodal_violation = true;
      scan(0, n - 1);
    }
  }
  return out;
}

struct BitsChoice {
  double bits = 0.0;
  double eps = 0.0;
  bool unimodal_violation = false;
};

/// Number of leading grid points with decoding error <= 1/2 (at least one).
/// The decoding error is non-decreasing in b, so this is a binary search.
inline std::int64_t decodable_grid_size(const LinkParams& link, double bandwidth_khz,
                                        const SearchConfig& cfg) {
  auto ok = [&](std::int64_t i) {
    return avg_decoding_error(link, bandwidth_khz, static_cast<double>(cfg.grid_bits(i))) <= 0.5;
  };
  std::int64_t lo = 0, hi = cfg.grid_size();  // ok on [0, lo), not ok on [hi, n)
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return std::max<std::int64_t>(lo, 1);
}

/// Minimizer of the overall-error bound over the integer bit grid at bandwidth W.
inline BitsChoice inner_opt_bits(const TaskSpec& task, const LinkParams& link,
                                 const TradeoffTable& table, double bandwidth_khz,
                                 const SearchConfig& cfg) {
  if (!(bandwidth_khz > 0.0)) throw std::domain_error("inner_opt_bits: bandwidth must be > 0");
  cfg.validate();
  auto objective = [&](std::int64_t i) {
    return overall_error_bound(task, link, table, bandwidth_khz,
                               static_cast<double>(cfg.grid_bits(i)))
        .total;
  };
  const std::int64_t n = cfg.cap_at_capacity ? decodable_grid_size(link, bandwidth_khz, cfg)
                                             : cfg.grid_size();
  const GridMinimum m = minimize_unimodal(objective, n, cfg.verify_unimodality);
  return {static_cast<double>(cfg.grid_bits(m.index)), m.value, m.unimodal_violation};
}

struct Probe {
  double bandwidth_khz = 0.0;
  double bits = 0.0;
  double eps = 0.0;
};

struct AllocationResult {
  double bandwidth_opt = 0.0;  // kHz
  double bits_opt = 0.0;
  ErrorBreakdown breakdown;
  bool feasible = false;
  int iterations = 0;
  int unimodality_violations = 0;
  std::vector<Probe> trace;
};

struct BisectionOutcome {
  double w = 0.0;
  Probe best;
  bool feasible = false;
  int iterations = 0;
  std::vector<Probe> trace;
};

/**
 * Bisection for the smallest W with eps(W) <= eps_max, eps non-increasing in W.
 * Stops when a probe lands inside the tolerance band or the interval falls
 * below 1 Hz, and returns the smallest probed feasible W.
 */
template <class F>
BisectionOutcome bisect_bandwidth(F&& probe_at, double eps_max, const SearchConfig& cfg) {
  cfg.validate();
  const double band = cfg.tolerance.band(eps_max);
  BisectionOutcome out;
  auto probe = [&](double w) {
    const Probe p = probe_at(w);
    out.trace.push_back(p);
    return p;
  };

  const Probe top = probe(cfg.w_max_khz);
  if (top.eps > eps_max + band) {
    out.w = cfg.w_max_khz;
    out.best = top;
    return out;
  }
  out.feasible = true;
  const Probe bottom = probe(cfg.w_min_khz);
  if (bottom.eps <= eps_max + band) {
    out.w = cfg.w_min_khz;
    out.best = bottom;
    return out;
  }

  double lo = cfg.w_min_khz, hi = cfg.w_max_khz;
  Probe best = top;
  constexpr double kOneHzInKhz = 1e-3;
  while (hi - lo >= kOneHzInKhz && out.iterations < cfg.max_iters) {
    const double mid = 0.5 * (lo + hi);
    const Probe p = probe(mid);
    ++out.iterations;
    if (std::abs(p.eps - eps_max) <= band) {
      best = p;
      break;
    }
    if (p.eps > eps_max) {
      lo = mid;
    } else {
      hi = mid;
      best = p;
    }
  }
  out.w = best.bandwidth_khz;
  out.best = best;
  return out;
}

/// Minimum bandwidth and matching bits meeting the task's reliability target.
inline AllocationResult outer_opt_bandwidth(const TaskSpec& task, const LinkParams& link,
                                            const TradeoffTable& table,
                                            const SearchConfig& cfg = {}) {
  task.validate();
  link.validate();
  int violations = 0;
  auto probe_at = [&](double w) {
    const BitsChoice c = inner_opt_bits(task, link, table, w, cfg);
    if (c.unimodal_violation) ++violations;
    return Probe{w, c.bits, c.eps};
  };
  BisectionOutcome b = bisect_bandwidth(probe_at, task.reliability_target, cfg);
  AllocationResult r;
  r.bandwidth_opt = b.w;
  r.bits_opt = b.best.bits;
  r.breakdown = overall_error_bound(task, link, table, b.w, b.best.bits);
  r.feasible = b.feasible;
  r.iterations = b.iterations;
  r.unimodality_violations = violations;
  r.trace = std::move(b.trace);
  return r;
}

enum class AllocationMode { task_oriented, task_agnostic };

struct UserAllocation {
  std::size_t task_index = 0;
  double bandwidth_khz = 0.0;  // infinity when the task cannot be served at all
  bool served = false;
};

struct MultiUserResult {
  std::vector<UserAllocation> allocations;
  std::size_t n_served = 0;
  double total_bw_khz = 0.0;  // bandwidth of the served prefix
};

/**
 * Prefix admission on orthogonal subchannels. own_optima_khz holds each task's
 * single-user W* (infinity if infeasible). In task-agnostic mode every task is
 * provisioned at agnostic_khz, by default the largest own optimum.
 */
inline MultiUserResult allocate_bandwidths(const std::vector<double>& own_optima_khz,
                                           double w_max_khz, AllocationMode mode,
                                           std::optional<double> agnostic_khz = std::nullopt) {
  if (!(w_max_khz > 0.0)) throw std::invalid_argument("allocate_bandwidths: w_max must be > 0");
  double common = 0.0;
  if (mode == AllocationMode::task_agnostic) {
    common = agnostic_khz ? *agnostic_khz
                          : (own_optima_khz.empty()
                                 ? 0.0
                                 : *std::max_element(own_optima_khz.begin(), own_optima_khz.end()));
  }
  MultiUserResult out;
  bool open = true;
  for (std::size_t i = 0; i < own_optima_khz.size(); ++i) {
    double w = mode == AllocationMode::task_oriented ? own_optima_khz[i] : common;
    if (mode == AllocationMode::task_agnostic && !std::isfinite(own_optima_khz[i])) {
      w = std::numeric_limits<double>::infinity();
    }
    UserAllocation a{i, w, false};
    if (open && out.total_bw_khz + w <= w_max_khz) {
      a.served = true;
      out.total_bw_khz += w;
      ++out.n_served;
    } else {
      open = false;
    }
    out.allocations.push_back(a);
  }
  return out;
}

/// Single-user optimum per distinct task, infinity when infeasible.
inline std::vector<double> single_user_optima(const std::vector<TaskSpec>& tasks,
                                              const LinkParams& link, const TradeoffTable& table,
                                              const SearchConfig& cfg) {
  std::vector<std::pair<TaskSpec, double>> cache;
  std::vector<double> out;
  for (const TaskSpec& t : tasks) {
    auto it = std::find_if(cache.begin(), cache.end(), [&](const auto& e) { return e.first == t; });
    if (it == cache.end()) {
      const AllocationResult r = outer_opt_bandwidth(t, link, table, cfg);
      cache.emplace_back(t, r.feasible ? r.bandwidth_opt : std::numeric_limits<double>::infinity());
      it = std::prev(cache.end());
    }
    out.push_back(it->second);
  }
  return out;
}

/**
 * Multi-user admission. The task-agnostic benchmark provisions every task at
 * the bandwidth of reference_task (the most demanding design); without one it
 * uses the largest optimum among the tasks given.
 */
inline MultiUserResult multi_user_allocate(const std::vector<TaskSpec>& tasks,
                                           const LinkParams& link, const TradeoffTable& table,
                                           double w_max_khz, AllocationMode mode,
                                           const SearchConfig& cfg = {},
                                           const std::optional<TaskSpec>& reference_task = {}) {
  const std::vector<double> optima = single_user_optima(tasks, link, table, cfg);
  std::optional<double> agnostic;
  if (reference_task) agnostic = single_user_optima({*reference_task}, link, table, cfg).front();
  return allocate_bandwidths(optima, w_max_khz, mode, agnostic);
}

/// Percent bandwidth saved by task-oriented over task-agnostic provisioning
/// for a critical-task ratio r.
inline double bandwidth_savings(double w_critical_khz, double w_noncritical_khz, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("bandwidth_savings: ratio must lie in [0,1]");
  if (!(w_critical_khz > 0.0 && w_noncritical_khz > 0.0)) {
    throw std::invalid_argument("bandwidth_savings: optima must be > 0");
  }
  return 100.0 * (1.0 - (ratio * w_critical_khz + (1.0 - ratio) * w_noncritical_khz) / w_critical_khz);
}

inline double bandwidth_savings(const TaskSpec& critical, const TaskSpec& non_critical,
                                const LinkParams& link, const TradeoffTable& table, double ratio,
                                const SearchConfig& cfg = {}) {
  const AllocationResult c = outer_opt_bandwidth(critical, link, table, cfg);
  const AllocationResult n = outer_opt_bandwidth(non_critical, link, table, cfg);
  if (!c.feasible || !n.feasible) throw std::domain_error("bandwidth_savings: a task class is infeasible");
  return bandwidth_savings(c.bandwidth_opt, n.bandwidth_opt, ratio);
}

}  // namespace hcd
