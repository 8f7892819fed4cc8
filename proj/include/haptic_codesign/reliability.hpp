#pragma once

// Composition of prediction, decoding and queuing errors into the
// three-case user-experienced delay and the overall-error upper bound.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "haptic_codesign/comm_model.hpp"
#include "haptic_codesign/tradeoff_table.hpp"

namespace hcd {

enum class Criticality { critical, non_critical };

struct TaskSpec {
  double delay_bound_ms = 20.0;
  double reliability_target = 1e-5;
  double jnd_threshold_pct = 1.0;
  double arrival_rate = 100.0;  // packets/s
  double packet_bits = 1.0;     // bits per arrival, see QueueLaw
  Criticality criticality = Criticality::non_critical;

  void validate() const {
    if (!(delay_bound_ms > 0.0)) throw std::invalid_argument("TaskSpec: delay_bound_ms must be > 0");
    if (!(reliability_target > 0.0 && reliability_target < 1.0)) {
      throw std::invalid_argument("TaskSpec: reliability_target must lie in (0,1)");
    }
    if (!(jnd_threshold_pct > 0.0)) throw std::invalid_argument("TaskSpec: jnd_threshold_pct must be > 0");
    if (!(arrival_rate > 0.0)) throw std::invalid_argument("TaskSpec: arrival_rate must be > 0");
    if (!(packet_bits > 0.0)) throw std::invalid_argument("TaskSpec: packet_bits must be > 0");
  }

  bool operator==(const TaskSpec&) const = default;
};

struct ErrorBreakdown {
  double eps_d = 0.0;
  double fq_dth = 0.0;
  double fq_dth_tth = 0.0;
  double eps_p_ch = 0.0;
  double eps_p_tth = 0.0;
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  double total = 0.0;
  double queuing_threshold_ms = 0.0;
  bool table_clamped = false;  // a prediction lookup fell outside the table grid
};

inline double queuing_threshold(const TaskSpec& task, const LinkParams& link) {
  return std::max(task.delay_bound_ms - link.tx_duration_ms - link.backhaul_delay_ms, 0.0);
}

enum class DelayCase { on_time = 1, predicted = 2, late = 3 };

struct DelayOutcome {
  double delay_ms = 0.0;
  DelayCase delay_case = DelayCase::on_time;
  // Horizon the receiver-side predictor extrapolates over. Unset in case 1,
  // where prediction only covers losses and is capped by the coherence time.
  std::optional<double> horizon_ms;
};

inline DelayOutcome experienced_delay(double comm_delay_ms, const TaskSpec& task,
                                      const LinkParams& link) {
  if (!(comm_delay_ms >= 0.0)) throw std::domain_error("experienced_delay: negative delay");
  const double dmax = task.delay_bound_ms;
  if (comm_delay_ms <= dmax) return {comm_delay_ms, DelayCase::on_time, std::nullopt};
  if (comm_delay_ms <= link.horizon_cap_ms + dmax) {
    return {dmax, DelayCase::predicted, comm_delay_ms - dmax};
  }
  return {comm_delay_ms - link.horizon_cap_ms, DelayCase::late, link.horizon_cap_ms};
}

inline QueueLaw queue_law(const TaskSpec& task, const LinkParams& link, double bits) {
  return QueueLaw{task.arrival_rate, bits, link.tx_duration_ms, task.packet_bits};
}

/// Combines already-evaluated components into the bound's three terms.
inline ErrorBreakdown compose_bound(double eps_d, double fq_dth, double fq_dth_tth,
                                    double eps_p_ch, double eps_p_tth) {
  ErrorBreakdown e;
  e.eps_d = eps_d;
  e.fq_dth = fq_dth;
  e.fq_dth_tth = fq_dth_tth;
  e.eps_p_ch = eps_p_ch;
  e.eps_p_tth = eps_p_tth;
  e.term1 = eps_p_ch * eps_d * (1.0 - fq_dth);
  e.term2 = eps_p_tth * std::max(fq_dth - fq_dth_tth, 0.0);
  e.term3 = fq_dth_tth;
  e.total = e.term1 + e.term2 + e.term3;
  return e;
}

/// The bound with the decoding error supplied directly instead of from the link.
inline ErrorBreakdown error_bound_given_decoding(const TaskSpec& task, const LinkParams& link,
                                                const TradeoffTable& table, double eps_d,
                                                double bits, LookupMode mode = LookupMode::clamp) {
  if (!(bits > 0.0)) throw std::domain_error("overall_error_bound: bits must be > 0");
  if (!(eps_d >= 0.0 && eps_d <= 1.0)) throw std::domain_error("overall_error_bound: eps_d outside [0,1]");
  const double dth = queuing_threshold(task, link);
  const QueueLaw law = queue_law(task, link, bits);
  const LookupResult p_ch = table.lookup(link.coherence_time_ms, task.jnd_threshold_pct, mode);
  const LookupResult p_th = table.lookup(link.horizon_cap_ms, task.jnd_threshold_pct, mode);
  ErrorBreakdown e = compose_bound(eps_d, queuing_violation(law, dth),
                                   queuing_violation(law, dth + link.horizon_cap_ms), p_ch.value,
                                   p_th.value);
  e.queuing_threshold_ms = dth;
  e.table_clamped = p_ch.clamped || p_th.clamped;
  return e;
}

/// Overall-error upper bound at bandwidth W (kHz) and b bits per TTI.
inline ErrorBreakdown overall_error_bound(const TaskSpec& task, const LinkParams& link,
                                         const TradeoffTable& table, double bandwidth_khz,
                                         double bits, LookupMode mode = LookupMode::clamp) {
  if (!(bandwidth_khz > 0.0)) throw std::domain_error("overall_error_bound: bandwidth must be > 0");
  if (!(bits > 0.0)) throw std::domain_error("overall_error_bound: bits must be > 0");
  return error_bound_given_decoding(task, link, table,
                                    avg_decoding_error(link, bandwidth_khz, bits), bits, mode);
}

struct PlacementErrors {
  double eps_tx = 0.0;  // predictor at the transmitter: either failure is visible
  double eps_rx = 0.0;  // predictor at the receiver: both must fail
};

inline PlacementErrors placement_compare(double eps_p, double eps_c) {
  if (!(eps_p >= 0.0 && eps_p <= 1.0 && eps_c >= 0.0 && eps_c <= 1.0)) {
    throw std::domain_error("placement_compare: probabilities must lie in [0,1]");
  }
  return {1.0 - (1.0 - eps_p) * (1.0 - eps_c), eps_p * eps_c};
}

}  // namespace hcd
