#pragma once

// Evaluation presets: the reference link and the critical / non-critical task
// classes (delay bound 20 ms, target 1e-5, JND 0.1 % and 1 %).

#include "haptic_codesign/reliability.hpp"
#include "haptic_codesign/tradeoff_table.hpp"

namespace hcd::presets {

// Bits per arrival under which the queue law gives a non-degenerate tail at
// 100 packets/s and a few hundred bits per TTI.
inline constexpr double kPacketBits = 1000.0;

inline LinkParams reference_link() { return LinkParams{}; }

inline TaskSpec critical_task() {
  TaskSpec t;
  t.delay_bound_ms = 20.0;
  t.reliability_target = 1e-5;
  t.jnd_threshold_pct = 0.1;
  t.arrival_rate = 100.0;
  t.packet_bits = kPacketBits;
  t.criticality = Criticality::critical;
  return t;
}

inline TaskSpec non_critical_task() {
  TaskSpec t = critical_task();
  t.jnd_threshold_pct = 1.0;
  t.criticality = Criticality::non_critical;
  return t;
}

/// Stipulated monotone table on the default grids.
inline TradeoffTable stipulated_table(const StipulatedSurface& s = {}) {
  return tabulate(s, default_horizon_grid_ms(), default_delta_grid_pct());
}

// Single-user optima reported for the reference evaluation, in kHz.
inline constexpr double kReportedCriticalKhz = 145.24;
inline constexpr double kReportedNonCriticalKhz = 32.19;

}  // namespace hcd::presets
