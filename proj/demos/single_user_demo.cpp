// Optimizes the two reference task classes, then checks the non-critical
// optimum by simulation with a scaled-up decoding error.

#include <cstdio>

#include "haptic_codesign/haptic_codesign.hpp"

int main() {
  const hcd::LinkParams link = hcd::presets::reference_link();
  const hcd::TradeoffTable table = hcd::presets::stipulated_table();

  for (const hcd::TaskSpec& task : {hcd::presets::critical_task(), hcd::presets::non_critical_task()}) {
    const hcd::AllocationResult r = hcd::outer_opt_bandwidth(task, link, table);
    std::printf("delta %.2f %%: W* = %.2f kHz, b* = %.0f, bound %.3e (eps_d %.2e, f_q %.2e)\n",
                task.jnd_threshold_pct, r.bandwidth_opt, r.bits_opt, r.breakdown.total,
                r.breakdown.eps_d, r.breakdown.fq_dth);
  }

  const double w = hcd::units::hz_to_khz(1e6);
  std::printf("1 MHz holds %zu non-critical users task-oriented, %zu task-agnostic\n",
              hcd::allocate_bandwidths(std::vector<double>(40, hcd::presets::kReportedNonCriticalKhz), w,
                                       hcd::AllocationMode::task_oriented)
                  .n_served,
              hcd::allocate_bandwidths(std::vector<double>(40, hcd::presets::kReportedNonCriticalKhz), w,
                                       hcd::AllocationMode::task_agnostic,
                                       hcd::presets::kReportedCriticalKhz)
                  .n_served);

  hcd::SimScenario s;
  s.task = hcd::presets::non_critical_task();
  s.link = link;
  s.table = table;
  s.bandwidth_khz = 30.0;
  s.bits = 94.0;
  s.n_slots = 4000000;
  s.seed = 7;
  s.forced_decode_error = 0.5;
  const hcd::PlacementPair p = hcd::compare_placements(s);
  std::printf("simulated %llu packets: receiver %.3e +- %.1e, transmitter %.3e, bound %.3e\n",
              static_cast<unsigned long long>(p.receiver.packets), p.receiver.empirical_overall_error,
              p.receiver.ci95_half_width, p.transmitter.empirical_overall_error, p.receiver.analytic_bound);
}
