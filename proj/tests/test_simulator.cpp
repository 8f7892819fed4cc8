#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "haptic_codesign/presets.hpp"
#include "haptic_codesign/simulator.hpp"

namespace {

using hcd::SimScenario;

hcd::TradeoffTable constant_table(double p) {
  return hcd::TradeoffTable({0.0, 100.0}, {0.01, 10.0}, {p, p, p, p});
}

SimScenario light_load() {
  SimScenario s;
  s.task = hcd::presets::critical_task();
  s.task.packet_bits = 100.0;
  s.link = hcd::presets::reference_link();
  s.bandwidth_khz = 400.0;
  s.bits = 100.0;
  s.table = constant_table(0.0);
  s.n_slots = 200000;
  s.seed = 1;
  return s;
}

TEST(Simulator, NoFailureSourceMeansNoErrors) {
  SimScenario s = light_load();
  s.forced_decode_error = 0.0;
  const hcd::PlacementPair p = hcd::compare_placements(s);
  EXPECT_GT(p.receiver.packets, 9000u);
  EXPECT_EQ(p.receiver.errors, 0u);
  EXPECT_EQ(p.transmitter.errors, 0u);
  EXPECT_EQ(p.receiver.decode_failures, 0u);
  EXPECT_EQ(p.receiver.case_counts[2], 0u);
}

TEST(Simulator, SaturatedQueueFailsAlmostEverything) {
  SimScenario s = light_load();
  s.task.arrival_rate = 3000.0;  // 1.5 packets per slot against 1 served
  const hcd::SimReport r = hcd::run_sim(s);
  EXPECT_GT(r.empirical_overall_error, 0.99);
  EXPECT_GT(double(r.case_counts[2]) / double(r.packets), 0.99);
}

TEST(Simulator, ReproducibleForFixedSeed) {
  SimScenario s = light_load();
  s.forced_decode_error = 0.02;
  s.table = constant_table(0.3);
  const hcd::SimReport a = hcd::run_sim(s);
  const hcd::SimReport b = hcd::run_sim(s);
  EXPECT_EQ(a.arrivals, b.arrivals);
  EXPECT_EQ(a.packets, b.packets);
  EXPECT_EQ(a.errors, b.errors);
  EXPECT_EQ(a.delay_histogram, b.delay_histogram);
  EXPECT_EQ(a.wait_tail, b.wait_tail);
  EXPECT_EQ(a.wait_sum_ms, b.wait_sum_ms);
  s.seed = 2;
  const hcd::SimReport c = hcd::run_sim(s);
  EXPECT_NE(a.arrivals, c.arrivals);
}

TEST(Simulator, CountsPartition) {
  SimScenario s = light_load();
  s.task.arrival_rate = 1800.0;
  s.forced_decode_error = 0.05;
  s.table = constant_table(0.2);
  const hcd::SimReport r = hcd::run_sim(s);
  EXPECT_EQ(r.case_counts[0] + r.case_counts[1] + r.case_counts[2], r.packets);
  EXPECT_EQ(std::accumulate(r.delay_histogram.begin(), r.delay_histogram.end(), std::uint64_t{0}), r.packets);
  EXPECT_LE(r.packets, r.arrivals);
  EXPECT_LE(r.errors, r.packets);
  EXPECT_NEAR(r.ci95_half_width,
              1.96 * std::sqrt(r.empirical_overall_error * (1 - r.empirical_overall_error) / double(r.packets)),
              1e-15);
}

TEST(Simulator, LittlesLaw) {
  SimScenario s = light_load();
  s.task.arrival_rate = 1600.0;  // load 0.8
  s.n_slots = 2000000;
  s.forced_decode_error = 0.0;
  const hcd::SimReport r = hcd::run_sim(s);
  const double lambda_per_ms = s.task.arrival_rate / 1000.0;
  EXPECT_NEAR(r.mean_queue_length(), lambda_per_ms * r.mean_wait_ms(), 0.05 * r.mean_queue_length());
}

TEST(Simulator, QueueTailWithinBoundFactor) {
  SimScenario s = light_load();
  s.task.arrival_rate = 1600.0;
  s.n_slots = 2000000;
  s.forced_decode_error = 0.0;
  const hcd::SimReport r = hcd::run_sim(s);
  const hcd::QueueLaw law = hcd::queue_law(s.task, s.link, s.bits);
  int checked = 0;
  for (std::size_t k = 1; k < r.wait_tail.size(); ++k) {
    if (r.wait_tail[k] < 100) break;
    const double bound = hcd::queuing_violation(law, double(k) * s.slot_ms());
    if (bound > 1e-2 || bound < 1e-3) continue;
    EXPECT_LE(r.wait_exceedance(k), 1.5 * bound) << k;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Simulator, ReceiverNeverWorseThanTransmitter) {
  for (double loss : {0.0, 0.01, 0.1, 0.5}) {
    SimScenario s = light_load();
    s.forced_decode_error = loss;
    s.table = constant_table(0.1);
    s.task.arrival_rate = 1500.0;
    const hcd::PlacementPair p = hcd::compare_placements(s);
    EXPECT_LE(p.receiver.errors, p.transmitter.errors);
    EXPECT_EQ(p.receiver.packets, p.transmitter.packets);
  }
}

TEST(Simulator, PerfectPredictorAndPerfectChannel) {
  SimScenario s = light_load();
  s.forced_decode_error = 0.1;
  const hcd::PlacementPair a = hcd::compare_placements(s);
  EXPECT_EQ(a.receiver.errors, 0u);
  const double p = a.transmitter.empirical_overall_error;
  EXPECT_NEAR(p, 0.1, 4.0 * std::sqrt(0.09 / double(a.transmitter.packets)));

  s.forced_decode_error = 0.0;
  s.table = constant_table(0.3);
  const hcd::PlacementPair b = hcd::compare_placements(s);
  EXPECT_EQ(b.receiver.errors, 0u);
  EXPECT_NEAR(b.transmitter.empirical_overall_error, 0.3, 4.0 * std::sqrt(0.21 / double(b.transmitter.packets)));
}

TEST(Simulator, EmpiricalWithinBoundUnderFading) {
  SimScenario s = light_load();
  s.link.fading = hcd::RayleighAverage{32};
  s.task.jnd_threshold_pct = 0.16;
  s.table = hcd::presets::stipulated_table();
  s.n_slots = 2000000;
  const hcd::SimReport r = hcd::run_sim(s);
  const double se = std::sqrt(r.analytic_bound * (1.0 - r.analytic_bound) / double(r.packets));
  EXPECT_GT(r.decode_failures, 0u);
  EXPECT_LE(r.empirical_overall_error, r.analytic_bound + 3.0 * se);
}

TEST(Simulator, ReplicationsMergeInOrder) {
  SimScenario s = light_load();
  s.forced_decode_error = 0.05;
  s.table = constant_table(0.2);
  s.n_slots = 20000;
  const hcd::PlacementPair merged = hcd::compare_placements_replicated(s, 3);
  std::uint64_t packets = 0, errors = 0;
  for (std::uint64_t i = 0; i < 3; ++i) {
    SimScenario r = s;
    r.seed = s.seed + i;
    const hcd::PlacementPair p = hcd::compare_placements(r);
    packets += p.receiver.packets;
    errors += p.transmitter.errors;
  }
  EXPECT_EQ(merged.receiver.packets, packets);
  EXPECT_EQ(merged.transmitter.errors, errors);
  EXPECT_EQ(merged.receiver.n_slots, 60000u);
  EXPECT_THROW(hcd::compare_placements_replicated(s, 0), std::invalid_argument);
}

TEST(Simulator, Validation) {
  SimScenario s = light_load();
  s.n_slots = 100;
  EXPECT_THROW(hcd::run_sim(s), std::invalid_argument);
  s = light_load();
  s.forced_decode_error = 2.0;
  EXPECT_THROW(hcd::run_sim(s), std::invalid_argument);
  s = light_load();
  s.bits = 0.0;
  EXPECT_THROW(hcd::run_sim(s), std::invalid_argument);
}

}  // namespace
