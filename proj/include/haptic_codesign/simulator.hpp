#pragma once

// Slot-level Monte Carlo of one link: Poisson arrivals into a FIFO served at b
// bits per TTI, block-fading decode failures, and the prediction fallback at
// the receiver or the transmitter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "haptic_codesign/prediction.hpp"
#include "haptic_codesign/reliability.hpp"

namespace hcd {

enum class Placement { receiver, transmitter };

struct SimScenario {
  TaskSpec task;
  LinkParams link;
  double bandwidth_khz = 0.0;
  double bits = 0.0;
  TradeoffTable table;
  Placement placement = Placement::receiver;
  std::uint64_t n_slots = 100000;
  std::uint64_t seed = 0;
  // Overrides the per-block decoding error; used to sweep packet loss directly.
  std::optional<double> forced_decode_error;

  double slot_ms() const { return link.tx_duration_ms; }

  void validate() const {
    task.validate();
    link.validate();
    if (!(bandwidth_khz > 0.0)) throw std::invalid_argument("SimScenario: bandwidth must be > 0");
    if (!(bits > 0.0)) throw std::invalid_argument("SimScenario: bits must be > 0");
    if (n_slots < 10000) throw std::invalid_argument("SimScenario: n_slots must be >= 10000");
    if (forced_decode_error && !(*forced_decode_error >= 0.0 && *forced_decode_error <= 1.0)) {
      throw std::invalid_argument("SimScenario: forced decode error must lie in [0,1]");
    }
  }
};

inline constexpr std::size_t kDelayHistogramBins = 1000;  // last bin collects >= 999 ms

struct SimReport {
  std::uint64_t seed = 0;
  std::uint64_t n_slots = 0;
  Placement placement = Placement::receiver;
  std::uint64_t arrivals = 0;
  std::uint64_t packets = 0;     // served during the run, the error denominator
  std::uint64_t errors = 0;      // JND violations for this placement
  double empirical_overall_error = 0.0;
  double ci95_half_width = 0.0;
  std::vector<std::uint64_t> delay_histogram = std::vector<std::uint64_t>(kDelayHistogramBins, 0);
  std::uint64_t case_counts[3] = {0, 0, 0};
  std::uint64_t decode_failures = 0;
  std::uint64_t queue_violations = 0;  // wait above the queuing threshold
  std::uint64_t prediction_failures = 0;
  double analytic_bound = 0.0;
  // queue statistics
  double wait_sum_ms = 0.0;
  double queue_length_sum = 0.0;  // packets waiting after service, summed over slots
  std::vector<std::uint64_t> wait_tail;  // wait_tail[k]: waits > k slots, k < wait_tail.size()

  double mean_wait_ms() const { return packets ? wait_sum_ms / static_cast<double>(packets) : 0.0; }
  double mean_queue_length() const {
    return n_slots ? queue_length_sum / static_cast<double>(n_slots) : 0.0;
  }
  /// Empirical Pr{wait > k slots}.
  double wait_exceedance(std::size_t k) const {
    if (!packets || k >= wait_tail.size()) return 0.0;
    return static_cast<double>(wait_tail[k]) / static_cast<double>(packets);
  }
};

namespace detail {

inline void finish_rates(SimReport& r) {
  const double n = static_cast<double>(r.packets);
  r.empirical_overall_error = r.packets ? static_cast<double>(r.errors) / n : 0.0;
  const double p = r.empirical_overall_error;
  r.ci95_half_width = r.packets ? 1.96 * std::sqrt(p * (1.0 - p) / n) : 0.0;
}

inline double scenario_bound(const SimScenario& s) {
  if (!s.forced_decode_error) {
    return overall_error_bound(s.task, s.link, s.table, s.bandwidth_khz, s.bits).total;
  }
  return error_bound_given_decoding(s.task, s.link, s.table, *s.forced_decode_error, s.bits).total;
}

struct Packet {
  std::uint64_t arrival_slot;
  double remaining_bits;
};

}  // namespace detail

struct PlacementPair {
  SimReport receiver;
  SimReport transmitter;
};

/**
 * Runs both placements on one random stream. Every served packet draws one
 * uniform for decoding and one for prediction, so the two reports are paired.
 *
 * Prediction horizon per packet: a lost packet in case 1 needs the time since
 * the last decoded packet, at least one slot and at most the coherence time;
 * case 2 needs comm delay minus the bound (the full cap if the packet was
 * also lost). A transmitter-side predictor also extrapolates delivered case-1
 * packets over their comm delay, capped at the coherence time.
 */
inline PlacementPair compare_placements(const SimScenario& s) {
  s.validate();
  const double slot = s.slot_ms();
  const double dmax = s.task.delay_bound_ms;
  const double dth = queuing_threshold(s.task, s.link);
  const double delta = s.task.jnd_threshold_pct;

  std::mt19937_64 rng = detail::substream(s.seed, 0x53494dull);
  std::poisson_distribution<std::uint64_t> arrivals(s.task.arrival_rate * units::ms_to_s(slot));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> rayleigh_power(1.0);
  const bool fading = std::holds_alternative<RayleighAverage>(s.link.fading);
  const double fixed_eps =
      s.forced_decode_error ? *s.forced_decode_error : avg_decoding_error(s.link, s.bandwidth_khz, s.bits);

  PlacementPair out;
  SimReport& rx = out.receiver;
  SimReport& tx = out.transmitter;
  const std::size_t tail_slots = static_cast<std::size_t>(std::ceil((dth + s.link.horizon_cap_ms) / slot)) + 1;
  rx.wait_tail.assign(tail_slots, 0);

  const auto slots_per_block =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s.link.coherence_time_ms / slot)));
  double block_eps = fixed_eps;
  std::optional<std::uint64_t> last_success;
  std::deque<detail::Packet> queue;

  for (std::uint64_t t = 0; t < s.n_slots; ++t) {
    if (t % slots_per_block == 0 && fading && !s.forced_decode_error) {
      block_eps = decoding_error_at_gain(s.link, s.bandwidth_khz, s.bits, rayleigh_power(rng));
    }
    const std::uint64_t k = arrivals(rng);
    rx.arrivals += k;
    for (std::uint64_t i = 0; i < k; ++i) queue.push_back({t, s.task.packet_bits});

    double capacity = s.bits;
    while (!queue.empty() && capacity > 0.0) {
      detail::Packet& head = queue.front();
      const double sent = std::min(capacity, head.remaining_bits);
      head.remaining_bits -= sent;
      capacity -= sent;
      if (head.remaining_bits > 0.0) break;

      const std::uint64_t wait_slots = t - head.arrival_slot;
      const double wait_ms = static_cast<double>(wait_slots) * slot;
      queue.pop_front();

      const double u_decode = uniform(rng);
      const double u_predict = uniform(rng);
      const bool lost = u_decode < block_eps;
      const double comm = s.link.backhaul_delay_ms + wait_ms + s.link.tx_duration_ms;
      const DelayOutcome d = experienced_delay(comm, s.task, s.link);

      ++rx.packets;
      rx.wait_sum_ms += wait_ms;
      for (std::size_t j = 0; j < std::min<std::size_t>(wait_slots, tail_slots); ++j) ++rx.wait_tail[j];
      if (wait_ms > dth) ++rx.queue_violations;
      if (lost) ++rx.decode_failures;
      ++rx.case_counts[static_cast<int>(d.delay_case) - 1];
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(d.delay_ms), kDelayHistogramBins - 1);
      ++rx.delay_histogram[bin];

      double horizon = 0.0;
      bool rx_needs_prediction = false;
      switch (d.delay_case) {
        case DelayCase::on_time: {
          const double since = last_success ? static_cast<double>(t - *last_success) * slot
                                            : s.link.coherence_time_ms;
          horizon = lost ? std::min(s.link.coherence_time_ms, std::max(slot, since))
                         : std::min(s.link.coherence_time_ms, comm);
          rx_needs_prediction = lost;
          break;
        }
        case DelayCase::predicted:
          horizon = lost ? s.link.horizon_cap_ms : *d.horizon_ms;
          rx_needs_prediction = true;
          break;
        case DelayCase::late:
          horizon = s.link.horizon_cap_ms;
          break;
      }
      const bool predictor_fails = u_predict < s.table.lookup(horizon, delta).value;
      const bool late = d.delay_case == DelayCase::late;

      const bool rx_error = late || (rx_needs_prediction && predictor_fails);
      const bool tx_error = late || lost || predictor_fails;
      if (rx_error) ++rx.errors;
      if (tx_error) ++tx.errors;
      if (rx_needs_prediction && predictor_fails) ++rx.prediction_failures;
      if (predictor_fails) ++tx.prediction_failures;
      if (!lost) last_success = t;
    }
    rx.queue_length_sum += static_cast<double>(queue.size());
  }

  // shared statistics
  const std::uint64_t rx_errors = rx.errors, rx_pred = rx.prediction_failures;
  const std::uint64_t tx_errors = tx.errors, tx_pred = tx.prediction_failures;
  tx = rx;
  tx.errors = tx_errors;
  tx.prediction_failures = tx_pred;
  rx.errors = rx_errors;
  rx.prediction_failures = rx_pred;
  rx.placement = Placement::receiver;
  tx.placement = Placement::transmitter;
  const double bound = detail::scenario_bound(s);
  for (SimReport* r : {&rx, &tx}) {
    r->seed = s.seed;
    r->n_slots = s.n_slots;
    r->analytic_bound = bound;
    detail::finish_rates(*r);
  }
  return out;
}

inline SimReport run_sim(const SimScenario& s) {
  PlacementPair p = compare_placements(s);
  return s.placement == Placement::receiver ? std::move(p.receiver) : std::move(p.transmitter);
}

/// Adds the counts of b into a (same scenario, different seed).
inline void merge_reports(SimReport& a, const SimReport& b) {
  a.n_slots += b.n_slots;
  a.arrivals += b.arrivals;
  a.packets += b.packets;
  a.errors += b.errors;
  for (std::size_t i = 0; i < a.delay_histogram.size(); ++i) a.delay_histogram[i] += b.delay_histogram[i];
  for (int c = 0; c < 3; ++c) a.case_counts[c] += b.case_counts[c];
  a.decode_failures += b.decode_failures;
  a.queue_violations += b.queue_violations;
  a.prediction_failures += b.prediction_failures;
  a.wait_sum_ms += b.wait_sum_ms;
  a.queue_length_sum += b.queue_length_sum;
  for (std::size_t i = 0; i < a.wait_tail.size() && i < b.wait_tail.size(); ++i) a.wait_tail[i] += b.wait_tail[i];
  detail::finish_rates(a);
}

/// Independent replications run concurrently; replication i uses seed + i.
/// Reports are merged in replication order, so the result is deterministic.
inline PlacementPair compare_placements_replicated(const SimScenario& s, unsigned replications) {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  std::vector<std::future<PlacementPair>> jobs;
  for (unsigned i = 0; i < replications; ++i) {
    SimScenario rep = s;
    rep.seed = s.seed + i;
    jobs.push_back(std::async(std::launch::async, [rep] { return compare_placements(rep); }));
  }
  PlacementPair total = jobs.front().get();
  for (std::size_t i = 1; i < jobs.size(); ++i) {
    const PlacementPair p = jobs[i].get();
    merge_reports(total.receiver, p.receiver);
    merge_reports(total.transmitter, p.transmitter);
  }
  total.receiver.seed = total.transmitter.seed = s.seed;
  return total;
}

}  // namespace hcd
