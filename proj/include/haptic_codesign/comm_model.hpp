#pragma once

// Physical-layer error laws: finite-blocklength decoding error and the
// effective-bandwidth queuing-delay violation probability.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "haptic_codesign/special_functions.hpp"
#include "haptic_codesign/units.hpp"

namespace hcd {

struct FixedGain {
  double gain = 1.0;
  bool operator==(const FixedGain&) const = default;
};

/// Average the decoding error over Rayleigh small-scale fading, g ~ Exp(1).
struct RayleighAverage {
  int nodes = 32;
  bool operator==(const RayleighAverage&) const = default;
};

using FadingMode = std::variant<FixedGain, RayleighAverage>;

/// Radio constants of one link. Defaults are the reference evaluation values.
struct LinkParams {
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -144.0;
  double distance_km = 0.2;
  double backhaul_delay_ms = 10.0;
  double tx_duration_ms = 0.5;
  double coherence_time_ms = 10.0;
  double horizon_cap_ms = 50.0;
  FadingMode fading = FixedGain{};

  void validate() const {
    if (!(tx_duration_ms > 0.0)) throw std::invalid_argument("LinkParams: tx_duration_ms must be > 0");
    if (!(distance_km > 0.0)) throw std::invalid_argument("LinkParams: distance_km must be > 0");
    if (!(coherence_time_ms > 0.0)) throw std::invalid_argument("LinkParams: coherence_time_ms must be > 0");
    if (!(horizon_cap_ms > 0.0)) throw std::invalid_argument("LinkParams: horizon_cap_ms must be > 0");
    if (!(backhaul_delay_ms >= 0.0)) throw std::invalid_argument("LinkParams: backhaul_delay_ms must be >= 0");
    if (const auto* fixed = std::get_if<FixedGain>(&fading); fixed && !(fixed->gain > 0.0)) {
      throw std::invalid_argument("LinkParams: fixed fading gain must be > 0");
    }
    if (const auto* ray = std::get_if<RayleighAverage>(&fading); ray && ray->nodes < 4) {
      throw std::invalid_argument("LinkParams: Rayleigh quadrature needs at least 4 nodes");
    }
  }

  bool operator==(const LinkParams&) const = default;
};

struct LinkBudget {
  double large_scale_gain = 0.0;  // alpha, linear
  double snr = 0.0;               // gamma, linear
  double capacity = 0.0;          // bits/s/Hz
  double dispersion = 0.0;        // exact form, (bits/s/Hz)^2
  double blocklength = 0.0;       // symbols
  bool high_snr = false;          // gamma > 5 dB: dispersion taken as log2(e)^2
};

/// Large-scale gain from 10 log10(alpha) = -128.1 - 36.7 log10(d), d in km.
inline double path_loss_gain(double distance_km) {
  if (!(distance_km > 0.0)) {
    throw std::domain_error("path_loss_gain: distance must be > 0 km");
  }
  return units::db_to_linear(-128.1 - 36.7 * std::log10(distance_km));
}

inline double exact_dispersion(double snr) {
  const double inv = 1.0 / (1.0 + snr);
  return units::kLog2E * units::kLog2E * (1.0 - inv * inv);
}

inline LinkBudget link_budget(const LinkParams& link, double bandwidth_khz, double gain) {
  if (!(bandwidth_khz > 0.0)) throw std::domain_error("link_budget: bandwidth must be > 0");
  if (!(gain > 0.0)) throw std::domain_error("link_budget: small-scale gain must be > 0");
  LinkBudget b;
  b.large_scale_gain = path_loss_gain(link.distance_km);
  const double w_hz = units::khz_to_hz(bandwidth_khz);
  b.snr = b.large_scale_gain * gain * units::dbm_to_watt(link.tx_power_dbm) /
          (units::dbm_to_watt(link.noise_psd_dbm_hz) * w_hz);
  b.capacity = std::log2(1.0 + b.snr);
  b.dispersion = exact_dispersion(b.snr);
  b.blocklength = units::ms_to_s(link.tx_duration_ms) * w_hz;
  b.high_snr = b.snr > units::db_to_linear(5.0);
  return b;
}

/// Argument of the Q-function in the decoding-error approximation.
inline double decoding_error_argument(const LinkBudget& budget, double bits) {
  const double l = budget.blocklength;
  if (!(l > 0.0)) throw std::domain_error("decoding_error: blocklength must be positive");
  if (!(bits >= 0.0)) throw std::domain_error("decoding_error: bits must be >= 0");
  const double numerator = l * budget.capacity - bits + std::log2(l) / 2.0;
  const double v = budget.high_snr ? units::kLog2E * units::kLog2E : budget.dispersion;
  const double denom = std::sqrt(l * v);
  if (denom == 0.0) return numerator >= 0.0 ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity();
  return numerator / denom;
}

inline double decoding_error(const LinkBudget& budget, double bits) {
  return q_function(decoding_error_argument(budget, bits));
}

/**
 * Poisson arrivals served at a constant rate of bits_per_tti every tx_duration.
 *
 * Each arrival carries packet_bits bits, so the load is
 * rho = arrival_rate * packet_bits * tx_duration / bits_per_tti and the
 * effective bandwidth in arrivals per second is bits_per_tti / (packet_bits *
 * tx_duration). packet_bits = 1 is the verbatim per-bit reading.
 */
struct QueueLaw {
  double arrival_rate = 0.0;  // arrivals/s
  double bits_per_tti = 0.0;
  double tx_duration_ms = 0.0;
  double packet_bits = 1.0;

  double load() const {
    return arrival_rate * packet_bits * units::ms_to_s(tx_duration_ms) / bits_per_tti;
  }

  double effective_bandwidth() const {
    return bits_per_tti / (packet_bits * units::ms_to_s(tx_duration_ms));
  }

  /// Decay exponent xi in 1/s; 0 when the queue is saturated.
  double exponent() const {
    const double rho = load();
    if (rho >= 1.0) return 0.0;
    return effective_bandwidth() * lambert_w_m1(-rho * std::exp(-rho)) + arrival_rate;
  }

  void validate() const {
    if (!(arrival_rate > 0.0)) throw std::domain_error("QueueLaw: arrival_rate must be > 0");
    if (!(bits_per_tti > 0.0)) throw std::domain_error("QueueLaw: bits_per_tti must be > 0");
    if (!(tx_duration_ms > 0.0)) throw std::domain_error("QueueLaw: tx_duration_ms must be > 0");
    if (!(packet_bits > 0.0)) throw std::domain_error("QueueLaw: packet_bits must be > 0");
  }
};

/// Pr{queuing delay > bound}; exactly 1 for a saturated queue or a zero bound.
inline double queuing_violation(const QueueLaw& law, double bound_ms) {
  law.validate();
  if (!(bound_ms >= 0.0)) throw std::domain_error("queuing_violation: bound must be >= 0");
  if (bound_ms == 0.0 || law.load() >= 1.0) return 1.0;
  return std::exp(units::ms_to_s(bound_ms) * law.exponent());
}

/// Closed-form d/d(bits_per_tti) of queuing_violation; 0 when saturated.
inline double queuing_violation_slope(const QueueLaw& law, double bound_ms) {
  law.validate();
  const double rho = law.load();
  if (bound_ms == 0.0 || rho >= 1.0) return 0.0;
  const double kappa = units::ms_to_s(bound_ms);
  const double w = lambert_w_m1(-rho * std::exp(-rho));
  const double service = law.packet_bits * units::ms_to_s(law.tx_duration_ms);
  const double dxi_db = w / service * (w + rho) / (1.0 + w);
  return kappa * queuing_violation(law, bound_ms) * dxi_db;
}

/**
 * E[f(g)] for g ~ Exp(1).
 *
 * [0, last breakpoint] is covered by composite Gauss-Legendre panels between
 * consecutive breakpoints; the tail beyond it by a shifted Gauss-Laguerre rule.
 */
template <class F>
double exponential_expectation(F&& f, std::vector<double> breakpoints, int nodes) {
  breakpoints.push_back(0.0);
  std::erase_if(breakpoints, [](double x) { return !(x >= 0.0) || !std::isfinite(x); });
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  const GaussRule legendre = gauss_legendre(nodes);
  const GaussRule laguerre = gauss_laguerre(nodes);

  double total = 0.0;
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    const double a = breakpoints[p];
    const double b = breakpoints[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double panel = 0.0;
    for (std::size_t i = 0; i < legendre.nodes.size(); ++i) {
      const double g = mid + half * legendre.nodes[i];
      panel += legendre.weights[i] * f(g) * std::exp(-g);
    }
    total += half * panel;
  }
  const double tail_start = breakpoints.back();
  double tail = 0.0;
  for (std::size_t i = 0; i < laguerre.nodes.size(); ++i) {
    tail += laguerre.weights[i] * f(tail_start + laguerre.nodes[i]);
  }
  return total + std::exp(-tail_start) * tail;
}

/// Decoding error at an explicit small-scale gain.
inline double decoding_error_at_gain(const LinkParams& link, double bandwidth_khz, double bits,
                                     double gain) {
  return decoding_error(link_budget(link, bandwidth_khz, std::max(gain, 1e-300)), bits);
}

/// Decoding error under the link's fading mode (fixed gain or Rayleigh average).
inline double avg_decoding_error(const LinkParams& link, double bandwidth_khz, double bits) {
  link.validate();
  if (const auto* fixed = std::get_if<FixedGain>(&link.fading)) {
    return decoding_error(link_budget(link, bandwidth_khz, fixed->gain), bits);
  }
  const int nodes = std::get<RayleighAverage>(link.fading).nodes;
  const LinkBudget mean = link_budget(link, bandwidth_khz, 1.0);
  const double snr = mean.snr;
  const double l = mean.blocklength;

  // Panels concentrate around the gain where the Q argument crosses zero and
  // break at the 5 dB switch of the dispersion term.
  const double g_half = std::max(0.0, (std::exp2((bits - std::log2(l) / 2.0) / l) - 1.0) / snr);
  const double width = (1.0 + snr * g_half) / (std::sqrt(l) * snr);
  std::vector<double> breaks;
  breaks.push_back(units::db_to_linear(5.0) / snr);
  for (int k = -12; k <= 12; ++k) breaks.push_back(g_half + k * width);
  const double g_5db = breaks.front();
  const double last = g_half + 12.0 * width;
  std::erase_if(breaks, [&](double x) { return x > last && x != g_5db; });
  if (g_5db > last) breaks.push_back(g_5db);

  const double value = exponential_expectation(
      [&](double g) { return decoding_error_at_gain(link, bandwidth_khz, bits, g); }, breaks,
      nodes);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace hcd
