#pragma once

// Synthetic teleoperation trajectories, a least-squares autoregressive
// multi-step predictor, and the empirical estimate of the prediction error
// probability as a function of horizon and JND threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "haptic_codesign/tradeoff_table.hpp"

namespace hcd {

inline constexpr double kSampleRateHz = 1000.0;

struct Trajectory {
  std::vector<double> position;  // normalized units
  std::vector<double> velocity;  // units/s
};

struct TrajectoryDataset {
  std::vector<Trajectory> sequences;
  double sample_rate_hz = kSampleRateHz;
  double range_norm = 1.0;  // position range used to express errors in percent
  std::uint64_t seed = 0;
};

enum class TrajectoryProcess { ou, sinusoid_mix };

struct GeneratorParams {
  TrajectoryProcess process = TrajectoryProcess::ou;
  // ou: velocity dv = -theta v dt + sigma dB, position integrates velocity
  double ou_theta = 20.0;  // 1/s
  double ou_sigma = 1.0;   // units/s^1.5
  bool stationary_start = true;  // draw v0 from the stationary law, else v0 = 0
  // sinusoid_mix: sum of sinusoids with random amplitude, phase, frequency
  int sin_components = 4;
  double sin_min_freq_hz = 0.1;
  double sin_max_freq_hz = 10.0;
  double sin_amplitude = 0.2;
  double position_offset = 1.0;

  void validate() const {
    if (process == TrajectoryProcess::ou) {
      if (!(ou_theta > 0.0)) throw std::invalid_argument("GeneratorParams: ou_theta must be > 0");
      if (!(ou_sigma >= 0.0)) throw std::invalid_argument("GeneratorParams: ou_sigma must be >= 0");
    } else {
      if (sin_components < 1) throw std::invalid_argument("GeneratorParams: sin_components must be >= 1");
      if (!(sin_min_freq_hz > 0.0 && sin_max_freq_hz > sin_min_freq_hz && sin_max_freq_hz <= 10.0)) {
        throw std::invalid_argument("GeneratorParams: need 0 < sin_min_freq_hz < sin_max_freq_hz <= 10");
      }
      if (!(sin_amplitude > 0.0)) throw std::invalid_argument("GeneratorParams: sin_amplitude must be > 0");
    }
  }
};

namespace detail {

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x68636475u};
  return std::mt19937_64(seq);
}

inline std::uint64_t fingerprint(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace detail

/// Deterministic for a fixed (count, length, seed, params). Each sequence uses
/// its own substream so sequences can be produced independently.
inline TrajectoryDataset generate_trajectories(std::size_t count, std::size_t length,
                                               std::uint64_t seed,
                                               const GeneratorParams& params = {}) {
  if (count < 1) throw std::invalid_argument("generate_trajectories: count must be >= 1");
  if (length < 1000) throw std::invalid_argument("generate_trajectories: length must be >= 1000");
  params.validate();

  TrajectoryDataset data;
  data.seed = seed;
  data.sequences.resize(count);
  const double dt = 1.0 / kSampleRateHz;

  for (std::size_t s = 0; s < count; ++s) {
    auto rng = detail::substream(seed, s);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Trajectory& tr = data.sequences[s];
    tr.position.resize(length);
    tr.velocity.resize(length);

    if (params.process == TrajectoryProcess::ou) {
      const double a = std::exp(-params.ou_theta * dt);
      const double stationary_sd = params.ou_sigma / std::sqrt(2.0 * params.ou_theta);
      const double step_sd = stationary_sd * std::sqrt(1.0 - a * a);
      double v = params.stationary_start ? stationary_sd * normal(rng) : 0.0;
      double q = params.position_offset;
      for (std::size_t t = 0; t < length; ++t) {
        tr.position[t] = q;
        tr.velocity[t] = v;
        q += v * dt;
        v = a * v + step_sd * normal(rng);
      }
    } else {
      struct Component {
        double amplitude, omega, phase;
      };
      std::vector<Component> comps;
      for (int k = 0; k < params.sin_components; ++k) {
        const double f = params.sin_min_freq_hz +
                         (params.sin_max_freq_hz - params.sin_min_freq_hz) * uniform(rng);
        comps.push_back({params.sin_amplitude * (0.5 + uniform(rng)), 2.0 * std::numbers::pi * f,
                         2.0 * std::numbers::pi * uniform(rng)});
      }
      for (std::size_t t = 0; t < length; ++t) {
        const double time = static_cast<double>(t) * dt;
        double q = params.position_offset, v = 0.0;
        for (const Component& c : comps) {
          q += c.amplitude * std::sin(c.omega * time + c.phase);
          v += c.amplitude * c.omega * std::cos(c.omega * time + c.phase);
        }
        tr.position[t] = q;
        tr.velocity[t] = v;
      }
    }
  }

  double lo = data.sequences[0].position[0], hi = lo;
  for (const Trajectory& tr : data.sequences) {
    const auto [mn, mx] = std::minmax_element(tr.position.begin(), tr.position.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  // a constant dataset keeps a unit normalizer
  data.range_norm = hi > lo ? hi - lo : 1.0;
  return data;
}

/// Relative root mean squared error in percent of the mean of the truth.
inline double rrmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("rrmse: series must have equal, non-zero length");
  }
  double sq = 0.0, mean = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sq += e * e;
    mean += truth[i];
    scale = std::max(scale, std::abs(truth[i]));
  }
  mean /= static_cast<double>(truth.size());
  if (mean == 0.0 || std::abs(mean) <= 1e-12 * scale) {
    throw std::domain_error("rrmse: truth has zero mean");
  }
  return std::sqrt(sq / static_cast<double>(truth.size())) / std::abs(mean) * 100.0;
}

struct PredictorModel {
  std::size_t order = 0;
  std::vector<double> coefficients;  // coefficients[k] multiplies q[t-1-k]
  std::size_t history_len = 500;
  std::size_t horizon_len = 100;
  double train_rrmse = 0.0;
  double validation_rrmse = 0.0;
  std::vector<std::uint64_t> training_fingerprints;
};

/// Recursive multi-step rollout over horizon_len slots.
inline std::vector<double> predict(const PredictorModel& model, std::span<const double> history) {
  if (history.size() != model.history_len) {
    throw std::invalid_argument("predict: history has " + std::to_string(history.size()) +
                                " slots, model expects " + std::to_string(model.history_len));
  }
  const std::size_t p = model.order;
  std::vector<double> buf(history.end() - static_cast<std::ptrdiff_t>(p), history.end());
  buf.reserve(p + model.horizon_len);
  std::vector<double> out(model.horizon_len);
  for (std::size_t step = 0; step < model.horizon_len; ++step) {
    double next = 0.0;
    const std::size_t last = buf.size() - 1;
    for (std::size_t k = 0; k < p; ++k) next += model.coefficients[k] * buf[last - k];
    buf.push_back(next);
    out[step] = next;
  }
  return out;
}

/// Window end positions (last history index) for one sequence.
inline std::vector<std::size_t> window_ends(std::size_t length, std::size_t history_len,
                                            std::size_t horizon_len, std::size_t stride) {
  std::vector<std::size_t> ends;
  if (stride == 0) stride = 1;
  for (std::size_t e = history_len - 1; e + horizon_len < length; e += stride) ends.push_back(e);
  return ends;
}

struct FitOptions {
  double train_fraction = 0.8;
  std::size_t window_stride = 100;  // spacing of windows used for RRMSE reporting
};

/// Number of leading sequences used for training; at least one is held out.
inline std::size_t training_count(std::size_t n_seq, double train_fraction) {
  if (n_seq < 2) throw std::invalid_argument("fit_predictor: need at least 2 sequences for the split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("fit_predictor: train_fraction must lie in (0,1)");
  }
  const auto n = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n_seq)));
  return std::clamp<std::size_t>(n, 1, n_seq - 1);
}

/// The sequences not used for training, with the full dataset's normalizer.
inline TrajectoryDataset held_out(const TrajectoryDataset& data, double train_fraction = 0.8) {
  TrajectoryDataset out;
  out.sample_rate_hz = data.sample_rate_hz;
  out.range_norm = data.range_norm;
  out.seed = data.seed;
  const std::size_t n_train = training_count(data.sequences.size(), train_fraction);
  out.sequences.assign(data.sequences.begin() + static_cast<std::ptrdiff_t>(n_train), data.sequences.end());
  return out;
}

namespace detail {

inline double windowed_rrmse(const PredictorModel& model, const TrajectoryDataset& data,
                             std::size_t first, std::size_t last, std::size_t stride) {
  std::vector<double> preds, truth;
  for (std::size_t s = first; s < last; ++s) {
    const auto& q = data.sequences[s].position;
    for (std::size_t e : window_ends(q.size(), model.history_len, model.horizon_len, stride)) {
      const std::span<const double> hist(q.data() + e + 1 - model.history_len, model.history_len);
      const auto p = predict(model, hist);
      preds.insert(preds.end(), p.begin(), p.end());
      truth.insert(truth.end(), q.begin() + static_cast<std::ptrdiff_t>(e + 1),
                   q.begin() + static_cast<std::ptrdiff_t>(e + 1 + model.horizon_len));
    }
  }
  if (truth.empty()) throw std::invalid_argument("fit_predictor: no complete windows in split");
  return rrmse(preds, truth);
}

}  // namespace detail

/**
 * Least-squares AR(order) fit of the one-step position recursion on the first
 * 80% of sequences; the remaining sequences give the validation RRMSE of the
 * recursive horizon_len-step rollout.
 */
inline PredictorModel fit_predictor(const TrajectoryDataset& data, std::size_t history_len,
                                    std::size_t horizon_len, std::size_t order,
                                    const FitOptions& options = {}) {
  if (order < 1 || order > history_len) {
    throw std::invalid_argument("fit_predictor: need 1 <= order <= history_len");
  }
  if (horizon_len < 1) throw std::invalid_argument("fit_predictor: horizon_len must be >= 1");
  const std::size_t n_seq = data.sequences.size();
  const std::size_t n_train = training_count(n_seq, options.train_fraction);

  std::size_t rows = 0;
  for (std::size_t s = 0; s < n_train; ++s) {
    const std::size_t len = data.sequences[s].position.size();
    if (len < history_len + horizon_len) {
      throw std::invalid_argument("fit_predictor: sequence shorter than one window");
    }
    rows += len - order;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(order));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (std::size_t s = 0; s < n_train; ++s) {
    const auto& q = data.sequences[s].position;
    for (std::size_t t = order; t < q.size(); ++t, ++r) {
      y(r) = q[t];
      for (std::size_t k = 0; k < order; ++k) x(r, static_cast<Eigen::Index>(k)) = q[t - 1 - k];
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-11);
  if (qr.rank() < static_cast<Eigen::Index>(order)) {
    const auto degenerate = qr.colsPermutation().indices()(qr.rank());
    throw std::runtime_error("fit_predictor: rank-deficient regression, regressor lag-" +
                             std::to_string(degenerate + 1) +
                             " is linearly dependent on the other lags");
  }
  Eigen::VectorXd coef = qr.solve(y);
  // Two rounds of refinement with the residual accumulated in extended
  // precision; exactly representable recursions then come out to ~1 ulp.
  for (int round = 0; round < 2; ++round) {
    Eigen::VectorXd resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      long double acc = y(i);
      for (Eigen::Index k = 0; k < x.cols(); ++k) acc -= static_cast<long double>(x(i, k)) * coef(k);
      resid(i) = static_cast<double>(acc);
    }
    coef += qr.solve(resid);
  }

  PredictorModel model;
  model.order = order;
  model.history_len = history_len;
  model.horizon_len = horizon_len;
  model.coefficients.assign(coef.data(), coef.data() + coef.size());
  for (std::size_t s = 0; s < n_train; ++s) {
    model.training_fingerprints.push_back(detail::fingerprint(data.sequences[s].position));
  }
  model.train_rrmse = detail::windowed_rrmse(model, data, 0, n_train, options.window_stride);
  model.validation_rrmse = detail::windowed_rrmse(model, data, n_train, n_seq, options.window_stride);
  return model;
}

struct EstimateOptions {
  std::size_t window_stride = 250;
  std::uint64_t min_windows = 100;
};

struct TradeoffEstimate {
  TradeoffTable raw;    // exceedance fractions straight from counting
  TradeoffTable table;  // isotonic projection, then the 1/(10 n) floor
  std::vector<std::uint64_t> exceed_counts;
  std::uint64_t windows = 0;
  ProjectionReport projection;
};

/**
 * Cell (T, delta) is the fraction of held-out windows whose position error at
 * horizon T exceeds delta percent of the dataset range.
 */
inline TradeoffEstimate estimate_error_prob(const PredictorModel& model,
                                            const TrajectoryDataset& data,
                                            const std::vector<double>& horizons_ms,
                                            const std::vector<double>& deltas_pct,
                                            const EstimateOptions& options = {}) {
  std::vector<std::size_t> steps;
  for (double h : horizons_ms) {
    const double slots = h * kSampleRateHz / 1000.0;
    if (slots < 1.0 || slots != std::floor(slots) ||
        static_cast<std::size_t>(slots) > model.horizon_len) {
      throw std::invalid_argument("estimate_error_prob: horizon " + std::to_string(h) +
                                  " ms must be a whole number of slots in [1, horizon_len]");
    }
    steps.push_back(static_cast<std::size_t>(slots));
  }
  for (const Trajectory& tr : data.sequences) {
    const auto fp = detail::fingerprint(tr.position);
    if (std::find(model.training_fingerprints.begin(), model.training_fingerprints.end(), fp) !=
        model.training_fingerprints.end()) {
      throw std::invalid_argument("estimate_error_prob: held-out data overlaps training sequences");
    }
  }

  const std::size_t nh = horizons_ms.size(), nd = deltas_pct.size();
  std::vector<double> thresholds(nd);
  for (std::size_t d = 0; d < nd; ++d) thresholds[d] = deltas_pct[d] * data.range_norm / 100.0;

  std::vector<std::uint64_t> exceed(nh * nd, 0);
  std::uint64_t windows = 0;
  for (const Trajectory& tr : data.sequences) {
    const auto& q = tr.position;
    for (std::size_t e : window_ends(q.size(), model.history_len, model.horizon_len,
                                     options.window_stride)) {
      const std::span<const double> hist(q.data() + e + 1 - model.history_len, model.history_len);
      const auto pred = predict(model, hist);
      ++windows;
      for (std::size_t h = 0; h < nh; ++h) {
        const double err = std::abs(pred[steps[h] - 1] - q[e + steps[h]]);
        for (std::size_t d = 0; d < nd; ++d) {
          if (err > thresholds[d]) ++exceed[h * nd + d];
        }
      }
    }
  }
  if (windows < options.min_windows) {
    throw std::invalid_argument("estimate_error_prob: only " + std::to_string(windows) +
                                " windows per cell (need " + std::to_string(options.min_windows) +
                                "), first cell (" + std::to_string(horizons_ms.front()) + " ms, " +
                                std::to_string(deltas_pct.front()) + " %)");
  }

  std::vector<double> eps(nh * nd);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i] = static_cast<double>(exceed[i]) / static_cast<double>(windows);
  }
  const std::vector<std::uint64_t> counts(nh * nd, windows);
  TradeoffEstimate out{TradeoffTable(horizons_ms, deltas_pct, eps, counts),
                       TradeoffTable(horizons_ms, deltas_pct, eps, counts), std::move(exceed),
                       windows, {}};
  out.projection = isotonic_project(out.table);
  const double floor = 1.0 / (10.0 * static_cast<double>(windows));
  for (std::size_t h = 0; h < nh; ++h) {
    for (std::size_t d = 0; d < nd; ++d) {
      if (out.table.at(h, d) < floor) {
        out.table.at(h, d) = floor;
        out.table.set_floored(h, d, true);
      }
    }
  }
  return out;
}

}  // namespace hcd
