#pragma once

// The batch commands behind the hcd tool. Each one is a pure function of its
// configuration and seed; outputs are written into one directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "haptic_codesign/cli/config.hpp"
#include "haptic_codesign/optimizer.hpp"
#include "haptic_codesign/prediction.hpp"
#include "haptic_codesign/presets.hpp"
#include "haptic_codesign/simulator.hpp"

namespace hcd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitInfeasible = 2;

struct CommandContext {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::ostream* log = nullptr;
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
};

// ---- key groups -----------------------------------------------------------

inline std::vector<KeySpec> link_keys() {
  return {
      {"tx_power_dbm", "23", "transmit power"},
      {"noise_psd_dbm_hz", "-144", "noise power spectral density"},
      {"distance_km", "0.2", "transmitter-receiver distance"},
      {"backhaul_ms", "10", "core network and backhaul delay"},
      {"tx_duration_ms", "0.5", "transmission time interval"},
      {"coherence_ms", "10", "channel coherence time"},
      {"horizon_cap_ms", "50", "largest prediction horizon"},
      {"fading", "fixed", "fixed | rayleigh"},
      {"fading_gain", "1", "small-scale gain for fading=fixed"},
      {"quadrature_nodes", "32", "nodes per panel for fading=rayleigh"},
  };
}

inline std::vector<KeySpec> task_keys() {
  return {
      {"tasks", "critical,non_critical", "task classes to evaluate"},
      {"dmax_ms", "20", "delay bound"},
      {"eps_max", "1e-5", "reliability target"},
      {"arrival_rate_per_s", "100", "packet arrival rate"},
      {"packet_bits", "1000", "bits per arrival"},
      {"jnd_critical_pct", "0.1", "JND threshold of the critical class"},
      {"jnd_noncritical_pct", "1", "JND threshold of the non-critical class"},
  };
}

inline std::vector<KeySpec> table_keys() {
  return {
      {"table", "stipulated", "stipulated, or the path of a table file"},
      {"table_strict", "false", "reject non-monotone table files"},
      {"surface_log10_p_ref", "-4.56", "stipulated surface: log10 f at 0 ms and the reference delta"},
      {"surface_slope_per_ms", "0.002", "stipulated surface: log10 slope in horizon"},
      {"surface_delta_exponent", "4.45", "stipulated surface: power of delta_ref/delta"},
  };
}

inline std::vector<KeySpec> search_keys() {
  return {
      {"w_min_khz", "1", "lower end of the bandwidth search"},
      {"w_max_khz", "1000", "upper end of the bandwidth search"},
      {"b_min_bits", "1", "smallest bits per TTI"},
      {"b_max_bits", "2000", "largest bits per TTI"},
      {"b_step_bits", "1", "bit grid resolution"},
      {"tolerance", "squared", "squared | absolute"},
      {"tolerance_abs", "0", "band for tolerance=absolute"},
      {"max_iters", "64", "bisection iteration cap"},
      {"verify_unimodality", "false", "scan the full bit grid at every probe"},
      {"cap_at_capacity", "true", "restrict bits to decoding error <= 1/2"},
  };
}

inline std::vector<KeySpec> concat(std::initializer_list<std::vector<KeySpec>> groups) {
  std::vector<KeySpec> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

inline std::vector<KeySpec> tradeoff_keys() {
  return {
      {"sequences", "50", "number of generated trajectories"},
      {"length_slots", "20000", "samples per trajectory at 1 kHz"},
      {"process", "ou", "ou | sinusoid_mix"},
      {"ou_theta_per_s", "20", "velocity mean-reversion rate"},
      {"ou_sigma", "1", "velocity noise intensity"},
      {"sin_components", "4", "sinusoids per trajectory"},
      {"sin_max_freq_hz", "10", "highest sinusoid frequency"},
      {"sin_amplitude", "0.2", "typical sinusoid amplitude"},
      {"position_offset", "1", "mean position"},
      {"history_slots", "500", "history window"},
      {"horizon_slots", "100", "prediction window"},
      {"ar_order", "4", "autoregressive order"},
      {"horizons_ms", "1:100:1", "table horizons"},
      {"deltas_pct", "0.1,0.2,0.5,1,2,5", "table JND thresholds"},
      {"window_stride_slots", "25", "spacing of evaluation windows"},
      {"min_windows", "100", "fewest windows allowed per cell"},
  };
}

inline std::vector<KeySpec> optimize_keys() {
  return concat({link_keys(), task_keys(), table_keys(), search_keys(),
                 {{"format", "json", "json | csv"}}});
}

inline std::vector<KeySpec> allocate_keys() {
  return concat({link_keys(), task_keys(), table_keys(), search_keys(),
                 {{"ratio", "0", "critical task ratio r"},
                  {"n_users_max", "40", "largest user count in the bandwidth curve"},
                  {"alloc_w_max_khz", "1000", "available bandwidth for the summary"},
                  {"w_sweep_khz", "100:3000:100", "available bandwidths for the users curve"},
                  {"w_critical_khz", "0", "inject the critical optimum (0: optimize)"},
                  {"w_noncritical_khz", "0", "inject the non-critical optimum (0: optimize)"}}});
}

inline std::vector<KeySpec> simulate_keys() {
  return concat({link_keys(), task_keys(), table_keys(),
                 {{"task", "non_critical", "critical | non_critical"},
                  {"w_khz", "30", "allocated bandwidth"},
                  {"bits", "94", "bits per TTI"},
                  {"n_slots", "200000", "simulated TTIs"},
                  {"forced_decode_error", "", "fix the decoding error (empty: from the link)"},
                  {"loss_levels", "", "decoding errors for the placement sweep"},
                  {"replications", "1", "independent replications, run concurrently"},
                  {"format", "json", "json | csv"}}});
}

inline std::vector<KeySpec> sweep_keys() {
  return concat({link_keys(), task_keys(), table_keys(), search_keys(),
                 {{"dmax_grid_ms", "0.5:60:0.5", "delay bounds for the delay sweep"},
                  {"sweep_eps_d", "1e-5", "decoding error fixed in the delay sweep"},
                  {"sweep_bits", "268", "bits per TTI in the delay sweep"},
                  {"sweep_w_khz", "0", "bandwidth of the bit sweep (0: each task's optimum)"},
                  {"b_grid_bits", "1:600:1", "bits for the bit sweep"},
                  {"w_grid_khz", "10:300:5", "bandwidths for the bandwidth sweep"}}});
}

inline RunConfig make_config(const std::string& command) {
  if (command == "tradeoff") return RunConfig(command, tradeoff_keys());
  if (command == "optimize") return RunConfig(command, optimize_keys());
  if (command == "allocate") return RunConfig(command, allocate_keys());
  if (command == "simulate") return RunConfig(command, simulate_keys());
  if (command == "sweep") return RunConfig(command, sweep_keys());
  throw ConfigError("unknown command " + command);
}

// ---- builders -------------------------------------------------------------

template <class F>
auto checked(const RunConfig& cfg, const std::string& what, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(cfg.command() + "." + what + ": " + e.what());
  }
}

inline LinkParams build_link(const RunConfig& cfg) {
  return checked(cfg, "link", [&] {
    LinkParams l;
    l.tx_power_dbm = cfg.num("tx_power_dbm");
    l.noise_psd_dbm_hz = cfg.num("noise_psd_dbm_hz");
    l.distance_km = cfg.num("distance_km");
    l.backhaul_delay_ms = cfg.num("backhaul_ms");
    l.tx_duration_ms = cfg.num("tx_duration_ms");
    l.coherence_time_ms = cfg.num("coherence_ms");
    l.horizon_cap_ms = cfg.num("horizon_cap_ms");
    if (cfg.choice("fading", {"fixed", "rayleigh"}) == "fixed") {
      l.fading = FixedGain{cfg.num("fading_gain")};
    } else {
      l.fading = RayleighAverage{static_cast<int>(cfg.integer("quadrature_nodes"))};
    }
    l.validate();
    return l;
  });
}

inline TaskSpec build_task(const RunConfig& cfg, const std::string& name) {
  return checked(cfg, "tasks", [&] {
    TaskSpec t;
    if (name == "critical") {
      t = presets::critical_task();
      t.jnd_threshold_pct = cfg.num("jnd_critical_pct");
    } else if (name == "non_critical") {
      t = presets::non_critical_task();
      t.jnd_threshold_pct = cfg.num("jnd_noncritical_pct");
    } else {
      throw ConfigError(cfg.path("tasks") + ": unknown task class '" + name + "'");
    }
    t.delay_bound_ms = cfg.num("dmax_ms");
    t.reliability_target = cfg.num("eps_max");
    t.arrival_rate = cfg.num("arrival_rate_per_s");
    t.packet_bits = cfg.num("packet_bits");
    t.validate();
    return t;
  });
}

inline std::vector<std::pair<std::string, TaskSpec>> build_tasks(const RunConfig& cfg) {
  std::vector<std::pair<std::string, TaskSpec>> out;
  for (const std::string& name : cfg.words("tasks")) out.emplace_back(name, build_task(cfg, name));
  if (out.empty()) throw ConfigError(cfg.path("tasks") + ": no task classes given");
  return out;
}

inline TradeoffTable build_table(const RunConfig& cfg) {
  return checked(cfg, "table", [&] {
    const std::string& src = cfg.str("table");
    if (src == "stipulated") {
      StipulatedSurface s;
      s.log10_p_ref = cfg.num("surface_log10_p_ref");
      s.slope_per_ms = cfg.num("surface_slope_per_ms");
      s.delta_exponent = cfg.num("surface_delta_exponent");
      return presets::stipulated_table(s);
    }
    return load_table(src, cfg.flag("table_strict"));
  });
}

inline SearchConfig build_search(const RunConfig& cfg) {
  return checked(cfg, "search", [&] {
    SearchConfig s;
    s.w_min_khz = cfg.num("w_min_khz");
    s.w_max_khz = cfg.num("w_max_khz");
    s.b_min = cfg.integer("b_min_bits");
    s.b_max = cfg.integer("b_max_bits");
    s.b_step = cfg.integer("b_step_bits");
    if (cfg.choice("tolerance", {"squared", "absolute"}) == "absolute") {
      s.tolerance = {ToleranceRule::Kind::absolute, cfg.num("tolerance_abs")};
    }
    s.max_iters = static_cast<int>(cfg.integer("max_iters"));
    s.verify_unimodality = cfg.flag("verify_unimodality");
    s.cap_at_capacity = cfg.flag("cap_at_capacity");
    s.validate();
    return s;
  });
}

// ---- output helpers -------------------------------------------------------

inline std::string num_text(double v) { return format_probability(v); }

inline std::string header_comment(const RunConfig& cfg, const CommandContext& ctx) {
  return "hcd " + cfg.command() + " config_hash=" + cfg.hash_hex() +
         " seed=" + (ctx.seed ? std::to_string(*ctx.seed) : std::string("none"));
}

inline std::filesystem::path write_output(const CommandContext& ctx, const std::string& name,
                                          const std::string& content, CommandResult& result) {
  std::filesystem::create_directories(ctx.out_dir);
  const auto path = ctx.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  result.files.push_back(path);
  return path;
}

inline nlohmann::ordered_json provenance(const RunConfig& cfg, const CommandContext& ctx) {
  nlohmann::ordered_json j;
  j["command"] = cfg.command();
  j["config_hash"] = cfg.hash_hex();
  if (ctx.seed) {
    j["seed"] = *ctx.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j;
}

inline nlohmann::ordered_json breakdown_json(const ErrorBreakdown& e) {
  nlohmann::ordered_json j;
  j["eps_d"] = e.eps_d;
  j["fq_dth"] = e.fq_dth;
  j["fq_dth_tth"] = e.fq_dth_tth;
  j["eps_p_ch"] = e.eps_p_ch;
  j["eps_p_tth"] = e.eps_p_tth;
  j["term1"] = e.term1;
  j["term2"] = e.term2;
  j["term3"] = e.term3;
  j["total"] = e.total;
  j["queuing_threshold_ms"] = e.queuing_threshold_ms;
  j["table_clamped"] = e.table_clamped;
  return j;
}

inline const char* kBreakdownColumns =
    "eps_d,fq_dth,fq_dth_tth,eps_p_ch,eps_p_tth,term1,term2,term3,total";

inline std::string breakdown_csv(const ErrorBreakdown& e) {
  return num_text(e.eps_d) + "," + num_text(e.fq_dth) + "," + num_text(e.fq_dth_tth) + "," +
         num_text(e.eps_p_ch) + "," + num_text(e.eps_p_tth) + "," + num_text(e.term1) + "," +
         num_text(e.term2) + "," + num_text(e.term3) + "," + num_text(e.total);
}

inline void note(const CommandContext& ctx, const std::string& text) {
  if (ctx.log) *ctx.log << text << '\n';
}

inline std::uint64_t require_seed(const RunConfig& cfg, const CommandContext& ctx) {
  if (!ctx.seed) throw ConfigError(cfg.command() + ": --seed is required");
  return *ctx.seed;
}

// ---- commands -------------------------------------------------------------

inline CommandResult cmd_tradeoff(const RunConfig& cfg, const CommandContext& ctx) {
  const std::uint64_t seed = require_seed(cfg, ctx);
  GeneratorParams gp = checked(cfg, "process", [&] {
    GeneratorParams p;
    p.process = cfg.choice("process", {"ou", "sinusoid_mix"}) == "ou" ? TrajectoryProcess::ou
                                                                      : TrajectoryProcess::sinusoid_mix;
    p.ou_theta = cfg.num("ou_theta_per_s");
    p.ou_sigma = cfg.num("ou_sigma");
    p.sin_components = static_cast<int>(cfg.integer("sin_components"));
    p.sin_max_freq_hz = cfg.num("sin_max_freq_hz");
    p.sin_amplitude = cfg.num("sin_amplitude");
    p.position_offset = cfg.num("position_offset");
    p.validate();
    return p;
  });
  const auto sequences = cfg.integer("sequences");
  const auto length = cfg.integer("length_slots");
  const auto history = cfg.integer("history_slots");
  const auto horizon = cfg.integer("horizon_slots");
  const auto order = cfg.integer("ar_order");
  const auto stride = cfg.integer("window_stride_slots");
  const auto min_windows = cfg.integer("min_windows");
  for (const auto& [key, v] : {std::pair{"sequences", sequences}, {"length_slots", length},
                               {"history_slots", history}, {"horizon_slots", horizon},
                               {"ar_order", order}, {"window_stride_slots", stride}}) {
    if (v < 1) throw ConfigError(cfg.path(key) + ": must be >= 1");
  }
  if (min_windows < 0) throw ConfigError(cfg.path("min_windows") + ": must be >= 0");
  const std::vector<double> horizons = cfg.list("horizons_ms");
  const std::vector<double> deltas = cfg.list("deltas_pct");

  const TrajectoryDataset data = checked(cfg, "sequences", [&] {
    return generate_trajectories(static_cast<std::size_t>(sequences), static_cast<std::size_t>(length),
                                 seed, gp);
  });
  const PredictorModel model = checked(cfg, "ar_order", [&] {
    return fit_predictor(data, static_cast<std::size_t>(history), static_cast<std::size_t>(horizon),
                         static_cast<std::size_t>(order));
  });
  const TradeoffEstimate est = checked(cfg, "horizons_ms", [&] {
    EstimateOptions opt;
    opt.window_stride = static_cast<std::size_t>(stride);
    opt.min_windows = static_cast<std::uint64_t>(min_windows);
    return estimate_error_prob(model, held_out(data), horizons, deltas, opt);
  });

  CommandResult result;
  const std::string comment = header_comment(cfg, ctx);
  std::ostringstream table_text;
  save_table(est.table, table_text, comment);
  write_output(ctx, "tradeoff_table.csv", table_text.str(), result);

  std::ostringstream curves;
  curves << "# " << comment << '\n' << "horizon_ms";
  // projected curves first, then the raw counting fractions
  auto label = [](double d) {
    std::ostringstream os;
    os << d;
    return os.str();
  };
  for (double d : deltas) curves << ",eps_p_delta_" << label(d) << "pct";
  for (double d : deltas) curves << ",raw_eps_p_delta_" << label(d) << "pct";
  curves << '\n';
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    curves << num_text(horizons[h]);
    for (std::size_t d = 0; d < deltas.size(); ++d) curves << ',' << num_text(est.table.at(h, d));
    for (std::size_t d = 0; d < deltas.size(); ++d) curves << ',' << num_text(est.raw.at(h, d));
    curves << '\n';
  }
  write_output(ctx, "tradeoff_curves.csv", curves.str(), result);

  nlohmann::ordered_json j = provenance(cfg, ctx);
  j["ar_order"] = model.order;
  j["coefficients"] = model.coefficients;
  j["train_rrmse_pct"] = model.train_rrmse;
  j["validation_rrmse_pct"] = model.validation_rrmse;
  j["range_norm"] = data.range_norm;
  j["windows_per_cell"] = est.windows;
  j["projection_max_shift"] = est.projection.max_shift;
  std::size_t floored = 0;
  for (bool f : est.table.floored()) floored += f ? 1 : 0;
  j["floored_cells"] = floored;
  write_output(ctx, "tradeoff_summary.json", j.dump(2) + "\n", result);
  note(ctx, "tradeoff: " + std::to_string(est.windows) + " windows per cell, validation RRMSE " +
                num_text(model.validation_rrmse) + " %");
  return result;
}

inline nlohmann::ordered_json allocation_json(const std::string& name, const TaskSpec& task,
                                              const AllocationResult& r) {
  nlohmann::ordered_json j;
  j["task"] = name;
  j["delay_bound_ms"] = task.delay_bound_ms;
  j["reliability_target"] = task.reliability_target;
  j["jnd_threshold_pct"] = task.jnd_threshold_pct;
  j["feasible"] = r.feasible;
  j["bandwidth_opt_khz"] = r.bandwidth_opt;
  j["bits_opt"] = r.bits_opt;
  j["iterations"] = r.iterations;
  j["unimodality_violations"] = r.unimodality_violations;
  j["breakdown"] = breakdown_json(r.breakdown);
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const Probe& p : r.trace) trace.push_back({{"w_khz", p.bandwidth_khz}, {"bits", p.bits}, {"eps", p.eps}});
  j["trace"] = trace;
  return j;
}

inline CommandResult cmd_optimize(const RunConfig& cfg, const CommandContext& ctx) {
  const LinkParams link = build_link(cfg);
  const auto tasks = build_tasks(cfg);
  const TradeoffTable table = build_table(cfg);
  const SearchConfig search = build_search(cfg);
  const std::string format = cfg.choice("format", {"json", "csv"});

  CommandResult result;
  nlohmann::ordered_json j = provenance(cfg, ctx);
  j["results"] = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "# " << header_comment(cfg, ctx) << '\n'
      << "task,feasible,bandwidth_opt_khz,bits_opt,iterations," << kBreakdownColumns << '\n';
  bool all_feasible = true;
  for (const auto& [name, task] : tasks) {
    const AllocationResult r = outer_opt_bandwidth(task, link, table, search);
    all_feasible = all_feasible && r.feasible;
    j["results"].push_back(allocation_json(name, task, r));
    csv << name << ',' << (r.feasible ? 1 : 0) << ',' << num_text(r.bandwidth_opt) << ','
        << num_text(r.bits_opt) << ',' << r.iterations << ',' << breakdown_csv(r.breakdown) << '\n';
    note(ctx, "optimize " + name + ": " + (r.feasible ? "W* = " + num_text(r.bandwidth_opt) + " kHz, b* = " +
                                                            num_text(r.bits_opt)
                                                      : std::string("infeasible")));
  }
  if (format == "json") {
    write_output(ctx, "optimize.json", j.dump(2) + "\n", result);
  } else {
    write_output(ctx, "optimize.csv", csv.str(), result);
  }
  result.exit_code = all_feasible ? kExitOk : kExitInfeasible;
  return result;
}

/// Task classes in admission order: user i is critical when floor((i+1) r) > floor(i r).
inline std::vector<bool> critical_pattern(std::size_t n, double ratio) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::floor(static_cast<double>(i + 1) * ratio + 1e-12) >
             std::floor(static_cast<double>(i) * ratio + 1e-12);
  }
  return out;
}

inline CommandResult cmd_allocate(const RunConfig& cfg, const CommandContext& ctx) {
  const double ratio = cfg.num("ratio");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError(cfg.path("ratio") + ": must lie in [0,1]");
  const auto n_max = cfg.integer("n_users_max");
  if (n_max < 1) throw ConfigError(cfg.path("n_users_max") + ": must be >= 1");
  const double w_avail = cfg.num("alloc_w_max_khz");
  if (!(w_avail > 0.0)) throw ConfigError(cfg.path("alloc_w_max_khz") + ": must be > 0");
  const std::vector<double> w_sweep = cfg.list("w_sweep_khz");

  double w_c = cfg.num("w_critical_khz");
  double w_nc = cfg.num("w_noncritical_khz");
  if (w_c < 0.0 || w_nc < 0.0) throw ConfigError(cfg.command() + ": injected optima must be >= 0");
  nlohmann::ordered_json j = provenance(cfg, ctx);
  if (w_c == 0.0 || w_nc == 0.0) {
    const LinkParams link = build_link(cfg);
    const TradeoffTable table = build_table(cfg);
    const SearchConfig search = build_search(cfg);
    auto solve = [&](const std::string& name) {
      const AllocationResult r = outer_opt_bandwidth(build_task(cfg, name), link, table, search);
      return r.feasible ? r.bandwidth_opt : std::numeric_limits<double>::infinity();
    };
    if (w_c == 0.0) w_c = solve("critical");
    if (w_nc == 0.0) w_nc = solve("non_critical");
  }
  j["w_critical_khz"] = std::isfinite(w_c) ? nlohmann::ordered_json(w_c) : nlohmann::ordered_json(nullptr);
  j["w_noncritical_khz"] = std::isfinite(w_nc) ? nlohmann::ordered_json(w_nc) : nlohmann::ordered_json(nullptr);
  j["ratio"] = ratio;

  CommandResult result;
  if (!std::isfinite(w_c) || !std::isfinite(w_nc)) {
    write_output(ctx, "allocate_summary.json", j.dump(2) + "\n", result);
    note(ctx, "allocate: a task class is infeasible");
    result.exit_code = kExitInfeasible;
    return result;
  }

  auto optima_for = [&](std::size_t n) {
    std::vector<double> w;
    for (bool c : critical_pattern(n, ratio)) w.push_back(c ? w_c : w_nc);
    return w;
  };
  const std::string comment = header_comment(cfg, ctx);

  std::ostringstream total;
  total << "# " << comment << '\n'
        << "n_users,n_critical,total_bw_task_oriented_khz,total_bw_task_agnostic_khz,savings_pct\n";
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const auto pattern = critical_pattern(static_cast<std::size_t>(n), ratio);
    const auto n_crit = static_cast<std::size_t>(std::count(pattern.begin(), pattern.end(), true));
    const double oriented = static_cast<double>(n_crit) * w_c + static_cast<double>(n - static_cast<std::int64_t>(n_crit)) * w_nc;
    const double agnostic = static_cast<double>(n) * w_c;
    total << n << ',' << n_crit << ',' << num_text(oriented) << ',' << num_text(agnostic) << ','
          << num_text(100.0 * (1.0 - oriented / agnostic)) << '\n';
  }
  write_output(ctx, "allocate_total_bw.csv", total.str(), result);

  std::ostringstream users;
  users << "# " << comment << '\n' << "w_max_khz,users_task_oriented,users_task_agnostic\n";
  for (double w : w_sweep) {
    if (!(w > 0.0)) throw ConfigError(cfg.path("w_sweep_khz") + ": bandwidths must be > 0");
    const auto n = static_cast<std::size_t>(w / std::min(w_c, w_nc)) + 2;
    const auto optima = optima_for(n);
    users << num_text(w) << ','
          << allocate_bandwidths(optima, w, AllocationMode::task_oriented).n_served << ','
          << allocate_bandwidths(optima, w, AllocationMode::task_agnostic, w_c).n_served << '\n';
  }
  write_output(ctx, "allocate_users.csv", users.str(), result);

  const auto n_cap = static_cast<std::size_t>(w_avail / std::min(w_c, w_nc)) + 2;
  const auto optima = optima_for(n_cap);
  const MultiUserResult to = allocate_bandwidths(optima, w_avail, AllocationMode::task_oriented);
  const MultiUserResult ta = allocate_bandwidths(optima, w_avail, AllocationMode::task_agnostic, w_c);
  j["alloc_w_max_khz"] = w_avail;
  j["served_task_oriented"] = to.n_served;
  j["served_task_agnostic"] = ta.n_served;
  j["total_bw_task_oriented_khz"] = to.total_bw_khz;
  j["total_bw_task_agnostic_khz"] = ta.total_bw_khz;
  j["savings_pct"] = bandwidth_savings(w_c, w_nc, ratio);
  write_output(ctx, "allocate_summary.json", j.dump(2) + "\n", result);
  note(ctx, "allocate: " + std::to_string(to.n_served) + " vs " + std::to_string(ta.n_served) +
                " users in " + num_text(w_avail) + " kHz");
  return result;
}

inline nlohmann::ordered_json report_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["placement"] = r.placement == Placement::receiver ? "receiver" : "transmitter";
  j["seed"] = r.seed;
  j["n_slots"] = r.n_slots;
  j["arrivals"] = r.arrivals;
  j["packets"] = r.packets;
  j["errors"] = r.errors;
  j["empirical_overall_error"] = r.empirical_overall_error;
  j["ci95_half_width"] = r.ci95_half_width;
  j["analytic_bound"] = r.analytic_bound;
  j["case_counts"] = {r.case_counts[0], r.case_counts[1], r.case_counts[2]};
  j["decode_failures"] = r.decode_failures;
  j["queue_violations"] = r.queue_violations;
  j["prediction_failures"] = r.prediction_failures;
  j["mean_wait_ms"] = r.mean_wait_ms();
  j["mean_queue_length"] = r.mean_queue_length();
  // sparse histogram: [bin_ms, count] for non-empty bins
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < r.delay_histogram.size(); ++b) {
    if (r.delay_histogram[b]) hist.push_back({b, r.delay_histogram[b]});
  }
  j["delay_histogram_ms"] = hist;
  return j;
}

inline CommandResult cmd_simulate(const RunConfig& cfg, const CommandContext& ctx) {
  const std::uint64_t seed = require_seed(cfg, ctx);
  SimScenario s;
  s.link = build_link(cfg);
  s.task = build_task(cfg, cfg.choice("task", {"critical", "non_critical"}));
  s.table = build_table(cfg);
  s.bandwidth_khz = cfg.num("w_khz");
  s.bits = cfg.num("bits");
  const auto n_slots = cfg.integer("n_slots");
  if (n_slots < 10000) throw ConfigError(cfg.path("n_slots") + ": must be >= 10000");
  s.n_slots = static_cast<std::uint64_t>(n_slots);
  s.seed = seed;
  if (!cfg.str("forced_decode_error").empty()) s.forced_decode_error = cfg.num("forced_decode_error");
  const auto reps = cfg.integer("replications");
  if (reps < 1) throw ConfigError(cfg.path("replications") + ": must be >= 1");
  const std::vector<double> levels = cfg.list("loss_levels");
  const std::string format = cfg.choice("format", {"json", "csv"});
  checked(cfg, "scenario", [&] {
    s.validate();
    return 0;
  });

  CommandResult result;
  const PlacementPair pair = compare_placements_replicated(s, static_cast<unsigned>(reps));
  if (format == "json") {
    nlohmann::ordered_json j = provenance(cfg, ctx);
    j["bandwidth_khz"] = s.bandwidth_khz;
    j["bits"] = s.bits;
    j["receiver"] = report_json(pair.receiver);
    j["transmitter"] = report_json(pair.transmitter);
    write_output(ctx, "simulate_report.json", j.dump(2) + "\n", result);
  } else {
    std::ostringstream csv;
    csv << "# " << header_comment(cfg, ctx) << '\n'
        << "placement,packets,errors,empirical_overall_error,ci95_half_width,analytic_bound,"
           "case1,case2,case3,decode_failures,queue_violations,prediction_failures\n";
    for (const SimReport* r : {&pair.receiver, &pair.transmitter}) {
      csv << (r->placement == Placement::receiver ? "receiver" : "transmitter") << ',' << r->packets
          << ',' << r->errors << ',' << num_text(r->empirical_overall_error) << ','
          << num_text(r->ci95_half_width) << ',' << num_text(r->analytic_bound) << ','
          << r->case_counts[0] << ',' << r->case_counts[1] << ',' << r->case_counts[2] << ','
          << r->decode_failures << ',' << r->queue_violations << ',' << r->prediction_failures << '\n';
    }
    write_output(ctx, "simulate_report.csv", csv.str(), result);
  }

  if (!levels.empty()) {
    std::ostringstream csv;
    csv << "# " << header_comment(cfg, ctx) << '\n'
        << "packet_loss,eps_rx,ci95_rx,eps_tx,ci95_tx,packets\n";
    for (double loss : levels) {
      SimScenario level = s;
      level.forced_decode_error = loss;
      checked(cfg, "loss_levels", [&] {
        level.validate();
        return 0;
      });
      const PlacementPair p = compare_placements_replicated(level, static_cast<unsigned>(reps));
      csv << num_text(loss) << ',' << num_text(p.receiver.empirical_overall_error) << ','
          << num_text(p.receiver.ci95_half_width) << ',' << num_text(p.transmitter.empirical_overall_error)
          << ',' << num_text(p.transmitter.ci95_half_width) << ',' << p.receiver.packets << '\n';
    }
    write_output(ctx, "simulate_placements.csv", csv.str(), result);
  }
  note(ctx, "simulate: receiver " + num_text(pair.receiver.empirical_overall_error) + ", transmitter " +
                num_text(pair.transmitter.empirical_overall_error) + ", bound " +
                num_text(pair.receiver.analytic_bound));
  return result;
}

inline CommandResult cmd_sweep(const RunConfig& cfg, const CommandContext& ctx) {
  const LinkParams link = build_link(cfg);
  const auto tasks = build_tasks(cfg);
  const TradeoffTable table = build_table(cfg);
  const SearchConfig search = build_search(cfg);
  const std::vector<double> dmax_grid = cfg.list("dmax_grid_ms");
  const std::vector<double> b_grid = cfg.list("b_grid_bits");
  const std::vector<double> w_grid = cfg.list("w_grid_khz");
  const double eps_d = cfg.num("sweep_eps_d");
  const double sweep_bits = cfg.num("sweep_bits");
  const double sweep_w = cfg.num("sweep_w_khz");
  if (!(eps_d >= 0.0 && eps_d <= 1.0)) throw ConfigError(cfg.path("sweep_eps_d") + ": must lie in [0,1]");
  if (!(sweep_bits > 0.0)) throw ConfigError(cfg.path("sweep_bits") + ": must be > 0");
  if (sweep_w < 0.0) throw ConfigError(cfg.path("sweep_w_khz") + ": must be >= 0");
  for (double d : dmax_grid) {
    if (!(d > 0.0)) throw ConfigError(cfg.path("dmax_grid_ms") + ": delay bounds must be > 0");
  }
  for (double b : b_grid) {
    if (!(b > 0.0)) throw ConfigError(cfg.path("b_grid_bits") + ": bits must be > 0");
  }
  for (double w : w_grid) {
    if (!(w > 0.0)) throw ConfigError(cfg.path("w_grid_khz") + ": bandwidths must be > 0");
  }

  const std::string comment = header_comment(cfg, ctx);
  CommandResult result;
  std::ostringstream by_dmax, by_bits, by_w;
  by_dmax << "# " << comment << '\n' << "task,dmax_ms," << kBreakdownColumns << '\n';
  by_bits << "# " << comment << '\n' << "task,w_khz,bits," << kBreakdownColumns << '\n';
  by_w << "# " << comment << '\n' << "task,w_khz,bits," << kBreakdownColumns << '\n';
  bool infeasible = false;

  for (const auto& [name, task] : tasks) {
    for (double dmax : dmax_grid) {
      TaskSpec t = task;
      t.delay_bound_ms = dmax;
      by_dmax << name << ',' << num_text(dmax) << ','
              << breakdown_csv(error_bound_given_decoding(t, link, table, eps_d, sweep_bits)) << '\n';
    }
    double w = sweep_w;
    if (w == 0.0) {
      const AllocationResult r = outer_opt_bandwidth(task, link, table, search);
      infeasible = infeasible || !r.feasible;
      w = r.bandwidth_opt;
    }
    for (double b : b_grid) {
      by_bits << name << ',' << num_text(w) << ',' << num_text(b) << ','
              << breakdown_csv(overall_error_bound(task, link, table, w, b)) << '\n';
    }
    for (double wk : w_grid) {
      const BitsChoice c = inner_opt_bits(task, link, table, wk, search);
      by_w << name << ',' << num_text(wk) << ',' << num_text(c.bits) << ','
           << breakdown_csv(overall_error_bound(task, link, table, wk, c.bits)) << '\n';
    }
  }
  write_output(ctx, "sweep_dmax.csv", by_dmax.str(), result);
  write_output(ctx, "sweep_bits.csv", by_bits.str(), result);
  write_output(ctx, "sweep_bandwidth.csv", by_w.str(), result);
  if (infeasible) {
    note(ctx, "sweep: a task is infeasible in the search range; bit sweep used w_max");
    result.exit_code = kExitInfeasible;
  }
  return result;
}

inline CommandResult run_command(const RunConfig& cfg, const CommandContext& ctx) {
  const std::string& c = cfg.command();
  if (c == "tradeoff") return cmd_tradeoff(cfg, ctx);
  if (c == "optimize") return cmd_optimize(cfg, ctx);
  if (c == "allocate") return cmd_allocate(cfg, ctx);
  if (c == "simulate") return cmd_simulate(cfg, ctx);
  if (c == "sweep") return cmd_sweep(cfg, ctx);
  throw ConfigError("unknown command " + c);
}

}  // namespace hcd::cli
