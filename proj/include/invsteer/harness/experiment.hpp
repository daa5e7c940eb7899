#pragma once

// Experiment drivers behind the CLI: preset wiring, config resolution,
// manifest round-trip, and the simulate / ds / sweep / check subcommands.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "invsteer/controllers.hpp"
#include "invsteer/harness/config.hpp"
#include "invsteer/harness/csv.hpp"
#include "invsteer/stability.hpp"
#include "invsteer/systems.hpp"
#include "invsteer/version.hpp"

namespace invsteer::harness {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"lorenz-origin", "lorenz-sync", "seir-measles"};
  return names;
}

inline constexpr double kDaysPerYear = 365.0;

// Preset defaults: the experiment each preset reproduces out of the box.
inline ExperimentConfig preset_defaults(const std::string& name) {
  ExperimentConfig cfg;
  cfg.preset = name;
  cfg.dt = 1e-3;
  cfg.t0 = 0.0;
  cfg.sample_every = 10;
  cfg.seed = 1;
  if (name == "lorenz-origin") {
    cfg.schedule = "geometric";
    cfg.alpha = 5.0;
    cfg.kappa = 3.0;
    cfg.t1 = 0.01;
    cfg.t_max = 20.0;
    cfg.convergence_tol = 1e-10;
    cfg.horizon_T = 50.0;
  } else if (name == "lorenz-sync") {
    cfg.schedule = "fixed";
    cfg.alpha = 0.4;
    cfg.delta = 0.1;
    cfg.coupling = 5.0;
    cfg.t_max = 50.0;
    cfg.convergence_tol = 1e-10;
    cfg.horizon_T = 200.0;
    cfg.from = 0.0;
    cfg.to = 10.0;
    cfg.step = 0.25;
  } else if (name == "seir-measles") {
    cfg.schedule = "geometric";
    cfg.alpha = 0.002;
    cfg.kappa_eff = 0.8;
    cfg.t1 = 100.0 / kDaysPerYear;  // day 100, in years
    cfg.t_max = 3.0;
    cfg.convergence_tol = 0.0;  // epidemic runs go to the horizon
    cfg.horizon_T = 50.0;
  } else {
    throw ConfigError("key `preset`: unknown preset `" + name + "` (see list-presets)");
  }
  return cfg;
}

// Layered resolution: preset defaults, then each layer in order (file before
// flags). The preset itself is taken from the last layer that names one.
inline ExperimentConfig resolve_config(const std::vector<KeyValues>& layers) {
  const auto merged = merge_layers(layers);
  const auto it = merged.find("preset");
  if (it == merged.end()) throw ConfigError("key `preset`: required (see list-presets)");
  ExperimentConfig cfg = preset_defaults(it->second);
  apply_keys(cfg, merged);
  // A fixed schedule with no explicit first time starts one gap after t0.
  if (!ExperimentConfig::is_set(cfg.t1) && cfg.schedule == "fixed" &&
      ExperimentConfig::is_set(cfg.delta))
    cfg.t1 = cfg.t0 + cfg.delta;
  validate_common(cfg);
  return cfg;
}

struct PresetBundle {
  std::string name;
  SystemPreset sys;
};

inline PresetBundle make_preset(const ExperimentConfig& cfg) {
  if (cfg.preset == "lorenz-origin") return {cfg.preset, lorenz_preset(LorenzParams{})};
  if (cfg.preset == "lorenz-sync") {
    CoupledLorenzParams p;
    p.c = ExperimentConfig::is_set(cfg.coupling) ? cfg.coupling : 5.0;
    return {cfg.preset, coupled_lorenz_preset(p)};
  }
  if (cfg.preset == "seir-measles") return {cfg.preset, seir_preset(SeirParams{})};
  throw ConfigError("key `preset`: unknown preset `" + cfg.preset + "`");
}

inline Vec initial_J(const PresetBundle& b) {
  return b.sys.invariant.eval_J(b.sys.default_initial.x);
}

// The stability exponent a schedule rate is measured against: closed form
// when the on-surface matrix is constant, the time-average estimate otherwise.
inline double schedule_exponent(const PresetBundle& b, const ExperimentConfig& cfg) {
  const Vec J0 = initial_J(b);
  if (b.sys.on_surface.constant_L_S) return ds_constant_matrix(b.sys.on_surface.eval_L_S(J0));
  DsSettings s;
  s.T = ExperimentConfig::is_set(cfg.horizon_T) ? cfg.horizon_T : 200.0;
  s.dt = cfg.dt;
  s.burn_in = ExperimentConfig::is_set(cfg.burn_in) ? cfg.burn_in : -1.0;
  s.seed = cfg.seed;
  return estimate_ds(b.sys.on_surface, J0, s).D_S;
}

struct BuiltController {
  std::optional<ImpulseSchedule> schedule;
  std::optional<ImpulseMap> map;
  double rate = std::numeric_limits<double>::quiet_NaN();     // geometric schedules
  double ds_used = std::numeric_limits<double>::quiet_NaN();  // exponent behind the rate
  double kappa = std::numeric_limits<double>::quiet_NaN();    // rate * ds_used
};

inline BuiltController build_controller(const ExperimentConfig& cfg, const PresetBundle& b) {
  BuiltController out;
  if (!cfg.control) return out;
  if (!ExperimentConfig::is_set(cfg.alpha)) throw ConfigError("key `alpha`: required for control");

  ImpulseSchedule sched;
  sched.t1 = cfg.t1;
  if (cfg.schedule == "fixed") {
    if (!ExperimentConfig::is_set(cfg.delta))
      throw ConfigError("key `delta`: required for a fixed schedule");
    sched.law = FixedInterval{cfg.delta};
  } else if (cfg.schedule == "geometric") {
    if (ExperimentConfig::is_set(cfg.kappa_eff)) {
      out.rate = cfg.kappa_eff;
      out.kappa = cfg.kappa_eff;  // the rate is used directly
    } else if (ExperimentConfig::is_set(cfg.kappa)) {
      out.ds_used = schedule_exponent(b, cfg);
      if (!(out.ds_used > 0.0))
        throw ConfigError("key `kappa`: needs a positive stability exponent to set the rate");
      out.rate = cfg.kappa / out.ds_used;
      out.kappa = cfg.kappa;
    } else {
      throw ConfigError("key `kappa`: a geometric schedule needs kappa or kappa_eff");
    }
    sched.law = GeometricGrowth{out.rate, cfg.t0};
  } else {
    throw ConfigError("key `schedule`: expected fixed or geometric, got `" + cfg.schedule + "`");
  }
  if (!ExperimentConfig::is_set(sched.t1))
    throw ConfigError("key `t1`: required for a controlled run");
  sched.validate();
  out.schedule = sched;

  if (cfg.preset == "lorenz-origin") {
    out.map = RadialRescale{cfg.alpha};
  } else if (cfg.preset == "lorenz-sync") {
    out.map = SyncRescale{cfg.alpha, {0, 1, 2}, {3, 4, 5}};
  } else {
    ParallelVaccination pv;
    pv.alpha = cfg.alpha;
    pv.s_index = 1;
    pv.v_index = 0;
    pv.guard = cfg.guard == "apply-if-grew" ? VaccinationGuard::kApplyIfNormGrew
                                            : VaccinationGuard::kClampOnly;
    out.map = pv;
  }
  return out;
}

inline constexpr const char* kCaseAccumulator = "case_integral";

inline RunSettings build_settings(const ExperimentConfig& cfg, const PresetBundle& b) {
  RunSettings s;
  s.dt = cfg.dt;
  s.sample_every = static_cast<std::size_t>(cfg.sample_every);
  s.convergence_tol = cfg.convergence_tol;
  if (cfg.preset == "seir-measles") {
    const SemiInvariantSpec& spec = b.sys.invariant;
    s.accumulators.push_back(Accumulator{
        kGrowthAccumulator, [spec](const Vec& x) {
          StateVector sv{0.0, x};
          const Decomposition d = decompose(spec, sv);
          if (!d.versor_defined) return 0.0;
          return quadratic_form(spec, sv);
        }});
    const double incubation = SeirParams{}.sigma;
    s.accumulators.push_back(
        Accumulator{kCaseAccumulator, [incubation](const Vec& x) { return incubation * x[2]; }});
  }
  return s;
}

// --------------------------------------------------------------------------
// Output locations and the manifest

inline std::string output_dir(const ExperimentConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("INVSTEER_OUT"); env && *env) return env;
  return ".";
}

inline std::string ensure_output_dir(const ExperimentConfig& cfg) {
  const std::string dir = output_dir(cfg);
  std::filesystem::create_directories(dir);
  return dir;
}

// Echo of the effective config, in a canonical order, every real rendered
// with full round-trip precision so a manifest re-run resolves to the same
// bits.
inline KeyValues config_echo(const ExperimentConfig& cfg) {
  KeyValues kv;
  auto set = ExperimentConfig::is_set;
  kv.emplace_back("preset", cfg.preset);
  kv.emplace_back("control", cfg.control ? "on" : "off");
  kv.emplace_back("schedule", cfg.schedule);
  kv.emplace_back("guard", cfg.guard);
  if (set(cfg.alpha)) kv.emplace_back("alpha", format_real(cfg.alpha));
  if (set(cfg.kappa)) kv.emplace_back("kappa", format_real(cfg.kappa));
  if (set(cfg.kappa_eff)) kv.emplace_back("kappa_eff", format_real(cfg.kappa_eff));
  if (set(cfg.delta)) kv.emplace_back("delta", format_real(cfg.delta));
  if (set(cfg.coupling)) kv.emplace_back("c", format_real(cfg.coupling));
  kv.emplace_back("dt", format_real(cfg.dt));
  kv.emplace_back("t0", format_real(cfg.t0));
  if (set(cfg.t1)) kv.emplace_back("t1", format_real(cfg.t1));
  if (set(cfg.t_max)) kv.emplace_back("t_max", format_real(cfg.t_max));
  if (set(cfg.convergence_tol)) kv.emplace_back("convergence_tol", format_real(cfg.convergence_tol));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("sample_every", std::to_string(cfg.sample_every));
  if (set(cfg.horizon_T)) kv.emplace_back("T", format_real(cfg.horizon_T));
  if (set(cfg.burn_in)) kv.emplace_back("burn_in", format_real(cfg.burn_in));
  kv.emplace_back("param", cfg.param);
  if (set(cfg.from)) kv.emplace_back("from", format_real(cfg.from));
  if (set(cfg.to)) kv.emplace_back("to", format_real(cfg.to));
  if (set(cfg.step)) kv.emplace_back("step", format_real(cfg.step));
  kv.emplace_back("jobs", std::to_string(cfg.jobs));
  if (!cfg.out.empty()) kv.emplace_back("out", cfg.out);
  return kv;
}

// Written to <dir>/manifest.txt via a temp file and rename, so readers never
// see a half-written manifest.
inline void write_manifest(const std::string& dir, const KeyValues& config_part,
                           const KeyValues& run_part) {
  const std::string path = dir + "/manifest.txt";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open `" + tmp + "` for writing");
    out << "# effective configuration (feed this file back via --config to reproduce)\n";
    for (const auto& [k, v] : config_part) out << k << " = " << v << '\n';
    out << "# run outcome (ignored when parsed as a config)\n";
    for (const auto& [k, v] : run_part) out << "run." << k << " = " << v << '\n';
    out.close();
    if (!out) throw std::runtime_error("write failed for `" + tmp + "`");
  }
  std::filesystem::rename(tmp, path);
}

// Reads a manifest keeping both halves: the config keys (run.* stripped) and
// the run.* outcome keys (prefix removed).
inline std::pair<KeyValues, std::map<std::string, std::string>> read_manifest(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open `" + path + "` for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  KeyValues config_part = parse_config_text(text);
  std::map<std::string, std::string> run_part;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.rfind("run.", 0) != 0) continue;
    run_part[key.substr(4)] = detail::trim(line.substr(eq + 1));
  }
  return {std::move(config_part), std::move(run_part)};
}

inline const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kConverged: return "converged";
    case RunStatus::kHorizonReached: return "horizon";
    case RunStatus::kBlowup: return "blowup";
  }
  return "unknown";
}

inline void write_plot_script(const std::string& dir, const ExperimentConfig& cfg) {
  std::ofstream out(dir + "/plot.gp", std::ios::binary);
  if (!out) return;  // plotting aid only, never fails the run
  out << "# gnuplot companion for this run's CSV files\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n";
  if (cfg.preset == "seir-measles") {
    out << "set xlabel 'time (days)'\n"
           "plot 'cases.csv' using 1:2 with lines title 'cumulative cases', \\\n"
           "     'cases.csv' using 1:3 with lines title 'new cases per day'\n";
  } else {
    out << "set xlabel 't'\n"
           "plot 'trajectory.csv' using 1:3 with lines title 'ln ||I||'\n"
           "# impulse times: 'impulses.csv' using 2:1 (cumulative count vs t_n)\n";
  }
}

// --------------------------------------------------------------------------
// Subcommand drivers

struct SimulateResult {
  TrajectoryRecord record;
  BuiltController controller;
  ExperimentConfig config;
  std::string dir;
};

inline SimulateResult drive_simulate(const ExperimentConfig& cfg) {
  const PresetBundle b = make_preset(cfg);
  if (!ExperimentConfig::is_set(cfg.t_max)) throw ConfigError("key `t_max`: required");
  const BuiltController ctl = build_controller(cfg, b);
  const RunSettings settings = build_settings(cfg, b);
  StateVector start = b.sys.default_initial;
  start.t = cfg.t0;
  const auto wall0 = std::chrono::steady_clock::now();
  TrajectoryRecord rec = run_impulsive(b.sys.field, b.sys.invariant, ctl.schedule, ctl.map, start,
                                       cfg.t_max, settings);
  const auto wall1 = std::chrono::steady_clock::now();

  const std::string dir = ensure_output_dir(cfg);
  write_trajectory_csv(dir + "/trajectory.csv", rec, b.sys.field.dimension);
  write_impulses_csv(dir + "/impulses.csv", rec.impulses);
  std::string files = "trajectory.csv impulses.csv";
  if (cfg.preset == "seir-measles") {
    std::size_t case_idx = 0;
    for (std::size_t i = 0; i < rec.accumulator_names.size(); ++i)
      if (rec.accumulator_names[i] == kCaseAccumulator) case_idx = i;
    write_cases_csv(dir + "/cases.csv", rec, case_idx, SeirParams{}.sigma, kDaysPerYear);
    files += " cases.csv";
  }
  write_plot_script(dir, cfg);

  KeyValues run_part;
  run_part.emplace_back("version", kVersion);
  run_part.emplace_back("command", "simulate");
  run_part.emplace_back("status", status_name(rec.status));
  run_part.emplace_back("final_t", format_real(rec.samples.back().t));
  run_part.emplace_back("final_norm", format_real(rec.samples.back().norm_I));
  run_part.emplace_back("impulse_count", std::to_string(rec.impulses.size()));
  if (ExperimentConfig::is_set(ctl.ds_used)) run_part.emplace_back("ds_used", format_real(ctl.ds_used));
  if (ExperimentConfig::is_set(ctl.rate)) run_part.emplace_back("schedule_rate", format_real(ctl.rate));
  if (!rec.blowup_message.empty()) run_part.emplace_back("blowup", rec.blowup_message);
  run_part.emplace_back(
      "wall_ms",
      std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(wall1 - wall0).count()));
  run_part.emplace_back("files", files);
  write_manifest(dir, config_echo(cfg), run_part);
  return {std::move(rec), ctl, cfg, dir};
}

inline int run_simulate(const ExperimentConfig& cfg, std::ostream& os) {
  const SimulateResult r = drive_simulate(cfg);
  os << "preset " << cfg.preset << (cfg.control ? "" : " (no control)") << ": status "
     << status_name(r.record.status) << ", t_final = " << format_real(r.record.samples.back().t)
     << ", ||I|| = " << format_real(r.record.samples.back().norm_I)
     << ", impulses = " << r.record.impulses.size() << '\n';
  os << "wrote " << r.dir << "/trajectory.csv, impulses.csv"
     << (cfg.preset == "seir-measles" ? ", cases.csv" : "") << ", manifest.txt\n";
  return r.record.status == RunStatus::kBlowup ? 2 : 0;
}

struct DsResult {
  StabilityEstimate estimate;
  double closed_form = std::numeric_limits<double>::quiet_NaN();
  std::string dir;
};

inline DsResult drive_ds(const ExperimentConfig& cfg) {
  const PresetBundle b = make_preset(cfg);
  const Vec J0 = initial_J(b);
  DsSettings s;
  s.T = ExperimentConfig::is_set(cfg.horizon_T) ? cfg.horizon_T : 200.0;
  s.dt = cfg.dt;
  s.burn_in = ExperimentConfig::is_set(cfg.burn_in) ? cfg.burn_in : -1.0;
  s.seed = cfg.seed;
  DsResult out;
  out.estimate = estimate_ds(b.sys.on_surface, J0, s);
  if (b.sys.on_surface.constant_L_S)
    out.closed_form = ds_constant_matrix(b.sys.on_surface.eval_L_S(J0));

  out.dir = ensure_output_dir(cfg);
  write_ds_csv(out.dir + "/ds.csv", out.estimate);
  KeyValues run_part;
  run_part.emplace_back("version", kVersion);
  run_part.emplace_back("command", "ds");
  run_part.emplace_back("ds", format_real(out.estimate.D_S));
  if (ExperimentConfig::is_set(out.closed_form))
    run_part.emplace_back("ds_closed_form", format_real(out.closed_form));
  run_part.emplace_back("files", "ds.csv");
  write_manifest(out.dir, config_echo(cfg), run_part);
  return out;
}

inline int run_ds(const ExperimentConfig& cfg, std::ostream& os) {
  const DsResult r = drive_ds(cfg);
  os << "D_S (time average, T = " << format_real(r.estimate.horizon)
     << ", seed = " << r.estimate.seed << ") = " << format_real(r.estimate.D_S) << '\n';
  if (ExperimentConfig::is_set(r.closed_form))
    os << "D_S (constant matrix) = " << format_real(r.closed_form) << '\n';
  os << "wrote " << r.dir << "/ds.csv, manifest.txt\n";
  return 0;
}

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<double> c0;  // bisected sign change, when unique
  std::size_t sign_changes = 0;
  std::string dir;
};

inline SweepResult drive_sweep(const ExperimentConfig& cfg) {
  if (cfg.param != "c")
    throw ConfigError("key `param`: only `c` (coupling) sweeps are supported");
  if (cfg.preset != "lorenz-sync")
    throw ConfigError("key `preset`: sweeps require the lorenz-sync preset");
  if (!ExperimentConfig::is_set(cfg.from) || !ExperimentConfig::is_set(cfg.to) ||
      !ExperimentConfig::is_set(cfg.step))
    throw ConfigError("key `from`/`to`/`step`: required for sweep");

  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double c = cfg.from + static_cast<double>(k) * cfg.step;
    if (c > cfg.to + 1e-12 * cfg.step) break;
    grid.push_back(c);
  }

  auto family = [](double c) {
    CoupledLorenzParams p;
    p.c = c;
    return coupled_lorenz_preset(p).on_surface;
  };
  const Vec J0 = initial_J(make_preset(cfg));
  DsSettings s;
  s.T = ExperimentConfig::is_set(cfg.horizon_T) ? cfg.horizon_T : 200.0;
  s.dt = cfg.dt;
  s.burn_in = ExperimentConfig::is_set(cfg.burn_in) ? cfg.burn_in : -1.0;
  s.seed = cfg.seed;

  SweepResult out;
  out.points = sweep_ds(family, grid, J0, s, static_cast<std::size_t>(cfg.jobs));

  // Count sign changes over the successful points; bisect when unique.
  std::optional<std::pair<double, double>> bracket;
  const SweepPoint* prev = nullptr;
  for (const auto& p : out.points) {
    if (!p.ok) continue;
    if (prev && prev->D_S > 0.0 && p.D_S < 0.0) {
      ++out.sign_changes;
      bracket = {prev->parameter, p.parameter};
    }
    if (prev && prev->D_S < 0.0 && p.D_S > 0.0) ++out.sign_changes;  // reverse crossing
    prev = &p;
  }
  if (out.sign_changes == 1 && bracket)
    out.c0 = bisect_ds_sign_change(family, bracket->first, bracket->second, J0, s, 0.05);

  out.dir = ensure_output_dir(cfg);
  write_sweep_csv(out.dir + "/ds_vs_c.csv", cfg.param, out.points);
  KeyValues run_part;
  run_part.emplace_back("version", kVersion);
  run_part.emplace_back("command", "sweep");
  run_part.emplace_back("points", std::to_string(out.points.size()));
  run_part.emplace_back("sign_changes", std::to_string(out.sign_changes));
  if (out.c0) run_part.emplace_back("c0", format_real(*out.c0));
  run_part.emplace_back("files", "ds_vs_c.csv");
  write_manifest(out.dir, config_echo(cfg), run_part);
  return out;
}

inline int run_sweep(const ExperimentConfig& cfg, std::ostream& os) {
  const SweepResult r = drive_sweep(cfg);
  std::size_t failed = 0;
  for (const auto& p : r.points)
    if (!p.ok) ++failed;
  os << "swept " << r.points.size() << " points (" << failed << " failed), sign changes: "
     << r.sign_changes << '\n';
  if (r.c0) os << "sign change located at c0 = " << format_real(*r.c0) << '\n';
  os << "wrote " << r.dir << "/ds_vs_c.csv, manifest.txt\n";
  if (!r.points.empty() && failed == r.points.size()) return 2;
  return 0;
}

// Rebuilds a TrajectoryRecord (samples + impulse records) from a run
// directory's CSV files. Sample rows at an impulse time appear twice; the
// first is the pre-impulse state.
inline TrajectoryRecord load_run_record(const std::string& dir) {
  TrajectoryRecord rec;
  const auto imp_rows = read_csv(dir + "/impulses.csv");
  for (std::size_t i = 1; i < imp_rows.size(); ++i) {
    const auto& r = imp_rows[i];
    if (r.size() < 8) throw std::runtime_error("impulses.csv: short row");
    ImpulseRecord ir;
    ir.n = static_cast<std::size_t>(csv_real(r[0]));
    ir.t_n = csv_real(r[1]);
    ir.delta_n = csv_real(r[2]);
    ir.beta_n = csv_real(r[3]);
    ir.A_n = csv_real(r[4]);
    ir.B_n = csv_real(r[5]);
    ir.norm_before = csv_real(r[6]);
    ir.norm_after = csv_real(r[7]);
    rec.impulses.push_back(ir);
  }
  const auto traj_rows = read_csv(dir + "/trajectory.csv");
  std::size_t next_imp = 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < traj_rows.size(); ++i) {
    const auto& r = traj_rows[i];
    if (r.size() < 4) throw std::runtime_error("trajectory.csv: short row");
    TrajectorySample s;
    s.t = csv_real(r[0]);
    s.norm_I = csv_real(r[1]);
    s.log_norm_I = csv_real(r[2]);
    for (std::size_t j = 3; j < r.size(); ++j) s.x.push_back(csv_real(r[j]));
    // The second sample at an impulse time is the post-impulse state.
    if (next_imp < rec.impulses.size() && s.t == rec.impulses[next_imp].t_n && s.t == prev_t)
      ++next_imp;
    s.impulses_before = next_imp;
    prev_t = s.t;
    rec.samples.push_back(std::move(s));
  }
  for (const auto& ir : rec.impulses) rec.cumulative_impulses.emplace_back(ir.t_n, ir.n);
  return rec;
}

inline int run_check(const std::string& run_dir, std::ostream& os) {
  const auto [config_part, run_part] = read_manifest(run_dir + "/manifest.txt");
  const ExperimentConfig cfg = resolve_config({config_part});
  const PresetBundle b = make_preset(cfg);
  const TrajectoryRecord rec = load_run_record(run_dir);
  if (rec.samples.empty()) throw std::runtime_error("run has no samples");

  // M: largest eigenvalue of H over the stored samples.
  double M = -std::numeric_limits<double>::infinity();
  for (const auto& s : rec.samples)
    M = std::max(M, lambda_h_max(b.sys.invariant, StateVector{s.t, s.x}));

  // Exponent bound for the budget criteria: the recorded one if present,
  // else closed form, else the pathwise M.
  double exponent_bound = M;
  if (const auto it = run_part.find("ds_used"); it != run_part.end())
    exponent_bound = csv_real(it->second);
  else if (b.sys.on_surface.constant_L_S)
    exponent_bound = ds_constant_matrix(b.sys.on_surface.eval_L_S(initial_J(b)));

  ControllerConfig ctl_cfg;
  const BuiltController ctl = build_controller(cfg, b);
  if (!ctl.schedule) {
    os << "uncontrolled run: nothing to check\n";
    return 0;
  }
  ctl_cfg.schedule = *ctl.schedule;
  ctl_cfg.map = *ctl.map;
  ctl_cfg.alpha = cfg.alpha;
  if (ExperimentConfig::is_set(ctl.kappa)) ctl_cfg.kappa = ctl.kappa;

  const GuaranteeReport rep = check_guarantees(ctl_cfg, rec, exponent_bound, M);
  os << "bounded gaps       : " << rep.bounded_gap.verdict;
  if (rep.bounded_gap.applies) os << " (delta = " << format_real(rep.bounded_gap.delta_bound) << ")";
  os << '\n';
  os << "exponent budget    : " << rep.growth_budget.verdict;
  if (rep.growth_budget.applies)
    os << " (M = " << format_real(rep.growth_budget.M)
       << ", last predicate = " << format_real(rep.growth_budget.predicate_value) << ")";
  os << '\n';
  os << "linear rate        : " << rep.linear_rate.verdict;
  if (rep.linear_rate.applies)
    os << " (kappa = " << format_real(rep.linear_rate.kappa)
       << ", alpha = " << format_real(rep.linear_rate.alpha) << ")";
  os << '\n';
  os << "pathwise bound     : " << rep.pathwise_bound.violations << " violations across "
     << rep.pathwise_bound.checked << " samples (max log excess = "
     << format_real(rep.pathwise_bound.max_log_excess) << ", M = " << format_real(M) << ")\n";
  os << "notes: " << rep.notes << '\n';
  return 0;
}

inline int run_list_presets(std::ostream& os) {
  os << "lorenz-origin   chaotic flow steered onto an unstable fixed point by radial impulses\n"
        "                defaults: alpha = 5, kappa = 3 (geometric schedule), t1 = 0.01, t_max = 20\n"
        "lorenz-sync     two coupled chaotic flows synchronized by periodic partial resets\n"
        "                defaults: alpha = 0.4, delta = 0.1 (fixed schedule), c = 5, t_max = 50\n"
        "seir-measles    epidemic model steered toward the disease-free surface by pulse vaccination\n"
        "                defaults: alpha = 0.002, kappa_eff = 0.8 (geometric), t1 = day 100, t_max = 3 years\n";
  return 0;
}

}  // namespace invsteer::harness
