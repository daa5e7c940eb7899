// invsteer: steer trajectories onto invariant surfaces with impulsive control.
//
// Subcommands:
//   simulate      run a preset, controlled or not, writing CSVs + manifest
//   ds            estimate the stability exponent of a preset's surface
//   sweep         stability exponent across a coupling grid
//   check         evaluate the convergence guarantees on a stored run
//   list-presets  show bundled presets and their defaults
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "invsteer/harness/experiment.hpp"

namespace {

using invsteer::harness::KeyValues;

// Every value-taking flag is captured as raw text and pushed through the same
// key-value pipeline as config files, so numbers are parsed exactly once.
void bind_key(CLI::App* cmd, KeyValues* kv, const std::string& flag, const std::string& key,
              const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag, [kv, key](const std::string& v) { kv->emplace_back(key, v); }, desc);
}

void bind_run_keys(CLI::App* cmd, KeyValues* kv) {
  bind_key(cmd, kv, "--preset", "preset", "preset name (see list-presets)");
  bind_key(cmd, kv, "--schedule", "schedule", "impulse schedule: fixed | geometric");
  bind_key(cmd, kv, "--guard", "guard", "vaccination guard: clamp | apply-if-grew");
  bind_key(cmd, kv, "--alpha", "alpha", "impulse strength (exponent budget per unit time)");
  bind_key(cmd, kv, "--kappa", "kappa", "geometric gap growth, as a multiple of 1/D_S");
  bind_key(cmd, kv, "--kappa-eff", "kappa_eff", "geometric gap growth rate, used directly");
  bind_key(cmd, kv, "--delta", "delta", "fixed inter-impulse gap");
  bind_key(cmd, kv, "--c", "c", "coupling strength (lorenz-sync)");
  bind_key(cmd, kv, "--dt", "dt", "integrator step");
  bind_key(cmd, kv, "--t0", "t0", "start time");
  bind_key(cmd, kv, "--t1", "t1", "first impulse time");
  bind_key(cmd, kv, "--t-max", "t_max", "horizon");
  bind_key(cmd, kv, "--convergence-tol", "convergence_tol",
           "stop when ||I|| drops below this (0 disables)");
  bind_key(cmd, kv, "--seed", "seed", "seed for any randomized choice");
  bind_key(cmd, kv, "--sample-every", "sample_every", "record every N-th integrator step");
  bind_key(cmd, kv, "--out", "out", "output directory (default: $INVSTEER_OUT or .)");
  cmd->add_flag_callback(
      "--no-control", [kv] { kv->emplace_back("control", "off"); },
      "integrate the plain flow, no impulses");
}

void bind_ds_keys(CLI::App* cmd, KeyValues* kv) {
  bind_key(cmd, kv, "--preset", "preset", "preset name (see list-presets)");
  bind_key(cmd, kv, "--T", "T", "averaging horizon");
  bind_key(cmd, kv, "--burn-in", "burn_in", "transient to discard (default: T/10)");
  bind_key(cmd, kv, "--seed", "seed", "seed for the initial unit vector");
  bind_key(cmd, kv, "--dt", "dt", "integrator step");
  bind_key(cmd, kv, "--c", "c", "coupling strength (lorenz-sync)");
  bind_key(cmd, kv, "--out", "out", "output directory (default: $INVSTEER_OUT or .)");
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invsteer::harness::ConfigError("cannot open config file `" + path + "`");
  std::stringstream ss;
  ss << in.rdbuf();
  return invsteer::harness::parse_config_text(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"impulsive steering of trajectories onto invariant surfaces"};
  app.require_subcommand(1);

  KeyValues sim_flags, ds_flags, sweep_flags;
  std::string sim_config, ds_config, sweep_config, check_dir;

  CLI::App* sim = app.add_subcommand("simulate", "run a preset and write trajectory CSVs");
  sim->add_option("--config", sim_config, "config file (key = value lines)");
  bind_run_keys(sim, &sim_flags);

  CLI::App* ds = app.add_subcommand("ds", "estimate the surface stability exponent");
  ds->add_option("--config", ds_config, "config file (key = value lines)");
  bind_ds_keys(ds, &ds_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "stability exponent across a parameter grid");
  sweep->add_option("--config", sweep_config, "config file (key = value lines)");
  bind_ds_keys(sweep, &sweep_flags);
  bind_key(sweep, &sweep_flags, "--param", "param", "swept parameter (only `c`)");
  bind_key(sweep, &sweep_flags, "--from", "from", "grid start");
  bind_key(sweep, &sweep_flags, "--to", "to", "grid end (inclusive)");
  bind_key(sweep, &sweep_flags, "--step", "step", "grid spacing");
  bind_key(sweep, &sweep_flags, "--jobs", "jobs", "worker threads (0 = hardware)");

  CLI::App* check = app.add_subcommand("check", "guarantee report for a stored run");
  check->add_option("--run", check_dir, "run directory containing manifest.txt")->required();

  app.add_subcommand("list-presets", "show bundled presets and their defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  using namespace invsteer;
  using namespace invsteer::harness;
  try {
    std::vector<KeyValues> layers;
    if (sim->parsed()) {
      if (!sim_config.empty()) layers.push_back(load_config_file(sim_config));
      layers.push_back(sim_flags);
      return run_simulate(resolve_config(layers), std::cout);
    }
    if (ds->parsed()) {
      if (!ds_config.empty()) layers.push_back(load_config_file(ds_config));
      layers.push_back(ds_flags);
      return run_ds(resolve_config(layers), std::cout);
    }
    if (sweep->parsed()) {
      if (!sweep_config.empty()) layers.push_back(load_config_file(sweep_config));
      layers.push_back(sweep_flags);
      return run_sweep(resolve_config(layers), std::cout);
    }
    if (check->parsed()) return run_check(check_dir, std::cout);
    return run_list_presets(std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const IntegrationBlowup& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
