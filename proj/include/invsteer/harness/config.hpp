#pragma once

// Flat `key = value` experiment configuration. Files and command-line flags
// land in the same ordered key-value layer format; later layers win. The
// merged result is validated into a typed ExperimentConfig, and every error
// names the offending key. Manifests reuse the same format with a reserved
// `run.` namespace the parser skips, so a manifest is itself a valid config.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace invsteer::harness {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
      return false;
  return true;
}

}  // namespace detail

// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
// Keys in the `run.` namespace (manifest bookkeeping) are dropped so a
// manifest can be fed back in as a config.
inline KeyValues parse_config_text(const std::string& text) {
  KeyValues out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected `key = value`");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::valid_key(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": bad key `" + key + "`");
    if (key.rfind("run.", 0) == 0) continue;
    out.emplace_back(key, value);
  }
  return out;
}

// Later entries (and later layers) override earlier ones.
inline std::map<std::string, std::string> merge_layers(const std::vector<KeyValues>& layers) {
  std::map<std::string, std::string> merged;
  for (const auto& layer : layers)
    for (const auto& [k, v] : layer) merged[k] = v;
  return merged;
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("key `" + key + "`: empty value");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size())
    throw ConfigError("key `" + key + "`: `" + value + "` is not a number");
  return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty() || v[0] == '-')
    throw ConfigError("key `" + key + "`: `" + value + "` is not a nonnegative integer");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size())
    throw ConfigError("key `" + key + "`: `" + value + "` is not a nonnegative integer");
  return static_cast<std::uint64_t>(x);
}

inline bool parse_onoff(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("key `" + key + "`: expected on/off, got `" + value + "`");
}

}  // namespace detail

// The typed experiment configuration. Real-valued fields default to NaN
// meaning "unset"; preset defaults fill them in before validation.
struct ExperimentConfig {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  std::string preset;
  bool control = true;
  std::string schedule;         // "fixed" | "geometric"
  std::string guard = "clamp";  // "clamp" | "apply-if-grew"
  double alpha = kUnset;
  double kappa = kUnset;      // geometric rate as a multiple of 1/D_S
  double kappa_eff = kUnset;  // geometric rate used directly
  double delta = kUnset;      // fixed-interval gap
  double coupling = kUnset;
  double dt = kUnset;
  double t0 = kUnset;
  double t1 = kUnset;
  double t_max = kUnset;
  double convergence_tol = kUnset;
  std::uint64_t seed = 1;
  std::uint64_t sample_every = 10;
  // Stability-estimate knobs (ds, sweep).
  double horizon_T = kUnset;
  double burn_in = kUnset;  // unset means a tenth of the horizon
  // Sweep knobs.
  std::string param = "c";
  double from = kUnset;
  double to = kUnset;
  double step = kUnset;
  std::uint64_t jobs = 0;  // 0 means one worker per hardware thread
  std::string out;         // output directory; empty means INVSTEER_OUT or "."

  static bool is_set(double v) { return v == v; }
};

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "preset",   "control",   "schedule", "guard",     "alpha",           "kappa",
      "kappa_eff", "delta",    "c",        "dt",        "t0",              "t1",
      "t_max",    "convergence_tol",       "seed",      "sample_every",    "T",
      "burn_in",  "param",     "from",     "to",        "step",            "jobs",
      "out"};
  return keys;
}

// Applies the merged key-value view onto a config (which may already carry
// preset defaults). Rejects unknown keys by name.
inline void apply_keys(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  using detail::parse_onoff;
  using detail::parse_real;
  using detail::parse_uint;
  for (const auto& [key, value] : kv) {
    if (key == "preset") cfg.preset = value;
    else if (key == "control") cfg.control = parse_onoff(key, value);
    else if (key == "schedule") cfg.schedule = value;
    else if (key == "guard") cfg.guard = value;
    else if (key == "alpha") cfg.alpha = parse_real(key, value);
    else if (key == "kappa") cfg.kappa = parse_real(key, value);
    else if (key == "kappa_eff") cfg.kappa_eff = parse_real(key, value);
    else if (key == "delta") cfg.delta = parse_real(key, value);
    else if (key == "c") cfg.coupling = parse_real(key, value);
    else if (key == "dt") cfg.dt = parse_real(key, value);
    else if (key == "t0") cfg.t0 = parse_real(key, value);
    else if (key == "t1") cfg.t1 = parse_real(key, value);
    else if (key == "t_max") cfg.t_max = parse_real(key, value);
    else if (key == "convergence_tol") cfg.convergence_tol = parse_real(key, value);
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else if (key == "sample_every") cfg.sample_every = parse_uint(key, value);
    else if (key == "T") cfg.horizon_T = parse_real(key, value);
    else if (key == "burn_in") cfg.burn_in = parse_real(key, value);
    else if (key == "param") cfg.param = value;
    else if (key == "from") cfg.from = parse_real(key, value);
    else if (key == "to") cfg.to = parse_real(key, value);
    else if (key == "step") cfg.step = parse_real(key, value);
    else if (key == "jobs") cfg.jobs = parse_uint(key, value);
    else if (key == "out") cfg.out = value;
    else throw ConfigError("unknown config key `" + key + "`");
  }
}

// Range checks shared by every subcommand; each failure names the key.
inline void validate_common(const ExperimentConfig& cfg) {
  auto set = ExperimentConfig::is_set;
  if (cfg.schedule != "fixed" && cfg.schedule != "geometric" && !cfg.schedule.empty())
    throw ConfigError("key `schedule`: expected fixed or geometric, got `" + cfg.schedule + "`");
  if (cfg.guard != "clamp" && cfg.guard != "apply-if-grew")
    throw ConfigError("key `guard`: expected clamp or apply-if-grew, got `" + cfg.guard + "`");
  if (set(cfg.alpha) && !(cfg.alpha > 0.0)) throw ConfigError("key `alpha`: must be positive");
  if (set(cfg.kappa) && !(cfg.kappa > 0.0)) throw ConfigError("key `kappa`: must be positive");
  if (set(cfg.kappa_eff) && !(cfg.kappa_eff > 0.0))
    throw ConfigError("key `kappa_eff`: must be positive");
  if (set(cfg.delta) && !(cfg.delta > 0.0)) throw ConfigError("key `delta`: must be positive");
  if (set(cfg.coupling) && cfg.coupling < 0.0) throw ConfigError("key `c`: must be nonnegative");
  if (set(cfg.dt) && !(cfg.dt > 0.0)) throw ConfigError("key `dt`: must be positive");
  if (set(cfg.convergence_tol) && cfg.convergence_tol < 0.0)
    throw ConfigError("key `convergence_tol`: must be nonnegative");
  if (cfg.sample_every == 0) throw ConfigError("key `sample_every`: must be at least 1");
  if (set(cfg.t0) && set(cfg.t1) && !(cfg.t1 > cfg.t0))
    throw ConfigError("key `t1`: must exceed t0");
  if (set(cfg.t1) && set(cfg.t_max) && !(cfg.t_max > cfg.t1))
    throw ConfigError("key `t_max`: must exceed t1");
  if (set(cfg.horizon_T) && !(cfg.horizon_T > 0.0)) throw ConfigError("key `T`: must be positive");
  if (set(cfg.burn_in) && cfg.burn_in < 0.0) throw ConfigError("key `burn_in`: must be nonnegative");
  if (set(cfg.horizon_T) && set(cfg.burn_in) && !(cfg.horizon_T > cfg.burn_in))
    throw ConfigError("key `T`: must exceed burn_in");
  if (set(cfg.step) && !(cfg.step > 0.0)) throw ConfigError("key `step`: must be positive");
  if (set(cfg.from) && set(cfg.to) && !(cfg.to >= cfg.from))
    throw ConfigError("key `to`: must not be below `from`");
}

}  // namespace invsteer::harness
