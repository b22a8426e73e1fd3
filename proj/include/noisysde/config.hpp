#pragma once

// Plain-text experiment configuration.
//
//   # comment
//   [problem]
//   name = paper-sine
//   gamma1 = 0.2
//   [run]
//   schemes = df-rand-milstein, rand-euler
//   n-grid = 2^4..2^10          # or 16, 32, 64
//   schedules = 0/0, 0.1/0.1, n^-0.5/n^-0.5
//
// Section headers are optional; a key given under a section must belong to
// it. Unknown keys, duplicate keys and malformed values are errors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "noisysde/harness.hpp"

namespace noisysde {

/// Validation failure tied to a configuration key.
class config_error : public std::invalid_argument {
 public:
  config_error(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Output locations, which live next to the experiment settings in the file.
struct OutputConfig {
  std::string directory = ".";
  bool svg = false;
};

struct CliConfig {
  ExperimentConfig experiment;
  OutputConfig output;
};

namespace config_detail {

struct KeySpec {
  std::string_view key;
  std::string_view section;
};

inline constexpr KeySpec kKeys[] = {
    {"name", "problem"},          {"gamma1", "problem"},        {"m", "problem"},
    {"horizon", "problem"},       {"mu", "problem"},            {"sigma", "problem"},
    {"eta", "problem"},           {"schemes", "run"},           {"n-grid", "run"},
    {"q", "run"},                 {"trajectories", "run"},      {"reference-factor", "run"},
    {"reference", "run"},         {"seed", "run"},              {"workers", "run"},
    {"record-timing", "run"},     {"delta1", "noise"},          {"delta2", "noise"},
    {"schedules", "noise"},       {"noise-mode", "noise"},      {"uniform01", "noise"},
    {"saturate-growth", "noise"}, {"drift-class", "noise"},     {"diffusion-class", "noise"},
    {"worst-case", "noise"},      {"output-dir", "output"},     {"svg", "output"},
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw config_error(key, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

inline std::int64_t parse_int(const std::string& key, std::string_view v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw config_error(key, "expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error(key, "expected true/false, got '" + std::string(v) + "'");
}

/// "16" or "2^4".
inline std::int64_t parse_size(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v.starts_with("2^")) {
    const auto e = parse_int(key, v.substr(2));
    if (e < 0 || e > 40) throw config_error(key, "exponent out of range");
    return std::int64_t{1} << e;
  }
  return parse_int(key, v);
}

inline std::vector<std::int64_t> parse_grid(const std::string& key, std::string_view v) {
  std::vector<std::int64_t> out;
  const auto dots = v.find("..");
  if (dots != std::string_view::npos) {
    const auto lo = trim(v.substr(0, dots));
    const auto hi = trim(v.substr(dots + 2));
    if (!lo.starts_with("2^") || !hi.starts_with("2^")) {
      throw config_error(key, "ranges must be written 2^a..2^b");
    }
    for (auto n = parse_size(key, lo); n <= parse_size(key, hi); n *= 2) out.push_back(n);
    if (out.empty()) throw config_error(key, "empty range");
    return out;
  }
  for (const auto& item : split_list(v)) out.push_back(parse_size(key, item));
  return out;
}

inline Precision parse_precision(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v == "n^-0.5" || v == "sqrt") return Precision::inv_sqrt_n();
  return Precision::constant(parse_double(key, v));
}

inline PrecisionSchedule parse_schedule(const std::string& key, std::string_view v) {
  const auto slash = v.find('/');
  if (slash == std::string_view::npos || v.find('/', slash + 1) != std::string_view::npos) {
    throw config_error(key, "expected <delta1>/<delta2>, got '" + std::string(v) + "'");
  }
  return {parse_precision(key, v.substr(0, slash)), parse_precision(key, v.substr(slash + 1))};
}

inline CorruptionClass parse_class(const std::string& key, std::string_view v) {
  if (v == "K1") return CorruptionClass::K1;
  if (v == "K1Lip") return CorruptionClass::K1Lip;
  if (v == "K2") return CorruptionClass::K2;
  throw config_error(key, "expected K1, K1Lip or K2, got '" + std::string(v) + "'");
}

}  // namespace config_detail

/// Applies one key=value setting. Used for file lines and --set overrides.
inline void apply_setting(CliConfig& cfg, const std::string& key, std::string_view raw) {
  using namespace config_detail;
  const std::string_view v = trim(raw);
  auto& e = cfg.experiment;
  auto& p = e.problem;
  if (key == "name") {
    p.id = std::string(v);
  } else if (key == "gamma1") {
    p.gamma1 = parse_double(key, v);
  } else if (key == "m") {
    p.m = parse_double(key, v);
  } else if (key == "horizon") {
    p.horizon = parse_double(key, v);
  } else if (key == "mu") {
    p.mu = parse_double(key, v);
  } else if (key == "sigma") {
    p.sigma = parse_double(key, v);
  } else if (key == "eta") {
    p.eta = parse_double(key, v);
  } else if (key == "schemes") {
    e.schemes.clear();
    for (const auto& s : split_list(v)) {
      const auto k = parse_scheme(s);
      if (!k) throw config_error(key, "unknown scheme '" + s + "'");
      e.schemes.push_back(*k);
    }
  } else if (key == "n-grid") {
    e.n_grid = parse_grid(key, v);
  } else if (key == "q") {
    e.q = parse_double(key, v);
  } else if (key == "trajectories") {
    e.trajectories = parse_int(key, v);
  } else if (key == "reference-factor") {
    e.reference_factor = parse_int(key, v);
  } else if (key == "reference") {
    if (v == "auto") e.reference = ReferenceMode::Auto;
    else if (v == "fine") e.reference = ReferenceMode::FineMesh;
    else if (v == "closed-form") e.reference = ReferenceMode::ClosedForm;
    else throw config_error(key, "expected auto, fine or closed-form");
  } else if (key == "seed") {
    const auto s = parse_int(key, v);
    if (s < 0) throw config_error(key, "must be non-negative");
    e.seed = static_cast<std::uint64_t>(s);
  } else if (key == "workers") {
    e.workers = static_cast<int>(parse_int(key, v));
  } else if (key == "record-timing") {
    e.record_timing = parse_bool(key, v);
  } else if (key == "delta1") {
    if (e.schedules.size() != 1) e.schedules = {PrecisionSchedule::exact()};
    e.schedules.front().drift = parse_precision(key, v);
  } else if (key == "delta2") {
    if (e.schedules.size() != 1) e.schedules = {PrecisionSchedule::exact()};
    e.schedules.front().diffusion = parse_precision(key, v);
  } else if (key == "schedules") {
    e.schedules.clear();
    for (const auto& s : split_list(v)) e.schedules.push_back(parse_schedule(key, s));
  } else if (key == "noise-mode") {
    if (v == "per-call") e.noise.options.keying = NoiseKeying::PerCall;
    else if (v == "point") e.noise.options.keying = NoiseKeying::Point;
    else throw config_error(key, "expected per-call or point");
  } else if (key == "uniform01") {
    e.noise.options.uniform01 = parse_bool(key, v);
  } else if (key == "saturate-growth") {
    e.noise.options.saturate_growth = parse_bool(key, v);
  } else if (key == "drift-class") {
    e.noise.drift_class = parse_class(key, v);
  } else if (key == "diffusion-class") {
    e.noise.diffusion_class = parse_class(key, v);
  } else if (key == "worst-case") {
    e.noise.constant_worst_case = parse_bool(key, v);
  } else if (key == "output-dir") {
    cfg.output.directory = std::string(v);
  } else if (key == "svg") {
    cfg.output.svg = parse_bool(key, v);
  } else {
    throw config_error(key, "unknown key");
  }
}

/// Parses a configuration document on top of the defaults. Does not run
/// ExperimentConfig::validate; callers do that after applying overrides.
inline CliConfig parse_config(std::string_view text, CliConfig cfg = {}) {
  using namespace config_detail;
  std::string section;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool has_delta = false, has_schedules = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (s.front() == '[') {
      if (s.back() != ']') throw config_error(where, "unterminated section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      const bool known = std::any_of(std::begin(kKeys), std::end(kKeys),
                                     [&](const KeySpec& k) { return k.section == section; });
      if (!known) throw config_error(section, "unknown section");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw config_error(where, "expected key = value");
    const std::string key(trim(s.substr(0, eq)));
    const auto spec = std::find_if(std::begin(kKeys), std::end(kKeys),
                                   [&](const KeySpec& k) { return k.key == key; });
    if (spec == std::end(kKeys)) throw config_error(key, "unknown key (" + where + ")");
    if (!section.empty() && spec->section != section) {
      throw config_error(key, "belongs in section [" + std::string(spec->section) + "], not [" +
                                  section + "]");
    }
    if (seen[key]++ > 0) throw config_error(key, "given more than once");
    if (key == "delta1" || key == "delta2") has_delta = true;
    if (key == "schedules") has_schedules = true;
    if (has_delta && has_schedules) {
      throw config_error(key, "use either delta1/delta2 or schedules, not both");
    }
    apply_setting(cfg, key, s.substr(eq + 1));
  }
  return cfg;
}

inline CliConfig load_config(const std::string& path, CliConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw config_error("config", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(cfg));
}

/// Validates, rethrowing failures as config_error keyed by the field name.
inline void validate(const CliConfig& cfg) {
  try {
    cfg.experiment.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw config_error(colon == std::string::npos ? "config" : msg.substr(0, colon),
                       colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
}

}  // namespace noisysde
