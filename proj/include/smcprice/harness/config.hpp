#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace smcprice {

/// Malformed, unknown or out-of-range configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Flat key=value configuration with [section] headers. Keys are stored as
 * "section.key"; only keys listed in known_keys() are accepted.
 */
class Config {
 public:
  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "run.experiment",       "run.method",        "run.reps",           "run.seed",
        "run.particles",        "run.threshold",     "run.scheme",         "market.model",
        "market.r",             "market.sigma",      "market.s0",          "market.mu",
        "market.lambda",        "market.nu",         "market.v0",          "option.strike",
        "option.barrier",       "option.upper",      "option.m",           "option.dt",
        "option.rate",          "potential.intro_step", "potential.kappa0", "potential.kappa_step",
        "asian.p",              "asian.sweeps",      "asian.birth_death",  "asian.is_particles",
        "asian.bisection_steps", "asian.root_scan_points", "greeks.fd_particles", "greeks.fd_step",
    };
    return keys;
  }

  static bool is_known(const std::string& key) {
    const auto& k = known_keys();
    return std::find(k.begin(), k.end(), key) != k.end();
  }

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    std::istringstream in(text);
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    Config cfg;
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError(origin + ": key '" + section + "' must sit inside a [section]");
      for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
    }
    return cfg;
  }

  /// Applies "section.key=value".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) {
    if (!is_known(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = value;
  }

  /// Layers `other` on top of this configuration.
  void merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string get_choice(const std::string& key, const std::vector<std::string>& allowed,
                         const std::string& fallback) const {
    const std::string v = get_string(key, fallback);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(key + ": '" + v + "' is not one of {" + list + "}");
    }
    return v;
  }

  double get_double(const std::string& key, double fallback, double lo, double hi) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v = 0.0;
    const std::string& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(key + ": '" + s + "' is not a number");
    if (!(v >= lo && v <= hi))
      throw ConfigError(key + ": " + s + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    return v;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback, std::uint64_t lo,
                         std::uint64_t hi) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t v = 0;
    const std::string& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(key + ": '" + s + "' is not a nonnegative integer");
    if (v < lo || v > hi)
      throw ConfigError(key + ": " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  /// Canonical text form: sections and keys in sorted order.
  std::string to_text() const {
    std::string out, section;
    for (const auto& [k, v] : values_) {
      const auto dot = k.find('.');
      const std::string sec = k.substr(0, dot);
      if (sec != section) {
        out += (out.empty() ? "[" : "\n[") + sec + "]\n";
        section = sec;
      }
      out += k.substr(dot + 1) + " = " + v + "\n";
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }
  static std::string fmt(double x) {
    if (x == std::numeric_limits<double>::infinity()) return "inf";
    if (x == -std::numeric_limits<double>::infinity()) return "-inf";
    std::ostringstream os;
    os << x;
    return os.str();
  }

  std::map<std::string, std::string> values_;
};

inline const std::map<std::string, std::string>& preset_texts() {
  static const std::map<std::string, std::string> presets = {
      {"table1", R"([run]
experiment = barrier
method = sis
reps = 25
particles = 30000
[market]
model = gbm
r = 0.01
sigma = 0.75
s0 = 10
[option]
strike = 10
barrier = 5
m = 5
dt = 0.5
)"},
      {"fig2a", R"([run]
experiment = barrier
method = sir
reps = 25
particles = 30000
threshold = 0.5
[market]
model = gbm
r = 0.01
sigma = 0.75
s0 = 10
[option]
strike = 10
barrier = 5
m = 25
dt = 0.5
)"},
      {"fig2b", R"([run]
experiment = barrier
method = tempered
reps = 25
particles = 30000
threshold = 0.5
[market]
model = gbm
r = 0.01
sigma = 0.75
s0 = 10
[option]
strike = 10
barrier = 5
m = 25
dt = 0.5
[potential]
intro_step = 10
kappa0 = 0.08
kappa_step = 0.045
)"},
      {"greeks-paper", R"([run]
experiment = greeks
reps = 25
particles = 10000
[market]
model = gbm
r = 0.01
sigma = 0.75
s0 = 10
[option]
strike = 10
barrier = 5
m = 25
dt = 0.5
[greeks]
fd_particles = 0
)"},
      {"asian-paper", R"([run]
experiment = asian
method = smc
reps = 50
particles = 10000
threshold = 0.5
[market]
model = bns
mu = 0.07
lambda = 1
nu = 0.5
v0 = 0.5
s0 = 1
[option]
strike = 0.9
m = 12
dt = 1
[potential]
intro_step = 6
kappa0 = 0.2
kappa_step = 0.035
[asian]
p = 20
sweeps = 2
is_particles = 4000
)"},
  };
  return presets;
}

inline Config load_preset(const std::string& name) {
  const auto& p = preset_texts();
  const auto it = p.find(name);
  if (it == p.end()) {
    std::string list;
    for (const auto& [k, v] : p) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (available: " + list + ")");
  }
  return Config::parse(it->second, "preset " + name);
}

}  // namespace smcprice
