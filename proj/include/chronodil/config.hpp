#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chronodil/constants.hpp"

namespace chronodil {

// Malformed or out-of-range configuration; `line` is 1-based, 0 if unknown.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(int line, const std::string& msg)
      : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ClockSpec {
  std::string model = "idealised";  // idealised | swp | quasi_ideal | qubit
  int d = 4;
  double omega = 1.0;
  double sigma_bar = 0.0;  // 0: sqrt(d)
  double sigma_time = 1e-9;
  bool operator==(const ClockSpec&) const = default;
};

struct StateSpec {
  std::string kind = "gaussian";  // gaussian | cat
  double x0 = 0.0;
  double p0 = 0.0;
  double sigma_x = 0.0;
  double delta_x0 = 0.0;
  double alpha = 0.5;
  double theta = 0.0;
  bool operator==(const StateSpec&) const = default;
};

struct PhysicsSpec {
  double mass = 0.0;
  double g = constants::standard_gravity;
  double c_scale = 1.0;
  std::vector<double> times;
  std::string second_order = "taylor";  // taylor | doubled
  bool operator==(const PhysicsSpec&) const = default;
};

struct MeasurementSpec {
  std::vector<double> q{0.1, 1.0, 10.0};
  long bin = 0;
  bool operator==(const MeasurementSpec&) const = default;
};

struct VerifySpec {
  std::string quantity = "mean_time";  // mean_time | sigma | coherence
  std::vector<double> c_scalings{1.0, 2.0, 4.0};
  long grid_points = 2048;
  bool operator==(const VerifySpec&) const = default;
};

struct SweepSpec {
  std::string parameter = "separation";  // separation | alpha | theta | sigma_x | t
  std::string quantity = "coherence";    // coherence | dilation | precision
  double from = 0.0;
  double to = 0.0;
  long points = 0;
  std::string spacing = "linear";  // linear | log | random
  bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  ClockSpec clock;
  StateSpec state;
  PhysicsSpec physics;
  MeasurementSpec measurement;
  VerifySpec verify;
  SweepSpec sweep;
  bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"dilation", "coherence", "precision", "measurement", "verify", "sweep"};
  return names;
}

namespace config {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double number(const std::string& key, const std::string& v, int line) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(line, key + ": '" + v + "' is not a number");
  if (!std::isfinite(out)) throw ConfigError(line, key + ": value must be finite");
  return out;
}

inline long integer(const std::string& key, const std::string& v, int line) {
  long out = 0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(line, key + ": '" + v + "' is not an integer");
  return out;
}

inline std::vector<double> list(const std::string& key, const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number(key, trim(item), line));
  if (out.empty()) throw ConfigError(line, key + ": empty list");
  return out;
}

inline std::string choice(const std::string& key, const std::string& v, int line, std::vector<std::string> allowed) {
  for (const auto& a : allowed)
    if (a == v) return v;
  std::string msg = key + ": '" + v + "' is not one of";
  for (const auto& a : allowed) msg += " " + a;
  throw ConfigError(line, msg);
}

inline void range(const std::string& key, double v, int line, double lo, double hi, bool open_lo = false) {
  if (v < lo || v > hi || (open_lo && v == lo)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.17g out of range %s%.17g, %.17g]", key.c_str(), v, open_lo ? "(" : "[", lo,
                  hi);
    throw ConfigError(line, buf);
  }
}

constexpr double inf = 1e308;

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["command"] = [](RunConfig& c, const std::string& v, int l) { c.command = choice("command", v, l, command_names()); };
    t["seed"] = [](RunConfig& c, const std::string& v, int l) {
      const long s = integer("seed", v, l);
      range("seed", double(s), l, 0, inf);
      c.seed = std::uint64_t(s);
    };

    t["clock.model"] = [](RunConfig& c, const std::string& v, int l) {
      c.clock.model = choice("clock.model", v, l, {"idealised", "swp", "quasi_ideal", "qubit"});
    };
    t["clock.d"] = [](RunConfig& c, const std::string& v, int l) {
      const long d = integer("clock.d", v, l);
      range("clock.d", double(d), l, 2, 4096);
      c.clock.d = int(d);
    };
    t["clock.omega"] = [](RunConfig& c, const std::string& v, int l) {
      c.clock.omega = number("clock.omega", v, l);
      range("clock.omega", c.clock.omega, l, 0, inf, true);
    };
    t["clock.sigma_bar"] = [](RunConfig& c, const std::string& v, int l) {
      c.clock.sigma_bar = number("clock.sigma_bar", v, l);
      range("clock.sigma_bar", c.clock.sigma_bar, l, 0, inf, true);
    };
    t["clock.sigma_time"] = [](RunConfig& c, const std::string& v, int l) {
      c.clock.sigma_time = number("clock.sigma_time", v, l);
      range("clock.sigma_time", c.clock.sigma_time, l, 0, inf, true);
    };

    t["state.kind"] = [](RunConfig& c, const std::string& v, int l) {
      c.state.kind = choice("state.kind", v, l, {"gaussian", "cat"});
    };
    t["state.x0"] = [](RunConfig& c, const std::string& v, int l) { c.state.x0 = number("state.x0", v, l); };
    t["state.p0"] = [](RunConfig& c, const std::string& v, int l) { c.state.p0 = number("state.p0", v, l); };
    t["state.sigma_x"] = [](RunConfig& c, const std::string& v, int l) {
      c.state.sigma_x = number("state.sigma_x", v, l);
      range("state.sigma_x", c.state.sigma_x, l, 0, inf, true);
    };
    t["state.delta_x0"] = [](RunConfig& c, const std::string& v, int l) {
      c.state.delta_x0 = number("state.delta_x0", v, l);
      range("state.delta_x0", c.state.delta_x0, l, 0, inf);
    };
    t["state.alpha"] = [](RunConfig& c, const std::string& v, int l) {
      c.state.alpha = number("state.alpha", v, l);
      range("state.alpha", c.state.alpha, l, 0, 1);
    };
    t["state.theta"] = [](RunConfig& c, const std::string& v, int l) { c.state.theta = number("state.theta", v, l); };

    t["physics.mass"] = [](RunConfig& c, const std::string& v, int l) {
      c.physics.mass = number("physics.mass", v, l);
      range("physics.mass", c.physics.mass, l, 0, inf, true);
    };
    t["physics.g"] = [](RunConfig& c, const std::string& v, int l) { c.physics.g = number("physics.g", v, l); };
    t["physics.c_scale"] = [](RunConfig& c, const std::string& v, int l) {
      c.physics.c_scale = number("physics.c_scale", v, l);
      range("physics.c_scale", c.physics.c_scale, l, 0, inf, true);
    };
    t["physics.t"] = [](RunConfig& c, const std::string& v, int l) {
      c.physics.times = list("physics.t", v, l);
      for (double x : c.physics.times) range("physics.t", x, l, 0, inf);
    };
    t["physics.second_order"] = [](RunConfig& c, const std::string& v, int l) {
      c.physics.second_order = choice("physics.second_order", v, l, {"taylor", "doubled"});
    };

    t["measurement.q"] = [](RunConfig& c, const std::string& v, int l) {
      c.measurement.q = list("measurement.q", v, l);
      for (double x : c.measurement.q) range("measurement.q", x, l, 0, inf, true);
    };
    t["measurement.bin"] = [](RunConfig& c, const std::string& v, int l) {
      c.measurement.bin = integer("measurement.bin", v, l);
    };

    t["verify.quantity"] = [](RunConfig& c, const std::string& v, int l) {
      c.verify.quantity = choice("verify.quantity", v, l, {"mean_time", "sigma", "coherence"});
    };
    t["verify.c_scalings"] = [](RunConfig& c, const std::string& v, int l) {
      c.verify.c_scalings = list("verify.c_scalings", v, l);
      for (double x : c.verify.c_scalings) range("verify.c_scalings", x, l, 0, inf, true);
      if (c.verify.c_scalings.size() < 3) throw ConfigError(l, "verify.c_scalings: need at least three values");
    };
    t["verify.grid_points"] = [](RunConfig& c, const std::string& v, int l) {
      c.verify.grid_points = integer("verify.grid_points", v, l);
      range("verify.grid_points", double(c.verify.grid_points), l, 64, 1 << 20);
    };

    t["sweep.parameter"] = [](RunConfig& c, const std::string& v, int l) {
      c.sweep.parameter = choice("sweep.parameter", v, l, {"separation", "alpha", "theta", "sigma_x", "t"});
    };
    t["sweep.quantity"] = [](RunConfig& c, const std::string& v, int l) {
      c.sweep.quantity = choice("sweep.quantity", v, l, {"coherence", "dilation", "precision"});
    };
    t["sweep.from"] = [](RunConfig& c, const std::string& v, int l) { c.sweep.from = number("sweep.from", v, l); };
    t["sweep.to"] = [](RunConfig& c, const std::string& v, int l) { c.sweep.to = number("sweep.to", v, l); };
    t["sweep.points"] = [](RunConfig& c, const std::string& v, int l) {
      c.sweep.points = integer("sweep.points", v, l);
      range("sweep.points", double(c.sweep.points), l, 2, 100000);
    };
    t["sweep.spacing"] = [](RunConfig& c, const std::string& v, int l) {
      c.sweep.spacing = choice("sweep.spacing", v, l, {"linear", "log", "random"});
    };
    return t;
  }();
  return table;
}

}  // namespace detail

// Cross-key requirements that only make sense once the whole file is read.
inline void validate(const RunConfig& c, const std::set<std::string>& seen, int last_line) {
  auto need = [&](const std::string& key) {
    if (!seen.count(key)) throw ConfigError(last_line, "missing required key " + key);
  };
  need("physics.mass");
  need("physics.t");
  need("state.sigma_x");
  if (c.state.kind == "cat" || c.command == "coherence") need("state.delta_x0");
  if (c.command == "sweep") {
    need("sweep.from");
    need("sweep.to");
    need("sweep.points");
    if (c.sweep.spacing == "log" && !(c.sweep.from > 0.0 && c.sweep.to > 0.0))
      throw ConfigError(last_line, "sweep: log spacing needs positive bounds");
  }
  if (c.clock.model != "idealised" && c.clock.model != "qubit" && !seen.count("clock.d"))
    throw ConfigError(last_line, "missing required key clock.d");
}

// `key = value` lines, `#` comments, `[section]` headers. When `command` is
// non-empty it overrides the file (and must agree with a `command` key if present).
inline RunConfig parse(const std::string& text, const std::string& command = {}) {
  RunConfig c;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "unterminated section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      static const std::set<std::string> sections{"clock", "state", "physics", "measurement", "verify", "sweep"};
      if (!sections.count(section)) throw ConfigError(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto& table = detail::setters();
    const auto it = table.find(full);
    if (it == table.end()) throw ConfigError(line, "unknown key " + full);
    if (value.empty()) throw ConfigError(line, full + ": missing value");
    if (!seen.insert(full).second) throw ConfigError(line, "duplicate key " + full);
    it->second(c, value, line);
  }
  if (!command.empty()) {
    detail::choice("command", command, 0, command_names());
    if (seen.count("command") && c.command != command)
      throw ConfigError(0, "config is for '" + c.command + "' but command '" + command + "' was requested");
    c.command = command;
  }
  if (c.command.empty()) throw ConfigError(line, "missing required key command");
  validate(c, seen, line);
  return c;
}

namespace detail {
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string nums(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}
}  // namespace detail

// Canonical text form; parse(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
  using detail::num;
  using detail::nums;
  std::ostringstream o;
  o << "command = " << c.command << "\n"
    << "seed = " << c.seed << "\n"
    << "[clock]\n"
    << "model = " << c.clock.model << "\n"
    << "d = " << c.clock.d << "\n"
    << "omega = " << num(c.clock.omega) << "\n";
  if (c.clock.sigma_bar > 0.0) o << "sigma_bar = " << num(c.clock.sigma_bar) << "\n";
  o << "sigma_time = " << num(c.clock.sigma_time) << "\n"
    << "[state]\n"
    << "kind = " << c.state.kind << "\n"
    << "x0 = " << num(c.state.x0) << "\n"
    << "p0 = " << num(c.state.p0) << "\n"
    << "sigma_x = " << num(c.state.sigma_x) << "\n"
    << "delta_x0 = " << num(c.state.delta_x0) << "\n"
    << "alpha = " << num(c.state.alpha) << "\n"
    << "theta = " << num(c.state.theta) << "\n"
    << "[physics]\n"
    << "mass = " << num(c.physics.mass) << "\n"
    << "g = " << num(c.physics.g) << "\n"
    << "c_scale = " << num(c.physics.c_scale) << "\n"
    << "t = " << nums(c.physics.times) << "\n"
    << "second_order = " << c.physics.second_order << "\n"
    << "[measurement]\n"
    << "q = " << nums(c.measurement.q) << "\n"
    << "bin = " << c.measurement.bin << "\n"
    << "[verify]\n"
    << "quantity = " << c.verify.quantity << "\n"
    << "c_scalings = " << nums(c.verify.c_scalings) << "\n"
    << "grid_points = " << c.verify.grid_points << "\n"
    << "[sweep]\n"
    << "parameter = " << c.sweep.parameter << "\n"
    << "quantity = " << c.sweep.quantity << "\n"
    << "from = " << num(c.sweep.from) << "\n"
    << "to = " << num(c.sweep.to) << "\n";
  // points = 0 means "not set" and would fail the range check on re-parse.
  if (c.sweep.points > 0) o << "points = " << c.sweep.points << "\n";
  o << "spacing = " << c.sweep.spacing << "\n";
  return o.str();
}

}  // namespace config
}  // namespace chronodil
