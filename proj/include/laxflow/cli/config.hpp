#pragma once

// Run configuration: JSON schema, flag-style specs, and symbolic times.

#include "laxflow/diagnostics.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace laxflow::cli {

using nlohmann::json;

inline constexpr std::string_view kConfigSchema = "laxflow.config/1";

/// Raised for any malformed or inconsistent configuration; maps to exit 2.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : InvalidArgument(field.empty() ? what : field + ": " + what) {}
};

// ---------------------------------------------------------------------------
// Time expressions: numbers, pi, sqrt2, sqrt(...), + - * / and parentheses.

class TimeExpression {
 public:
  static double evaluate(std::string_view text) {
    TimeExpression p(text);
    const double v = p.expr();
    p.skip_ws();
    if (p.pos_ != p.s_.size()) p.fail("unexpected '" + std::string(1, p.s_[p.pos_]) + "'");
    if (!std::isfinite(v)) p.fail("value is not finite");
    return v;
  }

 private:
  explicit TimeExpression(std::string_view s) : s_(s) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("times", "cannot parse '" + std::string(s_) + "': " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool eat_word(std::string_view w) {
    skip_ws();
    if (s_.substr(pos_, w.size()) == w) {
      pos_ += w.size();
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }
  double term() {
    double v = factor();
    for (;;) {
      if (eat('*')) v *= factor();
      else if (eat('/')) v /= factor();
      else return v;
    }
  }
  double factor() {
    if (eat('-')) return -factor();
    if (eat('+')) return factor();
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (eat_word("pi")) return std::numbers::pi;
    if (eat_word("sqrt2")) return std::numbers::sqrt2;
    if (eat_word("sqrt")) {
      if (!eat('(')) fail("sqrt needs '('");
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      return std::sqrt(v);
    }
    skip_ws();
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    const auto used = static_cast<std::size_t>(end - rest.c_str());
    if (used == 0) fail("expected a number, pi, sqrt2 or sqrt(...)");
    pos_ += used;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct ScheduleSpec {
  Schedule::Kind kind = Schedule::Kind::constant;
  std::vector<Eigen::Index> values;  // custom only
};

/// Fully resolved run configuration; every default is filled in so the
/// JSON echo reproduces the run.
struct RunConfig {
  std::string command;
  Flow equation = Flow::bo;
  Eigen::Index K = 64;
  ScheduleSpec schedule;
  InitialProfile profile = InitialProfile::square_wave();
  bool profile_explicit = false;  // not serialized; see finalize()
  std::vector<std::string> times;  // symbolic, evaluated with TimeExpression
  std::optional<double> T;
  int grid_points = 41;
  std::string out = "laxflow-out";
  std::uint64_t seed = 7;
  Eigen::Index K_ref = 1024;
  std::vector<Eigen::Index> Ks;
  Eigen::Index M = 128;
  std::vector<double> kappas;
  std::optional<std::pair<double, double>> rate_window;
  Schedule::Kind reference_schedule = Schedule::Kind::constant;
  bool override_focusing_threshold = false;
  double bound_scale = 1.0;  // test hook for the diagnostics harness
  double sweep_T = 1.0;
  double tol_mass = 1e-12;
  double tol_l2 = 1e-10;

  std::vector<double> time_values() const {
    std::vector<double> out;
    if (!times.empty()) {
      for (const auto& s : times) out.push_back(TimeExpression::evaluate(s));
    } else {
      out = symmetric_grid(T.value_or(1.0), grid_points);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// Profile and schedule specs in flag form.

inline std::map<std::string, std::string> parse_key_values(const std::string& body, const std::string& field) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(field, "expected key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

inline double to_number(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "'" + s + "' is not a number");
  }
}

inline Eigen::Index to_index(const std::string& s, const std::string& field) {
  const double v = to_number(s, field);
  if (v != std::floor(v)) throw ConfigError(field, "'" + s + "' is not an integer");
  return static_cast<Eigen::Index>(v);
}

/// square-wave | zero | single-mode:k0=3,amp=0.2[,amp_im=0]
/// | random-sobolev:s=2,seed=1,bandwidth=64[,norm=1] | explicit:re+im;re+im;...
inline InitialProfile parse_profile_spec(const std::string& spec, std::uint64_t default_seed,
                                         Eigen::Index default_bandwidth) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "square-wave") return InitialProfile::square_wave();
  if (kind == "zero") return InitialProfile::zero();
  if (kind == "single-mode") {
    auto kv = parse_key_values(body, "profile");
    if (!kv.count("k0")) throw ConfigError("profile", "single-mode needs k0=");
    const cplx amp(kv.count("amp") ? to_number(kv["amp"], "profile.amp") : 1.0,
                   kv.count("amp_im") ? to_number(kv["amp_im"], "profile.amp_im") : 0.0);
    return InitialProfile::single_mode(to_index(kv["k0"], "profile.k0"), amp);
  }
  if (kind == "random-sobolev") {
    auto kv = parse_key_values(body, "profile");
    if (!kv.count("s")) throw ConfigError("profile", "random-sobolev needs s=");
    const std::uint64_t seed = kv.count("seed") ? static_cast<std::uint64_t>(to_index(kv["seed"], "profile.seed"))
                                                : default_seed;
    const Eigen::Index bw = kv.count("bandwidth") ? to_index(kv["bandwidth"], "profile.bandwidth") : default_bandwidth;
    std::optional<double> norm;
    if (kv.count("norm")) norm = to_number(kv["norm"], "profile.norm");
    return InitialProfile::random_sobolev(to_number(kv["s"], "profile.s"), seed, bw, norm);
  }
  if (kind == "explicit") {
    std::vector<cplx> c;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ';')) {
      const auto sep = item.find_first_of("+-", 1);
      if (sep == std::string::npos || item.back() != 'i') {
        c.emplace_back(to_number(item, "profile"), 0.0);
      } else {
        c.emplace_back(to_number(item.substr(0, sep), "profile"),
                       to_number(item.substr(sep, item.size() - sep - 1), "profile"));
      }
    }
    CVector v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[i];
    return InitialProfile::explicit_coefficients(v);
  }
  throw ConfigError("profile", "unknown profile kind '" + kind + "'");
}

/// constant | linear-case | half-staircase | full-staircase | 8,7,6,...
inline ScheduleSpec parse_schedule_spec(const std::string& spec) {
  ScheduleSpec s;
  if (!spec.empty() && (std::isdigit(static_cast<unsigned char>(spec[0])) || spec.rfind("custom:", 0) == 0)) {
    s.kind = Schedule::Kind::custom;
    std::stringstream ss(spec.rfind("custom:", 0) == 0 ? spec.substr(7) : spec);
    std::string item;
    while (std::getline(ss, item, ',')) s.values.push_back(to_index(item, "schedule"));
    return s;
  }
  try {
    s.kind = parse_schedule_kind(spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError("schedule", e.what());
  }
  if (s.kind == Schedule::Kind::custom) throw ConfigError("schedule", "custom schedules need explicit values");
  return s;
}

inline Schedule resolve_schedule(const ScheduleSpec& spec, Eigen::Index K) {
  try {
    return make_schedule(spec.kind, K, spec.values);
  } catch (const InvalidArgument& e) {
    throw ConfigError("schedule", e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON round trip.

inline json profile_to_json(const InitialProfile& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind));
  switch (p.kind) {
    case InitialProfile::Kind::square_wave: break;
    case InitialProfile::Kind::single_mode:
      j["k0"] = p.k0;
      j["amplitude"] = {p.amplitude.real(), p.amplitude.imag()};
      break;
    case InitialProfile::Kind::random_sobolev:
      j["s"] = p.s;
      j["seed"] = p.seed;
      j["bandwidth"] = p.bandwidth;
      j["norm"] = p.target_norm ? json(*p.target_norm) : json(nullptr);
      break;
    case InitialProfile::Kind::explicit_coefficients: {
      json c = json::array();
      for (Eigen::Index k = 0; k < p.coefficients.size(); ++k)
        c.push_back({p.coefficients[k].real(), p.coefficients[k].imag()});
      j["coefficients"] = c;
      break;
    }
  }
  return j;
}

namespace detail {

inline void require_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <typename T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, std::string("wrong type (") + e.what() + ")");
  }
}

inline cplx get_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(field, "expected a number or [re, im]");
}

}  // namespace detail

inline InitialProfile profile_from_json(const json& j, std::uint64_t default_seed, Eigen::Index default_bandwidth) {
  if (j.is_string()) return parse_profile_spec(j.get<std::string>(), default_seed, default_bandwidth);
  detail::require_keys(j, "profile", {"kind", "k0", "amplitude", "s", "seed", "bandwidth", "norm", "coefficients"});
  if (!j.contains("kind")) throw ConfigError("profile.kind", "missing");
  const auto kind = detail::get_as<std::string>(j["kind"], "profile.kind");
  if (kind == "square-wave") return InitialProfile::square_wave();
  if (kind == "zero") return InitialProfile::zero();
  if (kind == "single-mode") {
    if (!j.contains("k0")) throw ConfigError("profile.k0", "missing");
    const cplx amp = j.contains("amplitude") ? detail::get_complex(j["amplitude"], "profile.amplitude") : cplx(1.0);
    return InitialProfile::single_mode(detail::get_as<Eigen::Index>(j["k0"], "profile.k0"), amp);
  }
  if (kind == "random-sobolev") {
    if (!j.contains("s")) throw ConfigError("profile.s", "missing");
    std::optional<double> norm;
    if (j.contains("norm") && !j["norm"].is_null()) norm = detail::get_as<double>(j["norm"], "profile.norm");
    try {
      return InitialProfile::random_sobolev(
          detail::get_as<double>(j["s"], "profile.s"),
          j.contains("seed") ? detail::get_as<std::uint64_t>(j["seed"], "profile.seed") : default_seed,
          j.contains("bandwidth") ? detail::get_as<Eigen::Index>(j["bandwidth"], "profile.bandwidth") : default_bandwidth,
          norm);
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError("profile", e.what());
    }
  }
  if (kind == "explicit") {
    if (!j.contains("coefficients") || !j["coefficients"].is_array())
      throw ConfigError("profile.coefficients", "expected an array");
    const json& c = j["coefficients"];
    CVector v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = detail::get_complex(c[i], "profile.coefficients[" + std::to_string(i) + "]");
    return InitialProfile::explicit_coefficients(v);
  }
  throw ConfigError("profile.kind", "unknown profile kind '" + kind + "'");
}

inline json schedule_to_json(const ScheduleSpec& s) {
  if (s.kind != Schedule::Kind::custom) return std::string(to_string(s.kind));
  return json{{"kind", "custom"}, {"values", s.values}};
}

inline json to_json(const RunConfig& c) {
  json j;
  j["schema"] = std::string(kConfigSchema);
  j["command"] = c.command;
  j["equation"] = std::string(to_string(c.equation));
  j["K"] = c.K;
  j["schedule"] = schedule_to_json(c.schedule);
  j["profile"] = profile_to_json(c.profile);
  j["times"] = c.times;
  j["T"] = c.T ? json(*c.T) : json(nullptr);
  j["grid_points"] = c.grid_points;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["kref"] = c.K_ref;
  j["Ks"] = c.Ks;
  j["M"] = c.M;
  j["kappas"] = c.kappas;
  j["rate_window"] = c.rate_window ? json{c.rate_window->first, c.rate_window->second} : json(nullptr);
  j["reference_schedule"] = std::string(to_string(c.reference_schedule));
  j["override_focusing_threshold"] = c.override_focusing_threshold;
  j["bound_scale"] = c.bound_scale;
  j["sweep_T"] = c.sweep_T;
  j["tolerances"] = {{"mass", c.tol_mass}, {"l2", c.tol_l2}};
  return j;
}

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> cmds{"evolve", "talbot", "convergence", "diagnostics"};
  return cmds;
}

/// Command-specific defaults, applied before any user setting.
inline RunConfig defaults_for(const std::string& command) {
  if (!known_commands().count(command)) throw ConfigError("command", "unknown command '" + command + "'");
  RunConfig c;
  c.command = command;
  if (command == "evolve") {
    c.times = {"0", "1"};
  } else if (command == "talbot") {
    c.K = 1024;
    c.schedule.kind = Schedule::Kind::half_staircase;
    c.times = {"pi/2", "pi/3", "pi/6", "sqrt2*pi"};
  } else if (command == "convergence") {
    c.Ks = {16, 32, 64, 128};
    c.K_ref = 1024;
    c.T = std::numbers::pi;
    c.grid_points = 41;
  } else if (command == "diagnostics") {
    c.M = 128;
    c.kappas = {1.0, 10.0, 100.0};
    c.profile = InitialProfile::random_sobolev(0.5, c.seed, c.M, 1.0);
  }
  return c;
}

/// Bandwidth of a random profile that does not state one.
inline Eigen::Index default_profile_bandwidth(const RunConfig& c) {
  if (c.command == "diagnostics") return c.M;
  if (c.command == "convergence") return c.K_ref;
  return c.K;
}

/// Overlays a JSON config (or the "config" block of a manifest) onto `c`.
inline void apply_json(RunConfig& c, const json& input) {
  const json& j = input.contains("config") && input["config"].is_object() ? input["config"] : input;
  detail::require_keys(j, "", {"schema", "command", "equation", "K", "schedule", "profile", "times", "T",
                               "grid_points", "out", "seed", "kref", "Ks", "M", "kappas", "rate_window",
                               "reference_schedule", "override_focusing_threshold", "bound_scale", "sweep_T",
                               "tolerances"});
  if (j.contains("schema") && j["schema"] != std::string(kConfigSchema))
    throw ConfigError("schema", "unsupported schema " + j["schema"].dump());
  if (j.contains("command") && detail::get_as<std::string>(j["command"], "command") != c.command)
    throw ConfigError("command", "config is for '" + j["command"].get<std::string>() + "', not '" + c.command + "'");
  if (j.contains("equation")) {
    try {
      c.equation = parse_flow(detail::get_as<std::string>(j["equation"], "equation"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError("equation", e.what());
    }
  }
  if (j.contains("K")) c.K = detail::get_as<Eigen::Index>(j["K"], "K");
  if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("M")) c.M = detail::get_as<Eigen::Index>(j["M"], "M");
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    if (s.is_string()) {
      c.schedule = parse_schedule_spec(s.get<std::string>());
    } else {
      detail::require_keys(s, "schedule", {"kind", "values"});
      c.schedule = {};
      c.schedule.kind = parse_schedule_kind(detail::get_as<std::string>(s.value("kind", json("custom")), "schedule.kind"));
      if (s.contains("values")) c.schedule.values = detail::get_as<std::vector<Eigen::Index>>(s["values"], "schedule.values");
    }
  }
  if (j.contains("times")) {
    c.times.clear();
    if (!j["times"].is_array()) throw ConfigError("times", "expected an array");
    for (const auto& t : j["times"]) {
      if (t.is_number()) c.times.push_back(format_double(t.get<double>()));
      else if (t.is_string()) c.times.push_back(t.get<std::string>());
      else throw ConfigError("times", "entries must be numbers or expressions");
    }
  }
  if (j.contains("T")) {
    if (j["T"].is_null()) c.T.reset();
    else if (j["T"].is_string()) c.T = TimeExpression::evaluate(j["T"].get<std::string>());
    else c.T = detail::get_as<double>(j["T"], "T");
  }
  if (j.contains("grid_points")) c.grid_points = detail::get_as<int>(j["grid_points"], "grid_points");
  if (j.contains("out")) c.out = detail::get_as<std::string>(j["out"], "out");
  if (j.contains("kref")) c.K_ref = detail::get_as<Eigen::Index>(j["kref"], "kref");
  if (j.contains("Ks")) c.Ks = detail::get_as<std::vector<Eigen::Index>>(j["Ks"], "Ks");
  if (j.contains("kappas")) c.kappas = detail::get_as<std::vector<double>>(j["kappas"], "kappas");
  if (j.contains("rate_window")) {
    if (j["rate_window"].is_null()) {
      c.rate_window.reset();
    } else {
      const auto w = detail::get_as<std::vector<double>>(j["rate_window"], "rate_window");
      if (w.size() != 2) throw ConfigError("rate_window", "expected [low, high]");
      c.rate_window = {w[0], w[1]};
    }
  }
  if (j.contains("reference_schedule"))
    c.reference_schedule = parse_schedule_kind(detail::get_as<std::string>(j["reference_schedule"], "reference_schedule"));
  if (j.contains("override_focusing_threshold"))
    c.override_focusing_threshold = detail::get_as<bool>(j["override_focusing_threshold"], "override_focusing_threshold");
  if (j.contains("bound_scale")) c.bound_scale = detail::get_as<double>(j["bound_scale"], "bound_scale");
  if (j.contains("sweep_T")) c.sweep_T = detail::get_as<double>(j["sweep_T"], "sweep_T");
  if (j.contains("profile")) {
    c.profile = profile_from_json(j["profile"], c.seed, default_profile_bandwidth(c));
    c.profile_explicit = true;
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::require_keys(t, "tolerances", {"mass", "l2"});
    if (t.contains("mass")) c.tol_mass = detail::get_as<double>(t["mass"], "tolerances.mass");
    if (t.contains("l2")) c.tol_l2 = detail::get_as<double>(t["l2"], "tolerances.l2");
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

/// Re-derives defaults that depend on other settings (seed, M).
inline void finalize(RunConfig& c) {
  if (c.command == "diagnostics" && !c.profile_explicit)
    c.profile = InitialProfile::random_sobolev(0.5, c.seed, c.M, 1.0);
}

/// Semantic checks shared by all commands; run before any computation.
inline void validate(const RunConfig& c) {
  if (c.K < 1) throw ConfigError("K", "must be >= 1");
  if (c.grid_points < 2) throw ConfigError("grid_points", "must be >= 2");
  if (c.T && !(*c.T > 0.0)) throw ConfigError("T", "must be positive");
  for (const auto& t : c.times) (void)TimeExpression::evaluate(t);
  if (c.schedule.kind == Schedule::Kind::custom && static_cast<Eigen::Index>(c.schedule.values.size()) != c.K)
    throw ConfigError("schedule", "custom schedule has " + std::to_string(c.schedule.values.size()) +
                                      " values, K = " + std::to_string(c.K));
  for (auto v : c.schedule.values)
    if (v < 0) throw ConfigError("schedule", "entries must be nonnegative");
  if (c.command == "talbot" && c.equation != Flow::bo) throw ConfigError("equation", "talbot runs the BO flow");
  if (c.command == "convergence") {
    if (c.Ks.empty()) throw ConfigError("Ks", "needs at least one value");
    for (std::size_t i = 1; i < c.Ks.size(); ++i)
      if (c.Ks[i] <= c.Ks[i - 1]) throw ConfigError("Ks", "must be strictly increasing");
    if (c.K_ref < 4 * c.Ks.back()) throw ConfigError("kref", "must be >= 4 max(Ks)");
    if (c.grid_points < 11) throw ConfigError("grid_points", "convergence needs >= 11");
  }
  if (c.command == "diagnostics") {
    if (c.M < 64 || (c.M & (c.M - 1)) != 0) throw ConfigError("M", "must be a power of two >= 64");
    if (c.kappas.empty()) throw ConfigError("kappas", "needs at least one value");
    for (double k : c.kappas)
      if (!(k >= 1.0)) throw ConfigError("kappas", "values must be >= 1");
    if (!(c.sweep_T > 0.0)) throw ConfigError("sweep_T", "must be positive");
  }
  if (!(c.tol_mass >= 0.0) || !(c.tol_l2 >= 0.0)) throw ConfigError("tolerances", "must be nonnegative");
}

}  // namespace laxflow::cli
