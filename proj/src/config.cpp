#include "paraspec/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "paraspec/errors.hpp"
#include "paraspec/homogeneous.hpp"
#include "paraspec/time_change.hpp"

namespace paraspec {

namespace {

const std::map<std::string, Scenario>& scenario_names() {
  static const std::map<std::string, Scenario> m = {
      {"furstenberg", Scenario::furstenberg},         {"skew", Scenario::skew},
      {"flow_timechange", Scenario::flow_timechange}, {"flow_twisted", Scenario::flow_twisted},
      {"control_rotation", Scenario::control_rotation}};
  return m;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw InvalidSpec(field + ": " + msg);
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) field_error(field, "expected a number, got '" + s + "'");
  if (!std::isfinite(v)) field_error(field, "must be finite");
  return v;
}

template <class Int>
Int to_int(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    field_error(field, "expected an integer, got '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string canonical_poly(const std::string& field, const std::string& text, int dim) {
  try {
    return format_trig_poly(parse_trig_poly(text, dim));
  } catch (const Error& e) {
    field_error(field, e.what());
  }
}

// Keys each section accepts (and to_ini writes) for a scenario, in output order.
std::vector<std::pair<std::string, std::vector<std::string>>> layout(Scenario s, int d) {
  std::vector<std::string> system, correlation, conditions, simulate, tolerances;
  const bool map = is_map_scenario(s);
  switch (s) {
    case Scenario::furstenberg:
      system = {"y", "d", "b"};
      for (int i = 1; i < d; ++i) system.push_back("h" + std::to_string(i));
      system.insert(system.end(), {"j", "k"});
      break;
    case Scenario::skew: system = {"y", "b", "eta", "k"}; break;
    case Scenario::control_rotation: system = {"y"}; break;
    case Scenario::flow_timechange: system = {"epsilon", "base", "normalize_samples", "y_cap"}; break;
    case Scenario::flow_twisted: system = {"epsilon", "base", "normalize_samples", "y_cap", "mode"}; break;
  }
  if (map) {
    correlation = {"N", "grid_log2", "psi"};
    conditions = {"t_min", "t_max", "per_decade", "n_samples"};
    simulate = {"n_orbits", "steps"};
  } else {
    correlation = {"observable", "T", "dt", "n_samples"};
    conditions = {"t_min", "t_max", "per_decade", "n_samples", "derivative_step"};
    simulate = {"n_orbits", "T", "dt"};
    tolerances = {"ode", "quad_rel", "quad_abs"};
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> out = {
      {"run", {"scenario", "seed", "output_dir"}},
      {"system", system},
      {"correlation", correlation},
      {"conditions", conditions},
      {"spectrum", {"window", "pad", "bochner_m"}},
      {"simulate", simulate}};
  if (!tolerances.empty()) out.emplace_back("tolerances", tolerances);
  return out;
}

int psi_dim(const ExperimentConfig& c) { return c.scenario == Scenario::furstenberg ? c.map.j - 1 : 1; }

std::vector<std::vector<int>> default_b(int d) {
  std::vector<std::vector<int>> b;
  for (int l = 1; l < d; ++l) {
    std::vector<int> row(static_cast<std::size_t>(l), 0);
    row.back() = 1;
    b.push_back(row);
  }
  return b;
}

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& [name, v] : scenario_names())
    if (v == s) return name;
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  const auto it = scenario_names().find(trim(s));
  if (it == scenario_names().end())
    field_error("run.scenario",
                "unknown scenario '" + s + "' (furstenberg | skew | flow_timechange | flow_twisted | control_rotation)");
  return it->second;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  try {
    std::istringstream in(text);
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InvalidSpec(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;
  const auto scen = pt.get_optional<std::string>("run.scenario");
  if (!scen) field_error("run.scenario", "missing");
  c.scenario = parse_scenario(*scen);
  const bool map = is_map_scenario(c.scenario);

  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto child = pt.get_child_optional(boost::property_tree::ptree::path_type(section + "." + key, '.'));
    if (!child) return std::nullopt;
    return trim(child->data());
  };
  if (c.scenario == Scenario::furstenberg)
    if (auto v = get("system", "d")) c.map.d = to_int<int>("system.d", *v);
  if (c.map.d < 2 || c.map.d > 4) field_error("system.d", "must be in [2, 4]");

  // reject keys outside the layout
  const auto lay = layout(c.scenario, c.map.d);
  for (const auto& [section, tree] : pt) {
    const auto it = std::find_if(lay.begin(), lay.end(), [&](const auto& p) { return p.first == section; });
    if (it == lay.end()) field_error(section, "unknown or unused section for scenario " + to_string(c.scenario));
    for (const auto& [key, node] : tree) {
      (void)node;
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        field_error(section + "." + key, "unknown or unused key for scenario " + to_string(c.scenario));
    }
  }

  auto num = [&](const std::string& sec, const std::string& key, double& dst) {
    if (auto v = get(sec, key)) dst = to_double(sec + "." + key, *v);
  };
  auto lng = [&](const std::string& sec, const std::string& key, long& dst) {
    if (auto v = get(sec, key)) dst = to_int<long>(sec + "." + key, *v);
  };
  auto integer = [&](const std::string& sec, const std::string& key, int& dst) {
    if (auto v = get(sec, key)) dst = to_int<int>(sec + "." + key, *v);
  };

  if (auto v = get("run", "seed")) c.seed = to_int<std::uint64_t>("run.seed", *v);
  if (auto v = get("run", "output_dir")) c.output_dir = *v;

  if (map) {
    if (auto v = get("system", "y")) {
      c.map.y = *v == "golden" ? (std::sqrt(5.0) - 1.0) / 2.0 : to_double("system.y", *v);
    } else {
      field_error("system.y", "missing");
    }
    integer("system", "k", c.map.k);
    if (c.scenario == Scenario::control_rotation) c.map.k = 1;
  }
  if (c.scenario == Scenario::furstenberg) {
    integer("system", "j", c.map.j);
    c.map.b = default_b(c.map.d);
    if (auto v = get("system", "b")) {
      const auto rows = split(*v, ';');
      if (static_cast<int>(rows.size()) != c.map.d - 1)
        field_error("system.b", "need d - 1 rows separated by ';' (row l lists b_{l,0..l-1})");
      for (int l = 1; l < c.map.d; ++l) {
        const auto cells = split(rows[static_cast<std::size_t>(l - 1)], ',');
        if (static_cast<int>(cells.size()) != l)
          field_error("system.b", "row " + std::to_string(l) + " needs " + std::to_string(l) + " entries");
        for (int i = 0; i < l; ++i)
          c.map.b[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i)] =
              to_int<int>("system.b", cells[static_cast<std::size_t>(i)]);
      }
    }
    c.map.h.assign(static_cast<std::size_t>(c.map.d - 1), "0");
    for (int i = 1; i < c.map.d; ++i) {
      const std::string key = "h" + std::to_string(i);
      c.map.h[static_cast<std::size_t>(i - 1)] = canonical_poly("system." + key, get("system", key).value_or("0"), i);
    }
  }
  if (c.scenario == Scenario::skew) {
    integer("system", "b", c.map.b_skew);
    c.map.eta = canonical_poly("system.eta", get("system", "eta").value_or("0"), 1);
  }
  if (!map) {
    num("system", "epsilon", c.flow.epsilon);
    if (auto v = get("system", "base")) c.flow.base = *v;
    lng("system", "normalize_samples", c.flow.normalize_samples);
    num("system", "y_cap", c.flow.y_cap);
    if (c.scenario == Scenario::flow_twisted) integer("system", "mode", c.flow.mode);
    if (auto v = get("correlation", "observable")) c.correlation.observable = *v;
    num("correlation", "T", c.correlation.T);
    num("correlation", "dt", c.correlation.dt);
    lng("correlation", "n_samples", c.correlation.n_samples);
    num("conditions", "derivative_step", c.conditions.derivative_step);
    num("simulate", "T", c.simulate.T);
    num("simulate", "dt", c.simulate.dt);
    num("tolerances", "ode", c.tol.ode);
    num("tolerances", "quad_rel", c.tol.quad_rel);
    num("tolerances", "quad_abs", c.tol.quad_abs);
  } else {
    lng("correlation", "N", c.correlation.N);
    integer("correlation", "grid_log2", c.correlation.grid_log2);
    if (c.scenario == Scenario::furstenberg && (c.map.j < 2 || c.map.j > c.map.d))
      field_error("system.j", "must be in [2, d]");
    const std::string fallback = c.scenario == Scenario::control_rotation
                                     ? "1*exp(1)"
                                     : format_trig_poly(FourierObservable::constant(psi_dim(c), 1.0));
    c.correlation.psi = canonical_poly("correlation.psi", get("correlation", "psi").value_or(fallback), psi_dim(c));
    lng("simulate", "steps", c.simulate.steps);
  }
  num("conditions", "t_min", c.conditions.t_min);
  num("conditions", "t_max", c.conditions.t_max);
  integer("conditions", "per_decade", c.conditions.per_decade);
  lng("conditions", "n_samples", c.conditions.n_samples);
  if (auto v = get("spectrum", "window")) c.spectrum.window = *v;
  integer("spectrum", "pad", c.spectrum.pad);
  integer("spectrum", "bochner_m", c.spectrum.bochner_m);
  lng("simulate", "n_orbits", c.simulate.n_orbits);

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string value_of(const ExperimentConfig& c, const std::string& section, const std::string& key) {
  const bool map = is_map_scenario(c.scenario);
  if (section == "run") {
    if (key == "scenario") return to_string(c.scenario);
    if (key == "seed") return std::to_string(c.seed);
    return c.output_dir;
  }
  if (section == "system") {
    if (key == "y") return fmt(c.map.y);
    if (key == "d") return std::to_string(c.map.d);
    if (key == "j") return std::to_string(c.map.j);
    if (key == "k") return std::to_string(c.map.k);
    if (key == "eta") return c.map.eta;
    if (key == "b" && c.scenario == Scenario::skew) return std::to_string(c.map.b_skew);
    if (key == "b") {
      std::string out;
      for (std::size_t l = 0; l < c.map.b.size(); ++l) {
        if (l) out += "; ";
        for (std::size_t i = 0; i < c.map.b[l].size(); ++i) out += (i ? "," : "") + std::to_string(c.map.b[l][i]);
      }
      return out;
    }
    if (key[0] == 'h') return c.map.h[static_cast<std::size_t>(std::stoi(key.substr(1)) - 1)];
    if (key == "epsilon") return fmt(c.flow.epsilon);
    if (key == "base") return c.flow.base;
    if (key == "normalize_samples") return std::to_string(c.flow.normalize_samples);
    if (key == "y_cap") return fmt(c.flow.y_cap);
    if (key == "mode") return std::to_string(c.flow.mode);
  }
  if (section == "correlation") {
    if (key == "N") return std::to_string(c.correlation.N);
    if (key == "grid_log2") return std::to_string(c.correlation.grid_log2);
    if (key == "psi") return c.correlation.psi;
    if (key == "observable") return c.correlation.observable;
    if (key == "T") return fmt(c.correlation.T);
    if (key == "dt") return fmt(c.correlation.dt);
    if (key == "n_samples") return std::to_string(c.correlation.n_samples);
  }
  if (section == "conditions") {
    if (key == "t_min") return fmt(c.conditions.t_min);
    if (key == "t_max") return fmt(c.conditions.t_max);
    if (key == "per_decade") return std::to_string(c.conditions.per_decade);
    if (key == "n_samples") return std::to_string(c.conditions.n_samples);
    if (key == "derivative_step") return fmt(c.conditions.derivative_step);
  }
  if (section == "spectrum") {
    if (key == "window") return c.spectrum.window;
    if (key == "pad") return std::to_string(c.spectrum.pad);
    if (key == "bochner_m") return std::to_string(c.spectrum.bochner_m);
  }
  if (section == "simulate") {
    if (key == "n_orbits") return std::to_string(c.simulate.n_orbits);
    if (key == "steps") return std::to_string(c.simulate.steps);
    if (key == "T") return fmt(c.simulate.T);
    if (key == "dt") return fmt(c.simulate.dt);
  }
  if (section == "tolerances") {
    if (key == "ode") return fmt(c.tol.ode);
    if (key == "quad_rel") return fmt(c.tol.quad_rel);
    if (key == "quad_abs") return fmt(c.tol.quad_abs);
  }
  (void)map;
  throw InvalidSpec(section + "." + key + ": no canonical value");
}

std::string canonical_text(const ExperimentConfig& c, bool with_output_dir) {
  std::string out;
  for (const auto& [section, keys] : layout(c.scenario, c.map.d)) {
    out += "[" + section + "]\n";
    for (const auto& key : keys) {
      if (section == "run" && key == "output_dir" && (!with_output_dir || c.output_dir.empty())) continue;
      out += key + " = " + value_of(c, section, key) + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string to_ini(const ExperimentConfig& c) { return canonical_text(c, true); }

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate_config(const ExperimentConfig& c) {
  const bool map = is_map_scenario(c.scenario);
  try {
    (void)build_system(c, 0);  // structural checks only; flows are not normalized here
  } catch (const InvalidSpec& e) {
    field_error("system", e.what());
  }
  if (map) {
    if (c.correlation.N < 1 || c.correlation.N > 65536) field_error("correlation.N", "must be in [1, 65536]");
    const int m = psi_dim(c);
    if (c.correlation.grid_log2 < 2 || c.correlation.grid_log2 * m > 24)
      field_error("correlation.grid_log2", "need 2 <= grid_log2 and grid_log2 * dim <= 24");
    if (c.simulate.steps < 0 || c.simulate.steps > 1000000) field_error("simulate.steps", "must be in [0, 1e6]");
  } else {
    if (!(c.flow.epsilon >= 0.0)) field_error("system.epsilon", "must be >= 0");
    const auto names = registered_observables();
    if (std::find(names.begin(), names.end(), c.flow.base) == names.end())
      throw UnknownObservable("system.base: unknown observable '" + c.flow.base + "'");
    if (std::find(names.begin(), names.end(), c.correlation.observable) == names.end())
      throw UnknownObservable("correlation.observable: unknown observable '" + c.correlation.observable + "'");
    if (c.flow.normalize_samples < 1000) field_error("system.normalize_samples", "must be >= 1000");
    if (!(c.flow.y_cap >= 2.0)) field_error("system.y_cap", "must be >= 2");
    if (!(c.correlation.dt > 0.0) || !(c.correlation.T >= c.correlation.dt) || c.correlation.T > 1e4)
      field_error("correlation.T", "need 0 < dt <= T <= 1e4");
    if (c.correlation.n_samples < 32) field_error("correlation.n_samples", "must be >= 32");
    if (!(c.conditions.derivative_step > 0.0 && c.conditions.derivative_step <= 0.1))
      field_error("conditions.derivative_step", "must be in (0, 0.1]");
    if (c.conditions.t_max > 1e4) field_error("conditions.t_max", "must be <= 1e4 for flows");
    if (!(c.simulate.dt > 0.0) || !(c.simulate.T >= c.simulate.dt) || c.simulate.T > 1e4)
      field_error("simulate.T", "need 0 < dt <= T <= 1e4");
    if (!(c.tol.ode > 0.0 && c.tol.quad_rel > 0.0 && c.tol.quad_abs > 0.0))
      field_error("tolerances", "all tolerances must be positive");
  }
  if (!(c.conditions.t_min > 0.0) || !(c.conditions.t_max >= 100.0 * c.conditions.t_min))
    field_error("conditions.t_max", "need t_min > 0 and t_max >= 100 t_min (two decades)");
  if (c.conditions.per_decade < 1 || c.conditions.per_decade > 100)
    field_error("conditions.per_decade", "must be in [1, 100]");
  if (c.conditions.n_samples < 2) field_error("conditions.n_samples", "must be >= 2");
  if (c.spectrum.window != "hann" && c.spectrum.window != "none")
    field_error("spectrum.window", "must be hann or none");
  if (c.spectrum.pad < 1 || c.spectrum.pad > 64) field_error("spectrum.pad", "must be in [1, 64]");
  if (c.spectrum.bochner_m < 1 || c.spectrum.bochner_m > 512) field_error("spectrum.bochner_m", "must be in [1, 512]");
  if (c.simulate.n_orbits < 1 || c.simulate.n_orbits > 10000) field_error("simulate.n_orbits", "must be in [1, 1e4]");
}

System build_system(const ExperimentConfig& c, int workers) {
  switch (c.scenario) {
    case Scenario::furstenberg: {
      FurstenbergSpec s;
      s.d = c.map.d;
      s.y = c.map.y;
      s.b.assign(static_cast<std::size_t>(s.d), std::vector<int>(static_cast<std::size_t>(s.d), 0));
      for (std::size_t l = 0; l < c.map.b.size(); ++l)
        for (std::size_t i = 0; i < c.map.b[l].size(); ++i) s.b[l + 1][i] = c.map.b[l][i];
      for (int i = 1; i < s.d; ++i) s.h.push_back(parse_trig_poly(c.map.h[static_cast<std::size_t>(i - 1)], i));
      s.j = c.map.j;
      s.k = c.map.k;
      s.validate();
      return s;
    }
    case Scenario::skew: {
      SkewProductSpec s;
      s.y = c.map.y;
      s.b = c.map.b_skew;
      s.eta_lift = parse_trig_poly(c.map.eta, 1);
      s.k = c.map.k;
      s.validate();
      return s;
    }
    case Scenario::control_rotation: return RotationControl{c.map.y};
    case Scenario::flow_timechange:
    case Scenario::flow_twisted: {
      TimeChange alpha;
      if (workers <= 0) {
        alpha.epsilon = c.flow.epsilon;
        alpha.base = c.flow.base;
        alpha.y_cap = c.flow.y_cap;
      } else {
        alpha = normalize_alpha(c.flow.base, c.flow.epsilon, c.flow.normalize_samples, c.seed, c.flow.y_cap, workers);
      }
      if (c.scenario == Scenario::flow_timechange) return TimeChangedFlow{alpha};
      if (c.flow.mode == 0) throw InvalidSpec("mode must be nonzero");
      return TwistedFlow{alpha, c.flow.mode};
    }
  }
  throw InvalidSpec("unknown scenario");
}

}  // namespace paraspec
