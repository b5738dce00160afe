#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nonholo/cli/config.hpp"

namespace nonholo::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

expr::Expression parse_field(const json& j, const std::string& field) {
  if (j.is_number()) return expr::number(j.get<double>());
  if (!j.is_string()) bad(field, "expected an expression string");
  try {
    return expr::parse(j.get<std::string>());
  } catch (const expr::ParseError& e) {
    bad(field, e.what());
  }
}

Vec parse_vector(const json& j, const std::string& field, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    bad(field, "expected an array of " + std::to_string(n) + " numbers");
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) bad(field, "entry " + std::to_string(i) + " is not a number");
    v[i] = j[i].get<double>();
  }
  return v;
}

double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

struct SystemParts {
  std::vector<std::string> names;
  std::vector<std::string> velocity_names;
  Mat mass;
  expr::Expression potential;
  std::vector<std::vector<expr::Expression>> constraints;
};

SystemParts builtin(const std::string& name) {
  if (name != "nonholonomic_particle") bad("system", "unknown builtin '" + name + "'");
  SystemParts p;
  p.names = {"x", "y", "z"};
  p.mass = Mat::Identity(3, 3);
  p.potential = expr::number(0.0);
  p.constraints = {{expr::parse("-y"), expr::number(0.0), expr::number(1.0)}};
  return p;
}

std::shared_ptr<const MechanicalSystem> parse_system(const json& j) {
  SystemParts p;
  if (j.is_string()) {
    p = builtin(j.get<std::string>());
  } else if (j.is_object()) {
    if (j.contains("builtin")) {
      if (!j["builtin"].is_string()) bad("system.builtin", "expected a string");
      p = builtin(j["builtin"].get<std::string>());
    }
    if (j.contains("names")) {
      if (!j["names"].is_array()) bad("system.names", "expected an array of strings");
      p.names.clear();
      for (const auto& s : j["names"]) {
        if (!s.is_string()) bad("system.names", "expected an array of strings");
        p.names.push_back(s.get<std::string>());
      }
    }
    const int n = static_cast<int>(p.names.size());
    if (n == 0) bad("system.names", "missing");
    if (j.contains("velocity_names")) {
      for (const auto& s : j["velocity_names"]) {
        if (!s.is_string()) bad("system.velocity_names", "expected an array of strings");
        p.velocity_names.push_back(s.get<std::string>());
      }
    }
    if (j.contains("mass")) {
      const json& m = j["mass"];
      if (!m.is_array() || static_cast<int>(m.size()) != n)
        bad("system.mass", "expected an n-vector (diagonal) or an n x n array");
      p.mass = Mat::Zero(n, n);
      if (m[0].is_number()) {
        p.mass.diagonal() = parse_vector(m, "system.mass", n);
      } else {
        for (int i = 0; i < n; ++i)
          p.mass.row(i) = parse_vector(m[i], "system.mass", n).transpose();
      }
    } else if (p.mass.rows() != n) {
      p.mass = Mat::Identity(n, n);
    }
    if (j.contains("potential")) p.potential = parse_field(j["potential"], "system.potential");
    if (j.contains("constraints")) {
      const json& c = j["constraints"];
      if (!c.is_array()) bad("system.constraints", "expected an array of rows");
      p.constraints.clear();
      for (std::size_t a = 0; a < c.size(); ++a) {
        const std::string field = "system.constraints[" + std::to_string(a) + "]";
        if (!c[a].is_array() || static_cast<int>(c[a].size()) != n)
          bad(field, "expected " + std::to_string(n) + " entries");
        std::vector<expr::Expression> row;
        for (const auto& e : c[a]) row.push_back(parse_field(e, field));
        p.constraints.push_back(row);
      }
    }
  } else {
    bad("system", "expected a builtin name or an object");
  }
  return std::make_shared<const MechanicalSystem>(p.names, p.mass, p.potential, p.constraints,
                                                  p.velocity_names);
}

}  // namespace

IntegratorSpec RunConfig::spec() const {
  IntegratorSpec s;
  s.kind = parse_scheme(integrator);
  s.beta = beta;
  s.policy = policy;
  return s;
}

namespace {

RunConfig parse_impl(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  if (!j.contains("system")) bad("system", "missing");
  c.system = parse_system(j["system"]);
  const int n = c.system->dim();

  if (j.contains("fiber")) {
    if (!j["fiber"].is_array()) bad("fiber", "expected an array of indices");
    c.fiber = j["fiber"].get<std::vector<int>>();
  }
  if (j.contains("integrator")) {
    if (!j["integrator"].is_string()) bad("integrator", "expected a string");
    c.integrator = j["integrator"].get<std::string>();
  }
  if (!c.is_reference()) {
    try {
      parse_scheme(c.integrator);
    } catch (const ConfigError&) {
      bad("integrator", "unknown integrator '" + c.integrator + "'");
    }
  }
  if (j.contains("beta")) c.beta = number_field(j["beta"], "beta");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) bad("beta", "must lie in [0, 1]");
  if (j.contains("node_policy")) {
    const std::string p = j["node_policy"].is_string() ? j["node_policy"].get<std::string>() : "";
    if (p == "redefined")
      c.policy = NodePolicy::Redefined;
    else if (p == "original")
      c.policy = NodePolicy::Original;
    else
      bad("node_policy", "expected \"redefined\" or \"original\"");
  }

  if (j.contains("eps")) c.eps = number_field(j["eps"], "eps");
  if (j.contains("eps") && !(c.eps > 0.0)) bad("eps", "must be positive");
  const bool has_steps = j.contains("steps"), has_T = j.contains("T");
  if (has_steps && has_T) bad("steps", "give exactly one of 'steps' and 'T'");
  if (has_steps) {
    if (!j["steps"].is_number_integer() || j["steps"].get<long>() < 0)
      bad("steps", "expected a non-negative integer");
    c.steps = j["steps"].get<long>();
    c.T = static_cast<double>(c.steps) * c.eps;
  }
  if (has_T) {
    c.T = number_field(j["T"], "T");
    if (!(c.T >= 0.0)) bad("T", "must be non-negative");
    if (c.eps > 0.0) {
      const double r = c.T / c.eps;
      c.steps = static_cast<long>(std::llround(r));
      if (!c.is_reference() && std::fabs(r - static_cast<double>(c.steps)) > 1e-9 * std::max(1.0, r))
        bad("T", "must be an integer multiple of eps");
    }
  }

  if (!j.contains("q")) bad("q", "missing");
  if (!j.contains("v")) bad("v", "missing");
  c.x0 = {parse_vector(j["q"], "q", n), parse_vector(j["v"], "v", n)};

  if (j.contains("project_initial")) c.project_initial = j["project_initial"].get<bool>();
  if (j.contains("project_each_step")) c.project_each_step = j["project_each_step"].get<bool>();
  if (j.contains("flags")) {
    const json& f = j["flags"];
    if (f.contains("project_initial")) c.project_initial = f["project_initial"].get<bool>();
    if (f.contains("project_each_step")) c.project_each_step = f["project_each_step"].get<bool>();
  }

  if (j.contains("deformation")) {
    const json& d = j["deformation"];
    if (!d.is_object() || !d.contains("g") || !d["g"].is_array())
      bad("deformation", "expected {\"g\": [...], \"delta\": number}");
    DeformationSpec spec;
    for (const auto& e : d["g"]) spec.g.push_back(parse_field(e, "deformation.g"));
    if (static_cast<int>(spec.g.size()) != c.system->num_constraints())
      bad("deformation.g", "needs one expression per constraint");
    spec.delta = d.contains("delta") ? number_field(d["delta"], "deformation.delta") : 0.0;
    c.deformation = spec;
  }

  if (j.contains("eps_list")) {
    if (!j["eps_list"].is_array()) bad("eps_list", "expected an array of numbers");
    for (const auto& e : j["eps_list"]) {
      const double v = number_field(e, "eps_list");
      if (!(v > 0.0)) bad("eps_list", "entries must be positive");
      c.eps_list.push_back(v);
    }
  }
  if (j.contains("embed")) {
    const json& e = j["embed"];
    if (e.contains("samples")) c.samples = e["samples"].get<int>();
    if (e.contains("seed")) c.seed = e["seed"].get<std::uint64_t>();
    if (e.contains("spread")) c.spread = number_field(e["spread"], "embed.spread");
  }
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("interp")) {
    const json& e = j["interp"];
    if (!e.contains("q") || !e.contains("v")) bad("interp", "expected {\"q\": [...], \"v\": [...]}");
    c.x2 = StatePoint{parse_vector(e["q"], "interp.q", n), parse_vector(e["v"], "interp.v", n)};
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (o.contains("trajectory")) c.trajectory_file = o["trajectory"].get<std::string>();
    if (o.contains("summary")) c.summary_file = o["summary"].get<std::string>();
  }
  return c;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  try {
    return parse_impl(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("--eps-list: '" + item + "' is not a number");
    }
    if (used != item.size() || !(v > 0.0))
      throw ConfigError("--eps-list: '" + item + "' is not a positive number");
    out.push_back(v);
  }
  return out;
}

}  // namespace nonholo::cli
