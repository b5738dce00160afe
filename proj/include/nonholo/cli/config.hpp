#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nonholo/discrete.hpp"
#include "nonholo/system.hpp"

namespace nonholo::cli {

struct DeformationSpec {
  std::vector<expr::Expression> g;
  double delta = 0.0;
};

/// Parsed run configuration.  See README for the JSON layout.
struct RunConfig {
  std::shared_ptr<const MechanicalSystem> system;
  std::optional<std::vector<int>> fiber;

  std::string integrator = "vni10";  // reference | vni10 | vni20 | original_node | dla
  double beta = 0.5;
  NodePolicy policy = NodePolicy::Redefined;

  double eps = 0.0;
  long steps = 0;
  double T = 0.0;

  StatePoint x0;
  bool project_initial = false;
  bool project_each_step = false;

  std::optional<DeformationSpec> deformation;
  std::vector<double> eps_list;

  int samples = 20;
  std::uint64_t seed = 42;
  double spread = 0.1;

  std::optional<StatePoint> x2;  // interp endpoint

  std::string trajectory_file = "trajectory.csv";
  std::string summary_file = "summary.json";

  bool is_reference() const { return integrator == "reference"; }
  IntegratorSpec spec() const;
};

/// Throws ConfigError with a message naming the offending field.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// "a,b,c" -> {a, b, c}.
std::vector<double> parse_eps_list(const std::string& text);

}  // namespace nonholo::cli
