#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonholo/discrete.hpp"
#include "nonholo/flow.hpp"

namespace nonholo {

/// Which integrator a study runs.  `reference` means plain RK4 with step eps.
struct StudyIntegrator {
  bool reference = false;
  IntegratorSpec spec;
};

struct StudyConfig {
  StudyIntegrator integrator;
  double T = 0.5;
  std::vector<double> eps;
  StatePoint x0;  // on D
  std::optional<std::vector<int>> fiber;
};

struct StudyRow {
  double eps = 0.0;
  long steps = 0;
  bool ok = false;
  std::string error;
  double q_error = 0.0;
  double v_error = 0.0;
  double state_error = 0.0;
  double lambda_error = 0.0;
  double max_residual = 0.0;
  double max_deformed_residual = 0.0;
  double energy_drift = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::optional<double> state_slope;
  std::optional<double> lambda_slope;
  std::optional<double> residual_slope;
};

/// Final state of the oracle at T, with RK4 step no longer than min(eps) / 100.
StatePoint study_oracle(const MechanicalSystem& sys, const StudyConfig& cfg);

/// One row of a study against a precomputed oracle state.
StudyRow study_row(const MechanicalSystem& sys, const StudyConfig& cfg, double eps,
                   const StatePoint& oracle);

/// Serial reference implementation of the sweep over cfg.eps.
StudyResult converge_serial(const MechanicalSystem& sys, const StudyConfig& cfg);
/// The same sweep with one OpenMP task per eps.  Identical output to converge_serial.
StudyResult converge_parallel(const MechanicalSystem& sys, const StudyConfig& cfg, int jobs);

/// Max over the samples of |<grad phi, h>|, serial and OpenMP versions.
double max_tangency_defect_serial(const MechanicalSystem& sys, const std::vector<StatePoint>& xs);
double max_tangency_defect_parallel(const MechanicalSystem& sys,
                                    const std::vector<StatePoint>& xs, int jobs);

/// Random points on D: q uniform in the box, base velocities uniform, fiber completed.
std::vector<StatePoint> sample_on_distribution(const MechanicalSystem& sys,
                                               const ConnectionSplit& split, const Vec& center,
                                               double half_width, int count,
                                               unsigned long long seed);

std::string to_json(const StudyResult& result, const StudyConfig& cfg);

}  // namespace nonholo
