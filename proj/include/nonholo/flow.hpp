#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nonholo/reduction.hpp"

namespace nonholo {

using VectorField = std::function<Vec(const Vec&)>;

/// h on stacked states, without the on-D check.
VectorField make_h_field(const MechanicalSystem& sys);
VectorField make_deformed_field(const MechanicalSystem& sys, const Deformation& d);
VectorField make_reduced_field(const MechanicalSystem& sys, const ConnectionSplit& split);

/// One classical Runge-Kutta step.  Throws NumericalError on a non-finite stage.
Vec rk4_step(const VectorField& f, const Vec& x, double h);

/// Uniform steps used to cover [0, t] with steps no longer than max_step.
long steps_for(double t, double max_step);

/// RK4 flow for time t (negative t integrates backwards).
Vec reference_flow(const VectorField& f, const Vec& x0, double t, double max_step = 1e-4);
StatePoint reference_flow(const MechanicalSystem& sys, const StatePoint& x0, double t);

struct Trajectory {
  int n = 0;
  int m = 0;
  std::vector<double> t;
  std::vector<StatePoint> x;
  std::vector<Vec> lambda;
  std::vector<Vec> residual;
  std::vector<double> energy;

  std::size_t size() const { return t.size(); }
  void append(const MechanicalSystem& sys, double time, const StatePoint& state);
};

/// Integration stopped because |x| exceeded 1e8; carries the steps taken so far.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

inline constexpr double kBlowUpNorm = 1e8;

/**
 * Integrates f from x0 over [0, T] with RK4 steps of size T / ceil(T / eps_ref).
 * With project_each_step the velocity is projected back onto D after each step.
 */
Trajectory integrate(const MechanicalSystem& sys, const VectorField& f, const StatePoint& x0,
                     double T, double eps_ref, bool project_each_step = false);

/// Writes t, q_1..q_n, v_1..v_n, lambda_1..lambda_m, residual_1..residual_m, energy.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// 17 significant digits; parses back to the same double.
std::string format_number(double x);

}  // namespace nonholo
