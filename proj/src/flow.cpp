#include <cmath>
#include <cstdio>
#include <ostream>

#include "nonholo/flow.hpp"

namespace nonholo {

VectorField make_h_field(const MechanicalSystem& sys) {
  return [&sys](const Vec& y) { return h_field_unchecked(sys, unstack(y)); };
}

VectorField make_deformed_field(const MechanicalSystem& sys, const Deformation& d) {
  return [&sys, &d](const Vec& y) { return deformed_field_unchecked(sys, d, unstack(y)); };
}

VectorField make_reduced_field(const MechanicalSystem& sys, const ConnectionSplit& split) {
  return [&sys, split](const Vec& xi) { return reduced_field(sys, split, xi); };
}

Vec rk4_step(const VectorField& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + (0.5 * h) * k1);
  const Vec k3 = f(x + (0.5 * h) * k2);
  const Vec k4 = f(x + h * k3);
  Vec out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericalError("non-finite state in RK4 step");
  return out;
}

long steps_for(double t, double max_step) {
  const double ratio = std::fabs(t) / max_step;
  const double r = std::round(ratio);
  if (std::fabs(ratio - r) <= 1e-9 * std::max(1.0, r)) return std::max(1L, static_cast<long>(r));
  return std::max(1L, static_cast<long>(std::ceil(ratio)));
}

Vec reference_flow(const VectorField& f, const Vec& x0, double t, double max_step) {
  if (t == 0.0) return x0;
  const long n = steps_for(t, max_step);
  const double h = t / static_cast<double>(n);
  Vec x = x0;
  for (long k = 0; k < n; ++k) x = rk4_step(f, x, h);
  return x;
}

StatePoint reference_flow(const MechanicalSystem& sys, const StatePoint& x0, double t) {
  return unstack(reference_flow(make_h_field(sys), stack(x0), t));
}

void Trajectory::append(const MechanicalSystem& sys, double time, const StatePoint& state) {
  t.push_back(time);
  x.push_back(state);
  lambda.push_back(lambda_formula(sys, state));
  residual.push_back(constraint_residual(sys, state));
  energy.push_back(nonholo::energy(sys, state));
}

Trajectory integrate(const MechanicalSystem& sys, const VectorField& f, const StatePoint& x0,
                     double T, double eps_ref, bool project_each_step) {
  Trajectory traj;
  traj.n = sys.dim();
  traj.m = sys.num_constraints();
  traj.append(sys, 0.0, x0);
  if (T == 0.0) return traj;
  if (!(eps_ref > 0.0)) throw ConfigError("step size must be positive");
  const long steps = steps_for(T, eps_ref);
  const double h = T / static_cast<double>(steps);
  Vec y = stack(x0);
  for (long k = 1; k <= steps; ++k) {
    try {
      y = rk4_step(f, y, h);
    } catch (const NumericalError& e) {
      throw BlowUpError(e.what(), traj);
    }
    if (project_each_step) {
      StatePoint s = unstack(y);
      s.v = project_velocity(sys, s.q, s.v);
      y = stack(s);
    }
    if (y.norm() > kBlowUpNorm)
      throw BlowUpError("state norm exceeded 1e8 at t = " + std::to_string(k * h), traj);
    traj.append(sys, k == steps ? T : static_cast<double>(k) * h, unstack(y));
  }
  return traj;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (int i = 1; i <= traj.n; ++i) os << ",q_" << i;
  for (int i = 1; i <= traj.n; ++i) os << ",v_" << i;
  for (int a = 1; a <= traj.m; ++a) os << ",lambda_" << a;
  for (int a = 1; a <= traj.m; ++a) os << ",residual_" << a;
  os << ",energy\r\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_number(traj.t[k]);
    for (int i = 0; i < traj.n; ++i) os << ',' << format_number(traj.x[k].q[i]);
    for (int i = 0; i < traj.n; ++i) os << ',' << format_number(traj.x[k].v[i]);
    for (int a = 0; a < traj.m; ++a) os << ',' << format_number(traj.lambda[k][a]);
    for (int a = 0; a < traj.m; ++a) os << ',' << format_number(traj.residual[k][a]);
    os << ',' << format_number(traj.energy[k]) << "\r\n";
  }
}

}  // namespace nonholo
