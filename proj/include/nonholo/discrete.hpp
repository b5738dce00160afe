#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nonholo/newton.hpp"
#include "nonholo/system.hpp"

namespace nonholo {

/// rho(q0, q1) = ((1 - beta) q0 + beta q1, (q1 - q0) / eps).
class FiniteDifferenceMap {
 public:
  FiniteDifferenceMap(double beta, double eps);
  double beta() const { return beta_; }
  double eps() const { return eps_; }
  StatePoint apply(const Vec& q0, const Vec& q1) const;
  std::pair<Vec, Vec> inverse(const StatePoint& x) const;
  Vec node(const Vec& q0, const Vec& q1) const;

 private:
  double beta_;
  double eps_;
};

/**
 * @brief Discretization L_d = eps L(rho(q0, q1)) with constraints phi_d = -eps mu(rho).
 */
class DiscreteNonholonomicSystem {
 public:
  DiscreteNonholonomicSystem(const MechanicalSystem& sys, double beta, double eps);

  const MechanicalSystem& system() const { return *sys_; }
  const FiniteDifferenceMap& map() const { return map_; }
  double eps() const { return map_.eps(); }
  double beta() const { return map_.beta(); }

  double lagrangian(const Vec& q0, const Vec& q1) const;
  Vec d1_lagrangian(const Vec& q0, const Vec& q1) const;
  Vec d2_lagrangian(const Vec& q0, const Vec& q1) const;
  /// d/dq1 of d1_lagrangian.
  Mat d12_lagrangian(const Vec& q0, const Vec& q1) const;
  Vec constraint(const Vec& q0, const Vec& q1) const;
  /// d/dq1 of constraint.
  Mat d2_constraint(const Vec& q0, const Vec& q1) const;

 private:
  const MechanicalSystem* sys_;
  FiniteDifferenceMap map_;
};

struct DlaStep {
  Vec q_next;
  Vec lambda;
  int iterations = 0;
  double regularity_condition = 1.0;
};

/**
 * Solves D1 L_d(q_k, q_{k+1}) + D2 L_d(q_{k-1}, q_k) = -eps lambda mu(q_k) together
 * with phi_d(q_k, q_{k+1}) = 0.  The multiplier is scaled so that it matches the
 * continuous lambda in the limit.
 */
DlaStep dla_step(const DiscreteNonholonomicSystem& dsys, const Vec& q_prev, const Vec& q_curr,
                 const Vec& lambda_guess = Vec());

struct SchemeStep {
  StatePoint x;
  Vec lambda;
  int iterations = 0;
};

/// First-order scheme on redefined nodes: explicit.
SchemeStep vni10_step(const MechanicalSystem& sys, const StatePoint& x, double eps);
/// Second-order scheme on redefined nodes: Newton on (v', lambda).
SchemeStep vni20_step(const MechanicalSystem& sys, const StatePoint& x, double eps);
/// Midpoint discretization without redefining the nodes; preserves mu(q - eps v / 2) v = 0.
SchemeStep original_node_step(const MechanicalSystem& sys, const StatePoint& x, double eps);

enum class SchemeKind { Vni10, Vni20, OriginalNode, Dla };
enum class NodePolicy { Redefined, Original };

struct IntegratorSpec {
  SchemeKind kind = SchemeKind::Vni10;
  double beta = 0.5;                       // Dla only
  NodePolicy policy = NodePolicy::Redefined;  // Dla only

  /// beta of the finite-difference map behind the scheme.
  double map_beta() const;
  NodePolicy node_policy() const;
};

std::string scheme_name(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);

/// mu(q - (1 - beta) eps v) v: the constraint kept exactly by original-node schemes.
Vec deformed_node_residual(const MechanicalSystem& sys, const StatePoint& x, double eps,
                           double beta);

/**
 * Initial data accepted by the scheme.  Redefined-node schemes take x0 on D
 * unchanged.  Original-node schemes keep q and the base velocities and solve
 * for the fiber velocities so that the deformed constraint holds.
 */
StatePoint admissible_initial_state(const IntegratorSpec& spec, const MechanicalSystem& sys,
                                    const ConnectionSplit& split, const StatePoint& x0,
                                    double eps);

struct DiscreteTrajectory {
  int n = 0;
  int m = 0;
  double eps = 0.0;
  std::vector<double> t;
  std::vector<StatePoint> x;
  std::vector<Vec> lambda;
  std::vector<Vec> residual;
  std::vector<Vec> deformed_residual;
  std::vector<double> energy;
  std::vector<int> newton_iters;

  std::size_t size() const { return t.size(); }
};

/// A step failed; carries the steps completed before the failure.
class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, DiscreteTrajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const DiscreteTrajectory& partial() const { return partial_; }

 private:
  DiscreteTrajectory partial_;
};

/// Runs N steps from x0, which must already be admissible for the scheme.
DiscreteTrajectory run_integrator(const IntegratorSpec& spec, const MechanicalSystem& sys,
                                  const StatePoint& x0, double eps, long steps);

/// Columns of write_trajectory_csv followed by newton_iters, deformed_residual_1..m.
void write_discrete_csv(std::ostream& os, const DiscreteTrajectory& traj);

}  // namespace nonholo
