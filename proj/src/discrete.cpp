#include <cmath>
#include <ostream>

#include "nonholo/discrete.hpp"
#include "nonholo/flow.hpp"
#include "nonholo/reduction.hpp"

namespace nonholo {

namespace {

/// Rows (dmu[a]^T w)^T: derivative of mu(q) w with respect to q.
Mat contract_velocity(const ConstraintJet& jet, const Vec& w) {
  const auto m = jet.mu.rows(), n = jet.mu.cols();
  Mat out(m, n);
  for (Eigen::Index a = 0; a < m; ++a) out.row(a) = (jet.dmu[a].transpose() * w).transpose();
  return out;
}

Vec grad_v(const MechanicalSystem& sys, const Vec& q) {
  return sys.potential_is_constant() ? Vec::Zero(sys.dim()) : sys.potential_gradient(q);
}

Mat hess_v(const MechanicalSystem& sys, const Vec& q) {
  return sys.potential_is_constant() ? Mat::Zero(sys.dim(), sys.dim()) : sys.potential_hessian(q);
}

void require_small(const Vec& r, const char* what) {
  const double e = max_abs(r);
  if (!(e <= kOnDistributionTol))
    throw PreconditionError(std::string(what) + " (residual " + std::to_string(e) + ")");
}

/**
 * Shared Newton for the velocity-form midpoint updates
 *   w - v + eps/2 M^-1 (grad V(q_old) + grad V(q_mid + eps/2 w)) - M^-1 mu_fixed^T nu = 0,
 *   mu(q_mid + eps/2 w) w = 0,
 * with nu = eps lambda.
 */
SchemeStep midpoint_velocity_solve(const MechanicalSystem& sys, const Vec& q_mid, const Vec& v,
                                   const Vec& grad_old, const Mat& mu_fixed, double eps) {
  const int n = sys.dim(), m = sys.num_constraints();
  const Mat& minv = sys.mass_inverse();
  const Mat push = minv * mu_fixed.transpose();
  const Vec base = -v + (0.5 * eps) * (minv * grad_old);
  auto fn = [&](const Vec& z, Vec& F, Mat* J) {
    const Vec w = z.head(n);
    const Vec nu = z.tail(m);
    const Vec qn = q_mid + (0.5 * eps) * w;
    const ConstraintJet jet = sys.constraint_jet(qn);
    F.resize(n + m);
    F.head(n) = w + base + (0.5 * eps) * (minv * grad_v(sys, qn)) - push * nu;
    F.tail(m) = jet.mu * w;
    if (J) {
      J->setZero(n + m, n + m);
      J->topLeftCorner(n, n) = Mat::Identity(n, n) + (0.25 * eps * eps) * (minv * hess_v(sys, qn));
      J->topRightCorner(n, m) = -push;
      J->bottomLeftCorner(m, n) = jet.mu + (0.5 * eps) * contract_velocity(jet, w);
    }
  };
  Vec z0 = Vec::Zero(n + m);
  z0.head(n) = v;
  const NewtonResult r = newton_solve(fn, z0);
  SchemeStep out;
  out.x.v = r.x.head(n);
  out.x.q = q_mid + (0.5 * eps) * out.x.v;
  out.lambda = r.x.tail(m) / eps;
  out.iterations = r.iterations;
  return out;
}

}  // namespace

FiniteDifferenceMap::FiniteDifferenceMap(double beta, double eps) : beta_(beta), eps_(eps) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
}

Vec FiniteDifferenceMap::node(const Vec& q0, const Vec& q1) const {
  return (1.0 - beta_) * q0 + beta_ * q1;
}

StatePoint FiniteDifferenceMap::apply(const Vec& q0, const Vec& q1) const {
  return {node(q0, q1), (q1 - q0) / eps_};
}

std::pair<Vec, Vec> FiniteDifferenceMap::inverse(const StatePoint& x) const {
  return {x.q - (beta_ * eps_) * x.v, x.q + ((1.0 - beta_) * eps_) * x.v};
}

DiscreteNonholonomicSystem::DiscreteNonholonomicSystem(const MechanicalSystem& sys, double beta,
                                                       double eps)
    : sys_(&sys), map_(beta, eps) {}

double DiscreteNonholonomicSystem::lagrangian(const Vec& q0, const Vec& q1) const {
  const StatePoint r = map_.apply(q0, q1);
  return eps() * (0.5 * r.v.dot(sys_->mass() * r.v) - sys_->potential(r.q));
}

Vec DiscreteNonholonomicSystem::d1_lagrangian(const Vec& q0, const Vec& q1) const {
  const StatePoint r = map_.apply(q0, q1);
  return -(sys_->mass() * r.v) - (eps() * (1.0 - beta())) * grad_v(*sys_, r.q);
}

Vec DiscreteNonholonomicSystem::d2_lagrangian(const Vec& q0, const Vec& q1) const {
  const StatePoint r = map_.apply(q0, q1);
  return sys_->mass() * r.v - (eps() * beta()) * grad_v(*sys_, r.q);
}

Mat DiscreteNonholonomicSystem::d12_lagrangian(const Vec& q0, const Vec& q1) const {
  const Vec c = map_.node(q0, q1);
  return -sys_->mass() / eps() - (eps() * (1.0 - beta()) * beta()) * hess_v(*sys_, c);
}

Vec DiscreteNonholonomicSystem::constraint(const Vec& q0, const Vec& q1) const {
  const StatePoint r = map_.apply(q0, q1);
  return -eps() * (sys_->constraint_matrix(r.q) * r.v);
}

Mat DiscreteNonholonomicSystem::d2_constraint(const Vec& q0, const Vec& q1) const {
  const StatePoint r = map_.apply(q0, q1);
  const ConstraintJet jet = sys_->constraint_jet(r.q);
  return -(eps() * beta()) * contract_velocity(jet, r.v) - jet.mu;
}

DlaStep dla_step(const DiscreteNonholonomicSystem& dsys, const Vec& q_prev, const Vec& q_curr,
                 const Vec& lambda_guess) {
  const MechanicalSystem& sys = dsys.system();
  const int n = sys.dim(), m = sys.num_constraints();
  const double eps = dsys.eps(), beta = dsys.beta();
  require_small(dsys.constraint(q_prev, q_curr), "previous pair violates the discrete constraint");

  const Vec d2_prev = dsys.d2_lagrangian(q_prev, q_curr);
  const Mat mu_k = sys.constraint_matrix(q_curr);
  // Unknowns (w, nu) with q_next = q_curr + eps w and nu = eps lambda.
  auto fn = [&](const Vec& z, Vec& F, Mat* J) {
    const Vec w = z.head(n);
    const Vec q_next = q_curr + eps * w;
    const Vec c = dsys.map().node(q_curr, q_next);
    const ConstraintJet jet = sys.constraint_jet(c);
    F.resize(n + m);
    F.head(n) = dsys.d1_lagrangian(q_curr, q_next) + d2_prev + mu_k.transpose() * z.tail(m);
    F.tail(m) = jet.mu * w;
    if (J) {
      J->setZero(n + m, n + m);
      J->topLeftCorner(n, n) = eps * dsys.d12_lagrangian(q_curr, q_next);
      J->topRightCorner(n, m) = mu_k.transpose();
      J->bottomLeftCorner(m, n) = jet.mu + (eps * beta) * contract_velocity(jet, w);
    }
  };
  Vec z0(n + m);
  z0.head(n) = (q_curr - q_prev) / eps;
  z0.tail(m) = lambda_guess.size() == m ? Vec(eps * lambda_guess) : Vec::Zero(m);
  const NewtonResult r = newton_solve(fn, z0);

  DlaStep out;
  out.q_next = q_curr + eps * r.x.head(n);
  out.lambda = r.x.tail(m) / eps;
  out.iterations = r.iterations;
  Vec F;
  Mat J;
  fn(r.x, F, &J);
  out.regularity_condition = condition_number(J);
  if (!(out.regularity_condition <= kSingularCondition))
    throw SingularMatrixError("discrete Lagrange-d'Alembert system is not regular",
                              out.regularity_condition);
  return out;
}

SchemeStep vni10_step(const MechanicalSystem& sys, const StatePoint& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
  require_small(constraint_residual(sys, x), "state is off the constraint distribution");
  SchemeStep out;
  out.x.q = x.q + eps * x.v;
  const Mat mu = sys.constraint_matrix(out.x.q);
  const Vec v_free = x.v - eps * (sys.mass_inverse() * grad_v(sys, out.x.q));
  const CMatrix c = c_matrix_from(mu, sys.mass_inverse());
  out.lambda = -(c.c_inv * (mu * v_free)) / eps;
  out.x.v = v_free + eps * (sys.mass_inverse() * (mu.transpose() * out.lambda));
  return out;
}

SchemeStep vni20_step(const MechanicalSystem& sys, const StatePoint& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
  require_small(constraint_residual(sys, x), "state is off the constraint distribution");
  const Vec q_half = x.q + (0.5 * eps) * x.v;
  return midpoint_velocity_solve(sys, q_half, x.v, grad_v(sys, x.q),
                                 sys.constraint_matrix(q_half), eps);
}

SchemeStep original_node_step(const MechanicalSystem& sys, const StatePoint& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
  require_small(deformed_node_residual(sys, x, eps, 0.5), "state violates the deformed constraint");
  const Vec q_back = x.q - (0.5 * eps) * x.v;
  SchemeStep s = midpoint_velocity_solve(sys, x.q, x.v, grad_v(sys, q_back),
                                         sys.constraint_matrix(x.q), eps);
  s.x.q = x.q + eps * s.x.v;
  return s;
}

double IntegratorSpec::map_beta() const {
  switch (kind) {
    case SchemeKind::Vni10: return 0.0;
    case SchemeKind::Vni20: return 0.5;
    case SchemeKind::OriginalNode: return 0.5;
    case SchemeKind::Dla: return beta;
  }
  return beta;
}

NodePolicy IntegratorSpec::node_policy() const {
  if (kind == SchemeKind::OriginalNode) return NodePolicy::Original;
  if (kind == SchemeKind::Dla) return policy;
  return NodePolicy::Redefined;
}

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Vni10: return "vni10";
    case SchemeKind::Vni20: return "vni20";
    case SchemeKind::OriginalNode: return "original_node";
    case SchemeKind::Dla: return "dla";
  }
  return "?";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "vni10") return SchemeKind::Vni10;
  if (name == "vni20") return SchemeKind::Vni20;
  if (name == "original_node") return SchemeKind::OriginalNode;
  if (name == "dla") return SchemeKind::Dla;
  throw ConfigError("unknown integrator '" + name + "'");
}

Vec deformed_node_residual(const MechanicalSystem& sys, const StatePoint& x, double eps,
                           double beta) {
  return sys.constraint_matrix(x.q - ((1.0 - beta) * eps) * x.v) * x.v;
}

StatePoint admissible_initial_state(const IntegratorSpec& spec, const MechanicalSystem& sys,
                                    const ConnectionSplit& split, const StatePoint& x0,
                                    double eps) {
  if (spec.node_policy() == NodePolicy::Redefined) {
    require_small(constraint_residual(sys, x0), "initial state is off the constraint distribution");
    return x0;
  }
  const double shift = (1.0 - spec.map_beta()) * eps;
  const int m = sys.num_constraints();
  const auto& fiber = split.fiber;
  auto velocity = [&](const Vec& u) {
    Vec v = x0.v;
    for (int k = 0; k < m; ++k) v[fiber[k]] = u[k];
    return v;
  };
  auto fn = [&](const Vec& u, Vec& F, Mat* J) {
    const Vec v = velocity(u);
    const ConstraintJet jet = sys.constraint_jet(x0.q - shift * v);
    F = jet.mu * v;
    if (J) {
      const Mat full = jet.mu - shift * contract_velocity(jet, v);
      J->resize(m, m);
      for (int k = 0; k < m; ++k) J->col(k) = full.col(fiber[k]);
    }
  };
  Vec u0(m);
  for (int k = 0; k < m; ++k) u0[k] = x0.v[fiber[k]];
  const NewtonResult r = newton_solve(fn, u0);
  return {x0.q, velocity(r.x)};
}

namespace {

void record(DiscreteTrajectory& traj, const MechanicalSystem& sys, const IntegratorSpec& spec,
            long k, const StatePoint& x, const Vec& lambda, int iters) {
  traj.t.push_back(static_cast<double>(k) * traj.eps);
  traj.x.push_back(x);
  traj.lambda.push_back(lambda);
  traj.residual.push_back(constraint_residual(sys, x));
  traj.deformed_residual.push_back(deformed_node_residual(sys, x, traj.eps, spec.map_beta()));
  traj.energy.push_back(energy(sys, x));
  traj.newton_iters.push_back(iters);
}

}  // namespace

DiscreteTrajectory run_integrator(const IntegratorSpec& spec, const MechanicalSystem& sys,
                                  const StatePoint& x0, double eps, long steps) {
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
  if (steps < 0) throw ConfigError("step count must be non-negative");
  if (spec.node_policy() == NodePolicy::Redefined)
    require_small(constraint_residual(sys, x0), "initial state is off the constraint distribution");
  else
    require_small(deformed_node_residual(sys, x0, eps, spec.map_beta()),
                  "initial state violates the deformed constraint");

  DiscreteTrajectory traj;
  traj.n = sys.dim();
  traj.m = sys.num_constraints();
  traj.eps = eps;
  record(traj, sys, spec, 0, x0, lambda_formula(sys, x0), 0);

  StatePoint x = x0;
  Vec lambda = traj.lambda.back();
  const DiscreteNonholonomicSystem dsys(sys, spec.map_beta(), eps);
  Vec q_prev, q_curr;
  if (spec.kind == SchemeKind::Dla) {
    if (spec.policy == NodePolicy::Redefined) {
      std::tie(q_prev, q_curr) = dsys.map().inverse(x0);
    } else {
      q_prev = x0.q - eps * x0.v;
      q_curr = x0.q;
    }
  }

  for (long k = 1; k <= steps; ++k) {
    int iters = 0;
    try {
      switch (spec.kind) {
        case SchemeKind::Vni10:
        case SchemeKind::Vni20:
        case SchemeKind::OriginalNode: {
          const SchemeStep s = spec.kind == SchemeKind::Vni10   ? vni10_step(sys, x, eps)
                               : spec.kind == SchemeKind::Vni20 ? vni20_step(sys, x, eps)
                                                                : original_node_step(sys, x, eps);
          x = s.x;
          lambda = s.lambda;
          iters = s.iterations;
          break;
        }
        case SchemeKind::Dla: {
          const DlaStep s = dla_step(dsys, q_prev, q_curr, lambda);
          x = spec.policy == NodePolicy::Redefined
                  ? dsys.map().apply(q_curr, s.q_next)
                  : StatePoint{s.q_next, (s.q_next - q_curr) / eps};
          q_prev = q_curr;
          q_curr = s.q_next;
          lambda = s.lambda;
          iters = s.iterations;
          break;
        }
      }
    } catch (const Error& e) {
      throw StepFailure("step " + std::to_string(k) + " failed: " + e.what(), traj);
    }
    if (stack(x).norm() > kBlowUpNorm)
      throw StepFailure("state norm exceeded 1e8 at step " + std::to_string(k), traj);
    record(traj, sys, spec, k, x, lambda, iters);
  }
  return traj;
}

void write_discrete_csv(std::ostream& os, const DiscreteTrajectory& traj) {
  os << "t";
  for (int i = 1; i <= traj.n; ++i) os << ",q_" << i;
  for (int i = 1; i <= traj.n; ++i) os << ",v_" << i;
  for (int a = 1; a <= traj.m; ++a) os << ",lambda_" << a;
  for (int a = 1; a <= traj.m; ++a) os << ",residual_" << a;
  os << ",energy,newton_iters";
  for (int a = 1; a <= traj.m; ++a) os << ",deformed_residual_" << a;
  os << "\r\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_number(traj.t[k]);
    for (int i = 0; i < traj.n; ++i) os << ',' << format_number(traj.x[k].q[i]);
    for (int i = 0; i < traj.n; ++i) os << ',' << format_number(traj.x[k].v[i]);
    for (int a = 0; a < traj.m; ++a) os << ',' << format_number(traj.lambda[k][a]);
    for (int a = 0; a < traj.m; ++a) os << ',' << format_number(traj.residual[k][a]);
    os << ',' << format_number(traj.energy[k]) << ',' << traj.newton_iters[k];
    for (int a = 0; a < traj.m; ++a) os << ',' << format_number(traj.deformed_residual[k][a]);
    os << "\r\n";
  }
}

}  // namespace nonholo
