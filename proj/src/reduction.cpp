#include <cmath>

#include "nonholo/reduction.hpp"

namespace nonholo {

namespace {

void require_on_distribution(const MechanicalSystem& sys, const StatePoint& x) {
  const double r = max_abs(constraint_residual(sys, x));
  if (!(r <= kOnDistributionTol))
    throw PreconditionError("state is off the constraint distribution (residual " +
                            std::to_string(r) + ")");
}

/// Rows grad_q phi^a = dmu[a]^T v.
Mat grad_q_phi(const ConstraintJet& jet, const Vec& v) {
  const auto m = jet.mu.rows(), n = jet.mu.cols();
  Mat g(m, n);
  for (Eigen::Index a = 0; a < m; ++a) g.row(a) = (jet.dmu[a].transpose() * v).transpose();
  return g;
}

/// Unconstrained acceleration -M^-1 grad V.
Vec free_acceleration(const MechanicalSystem& sys, const Vec& q) {
  if (sys.potential_is_constant()) return Vec::Zero(sys.dim());
  return -(sys.mass_inverse() * sys.potential_gradient(q));
}

}  // namespace

Mat constraint_gradient(const MechanicalSystem& sys, const StatePoint& x) {
  const ConstraintJet jet = sys.constraint_jet(x.q);
  Mat g(sys.num_constraints(), 2 * sys.dim());
  g << grad_q_phi(jet, x.v), jet.mu;
  return g;
}

Vec lambda_formula(const MechanicalSystem& sys, const StatePoint& x) {
  const ConstraintJet jet = sys.constraint_jet(x.q);
  const int m = sys.num_constraints();
  const Vec a = free_acceleration(sys, x.q);
  Vec rhs(m);
  for (int b = 0; b < m; ++b) rhs[b] = x.v.dot(jet.dmu[b] * x.v) + jet.mu.row(b).dot(a);
  const CMatrix c = c_matrix_from(jet.mu, sys.mass_inverse());
  return -(c.c_inv * rhs);
}

Vec lambda_continuous(const MechanicalSystem& sys, const StatePoint& x) {
  require_on_distribution(sys, x);
  return lambda_formula(sys, x);
}

Vec lambda_from_tangency(const MechanicalSystem& sys, const StatePoint& x) {
  require_on_distribution(sys, x);
  const int n = sys.dim(), m = sys.num_constraints();
  const Mat grad = constraint_gradient(sys, x);
  Vec f(2 * n);
  f << x.v, free_acceleration(sys, x.q);
  Mat k(m, m);
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const Vec pushed = sys.mass_inverse() * grad.block(a, n, 1, n).transpose();
      const Vec row_b = grad.block(b, n, 1, n).transpose();
      k(b, a) = row_b.dot(pushed);
    }
  const Vec rhs = -(grad * f);
  Eigen::FullPivLU<Mat> lu(k);
  if (m > 0 && !lu.isInvertible())
    throw SingularMatrixError("tangency system is singular", INFINITY);
  return lu.solve(rhs);
}

Vec h_field_unchecked(const MechanicalSystem& sys, const StatePoint& x, Vec* lambda) {
  const int n = sys.dim(), m = sys.num_constraints();
  const ConstraintJet jet = sys.constraint_jet(x.q);
  const Vec a = free_acceleration(sys, x.q);
  Vec rhs(m);
  for (int b = 0; b < m; ++b) rhs[b] = x.v.dot(jet.dmu[b] * x.v) + jet.mu.row(b).dot(a);
  const CMatrix c = c_matrix_from(jet.mu, sys.mass_inverse());
  const Vec lam = -(c.c_inv * rhs);
  Vec out(2 * n);
  out << x.v, a + sys.mass_inverse() * (jet.mu.transpose() * lam);
  if (lambda) *lambda = lam;
  return out;
}

Vec h_field(const MechanicalSystem& sys, const StatePoint& x) {
  require_on_distribution(sys, x);
  return h_field_unchecked(sys, x);
}

Vec psi_embed(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi) {
  const int n = sys.dim();
  const Vec q = xi.head(n);
  Vec out(2 * n);
  out << q, split.complete_velocity(sys, q, xi.tail(xi.size() - n));
  return out;
}

Mat grad_psi(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi) {
  const int n = sys.dim();
  const int r = n - sys.num_constraints();
  const Vec q = xi.head(n);
  const Vec vb = xi.tail(r);
  const ConnectionJet jet = split.connection_jet(sys, q);
  Mat g = Mat::Zero(2 * n, n + r);
  g.topLeftCorner(n, n).setIdentity();
  for (int k = 0; k < r; ++k) g(n + split.base[k], n + k) = 1.0;
  for (std::size_t a = 0; a < split.fiber.size(); ++a) {
    const int row = n + split.fiber[a];
    for (int j = 0; j < n; ++j) g(row, j) = -jet.da[j].row(a).dot(vb);
    g.block(row, n, 1, r) = -jet.a.row(a);
  }
  return g;
}

Mat psi_pseudo_inverse(const MechanicalSystem& sys, const ConnectionSplit& split) {
  const int n = sys.dim();
  const int r = n - sys.num_constraints();
  Mat p = Mat::Zero(n + r, 2 * n);
  p.topLeftCorner(n, n).setIdentity();
  for (int k = 0; k < r; ++k) p(n + k, n + split.base[k]) = 1.0;
  return p;
}

Vec psi_project(const ConnectionSplit& split, const StatePoint& x) {
  const Vec vb = split.base_velocity(x.v);
  Vec xi(x.q.size() + vb.size());
  xi << x.q, vb;
  return xi;
}

Vec reduced_field(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi) {
  const Vec h = h_field_unchecked(sys, unstack(psi_embed(sys, split, xi)));
  return psi_project(split, unstack(h));
}

namespace {

struct PerturbationTerms {
  Vec lambda;
  Vec g_hat;
  Vec correction;  // C^-1 <grad phi, g_hat>
  Vec correction_q_only;
  Mat mu;
  double scale = 0.0;
};

PerturbationTerms perturbation_terms(const MechanicalSystem& sys, const StatePoint& x,
                                     const Perturbation& p, double t) {
  const int n = sys.dim();
  PerturbationTerms out;
  const ConstraintJet jet = sys.constraint_jet(x.q);
  out.mu = jet.mu;
  out.lambda = lambda_formula(sys, x);
  const int m = sys.num_constraints();
  out.correction = Vec::Zero(m);
  out.correction_q_only = Vec::Zero(m);
  out.g_hat = Vec::Zero(2 * n);
  if (p.eps == 0.0) return out;
  out.scale = std::pow(p.eps, p.order);
  out.g_hat = p.g_hat(p.eps, t / p.eps, x);
  if (out.g_hat.size() != 2 * n) throw ConfigError("perturbation must have length 2n");
  const CMatrix c = c_matrix_from(jet.mu, sys.mass_inverse());
  const Mat gq = grad_q_phi(jet, x.v);
  const Vec sq = gq * out.g_hat.head(n);
  out.correction = c.c_inv * (sq + jet.mu * out.g_hat.tail(n));
  out.correction_q_only = c.c_inv * sq;
  return out;
}

}  // namespace

Vec perturbed_lambda(const MechanicalSystem& sys, const StatePoint& x, const Perturbation& p,
                     double t) {
  require_on_distribution(sys, x);
  const PerturbationTerms k = perturbation_terms(sys, x, p, t);
  if (p.eps == 0.0) return k.lambda;
  return k.lambda - k.scale * k.correction;
}

Vec perturbed_field(const MechanicalSystem& sys, const StatePoint& x, const Perturbation& p,
                    double t) {
  require_on_distribution(sys, x);
  const PerturbationTerms k = perturbation_terms(sys, x, p, t);
  const Vec lam = k.lambda - k.scale * k.correction;
  Vec out(2 * sys.dim());
  out << x.v, free_acceleration(sys, x.q) + sys.mass_inverse() * (k.mu.transpose() * lam);
  return out + k.scale * k.g_hat;
}

Vec perturbed_field_q_only(const MechanicalSystem& sys, const StatePoint& x,
                           const Perturbation& p, double t) {
  require_on_distribution(sys, x);
  const int n = sys.dim();
  const PerturbationTerms k = perturbation_terms(sys, x, p, t);
  const Vec lam = k.lambda - k.scale * k.correction_q_only;
  Vec out(2 * n);
  out << x.v + k.scale * k.g_hat.head(n),
      free_acceleration(sys, x.q) + sys.mass_inverse() * (k.mu.transpose() * lam);
  return out;
}

double perturbation_variant_gap(const MechanicalSystem& sys, const StatePoint& x,
                                const Perturbation& p, double t) {
  return max_abs(perturbed_field(sys, x, p, t) - perturbed_field_q_only(sys, x, p, t));
}

Deformation::Deformation(const MechanicalSystem& sys, std::vector<expr::Expression> g,
                         double delta)
    : delta_(delta) {
  if (static_cast<int>(g.size()) != sys.num_constraints())
    throw ConfigError("deformation needs one expression per constraint");
  try {
    const auto names = sys.state_names();
    for (const auto& e : g) g_.emplace_back(e, names);
  } catch (const expr::EvalError& e) {
    throw ConfigError(std::string("deformation expression: ") + e.what());
  }
}

Vec Deformation::value(const StatePoint& x) const {
  const Vec s = stack(x);
  Vec out(size());
  for (int a = 0; a < size(); ++a) out[a] = g_[a](s);
  return out;
}

Mat Deformation::jacobian(const StatePoint& x) const {
  const Vec s = stack(x);
  Mat out(size(), s.size());
  Vec grad(s.size());
  for (int a = 0; a < size(); ++a) {
    g_[a].value_gradient(s, grad);
    out.row(a) = grad.transpose();
  }
  return out;
}

Vec deformed_residual(const MechanicalSystem& sys, const Deformation& d, const StatePoint& x) {
  return constraint_residual(sys, x) + d.delta() * d.value(x);
}

CMatrix deformed_c_matrix(const MechanicalSystem& sys, const Deformation& d,
                          const StatePoint& x) {
  const int n = sys.dim();
  const Mat w = sys.constraint_matrix(x.q) + d.delta() * d.jacobian(x).rightCols(n);
  return c_matrix_from(w, sys.mass_inverse());
}

Vec deformed_field_unchecked(const MechanicalSystem& sys, const Deformation& d,
                             const StatePoint& x, Vec* lambda) {
  const int n = sys.dim();
  const ConstraintJet jet = sys.constraint_jet(x.q);
  const Mat dg = d.jacobian(x);
  const Mat gq = grad_q_phi(jet, x.v) + d.delta() * dg.leftCols(n);
  const Mat w = jet.mu + d.delta() * dg.rightCols(n);
  const Vec a = free_acceleration(sys, x.q);
  const CMatrix c = c_matrix_from(w, sys.mass_inverse());
  const Vec lam = -(c.c_inv * (gq * x.v + w * a));
  Vec out(2 * n);
  out << x.v, a + sys.mass_inverse() * (w.transpose() * lam);
  if (lambda) *lambda = lam;
  return out;
}

Vec deformed_field(const MechanicalSystem& sys, const Deformation& d, const StatePoint& x) {
  const double r = max_abs(deformed_residual(sys, d, x));
  if (!(r <= kOnDistributionTol))
    throw PreconditionError("state is off the deformed constraint (residual " +
                            std::to_string(r) + ")");
  return deformed_field_unchecked(sys, d, x);
}

}  // namespace nonholo
