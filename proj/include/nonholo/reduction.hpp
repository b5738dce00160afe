#pragma once

#include <functional>

#include "nonholo/system.hpp"

namespace nonholo {

/// Multipliers on D from the closed formula with C^-1.  Requires mu v = 0 to 1e-10.
Vec lambda_continuous(const MechanicalSystem& sys, const StatePoint& x);
/// Same formula without the on-D check; it defines the natural extension off D.
Vec lambda_formula(const MechanicalSystem& sys, const StatePoint& x);
/// Multipliers from the tangency conditions solved directly with a general LU.
Vec lambda_from_tangency(const MechanicalSystem& sys, const StatePoint& x);

/// The vector field (v, -M^-1 grad V + M^-1 mu^T lambda) on D, stacked (q, v).
Vec h_field(const MechanicalSystem& sys, const StatePoint& x);
/// h without the on-D check; optionally reports the multipliers used.
Vec h_field_unchecked(const MechanicalSystem& sys, const StatePoint& x, Vec* lambda = nullptr);

/// (grad_q phi, grad_v phi) for phi = mu(q) v, one row per constraint.
Mat constraint_gradient(const MechanicalSystem& sys, const StatePoint& x);

/// Reduced coordinates xi = (q, v_base), v_base in split.base order.
Vec psi_embed(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi);
/// Jacobian of psi at xi, rows in (q, v) order.
Mat grad_psi(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi);
/// Selection of the (q, v_base) rows: a left inverse of grad_psi.
Mat psi_pseudo_inverse(const MechanicalSystem& sys, const ConnectionSplit& split);
Vec psi_project(const ConnectionSplit& split, const StatePoint& x);
/// Select(h(psi(xi))).
Vec reduced_field(const MechanicalSystem& sys, const ConnectionSplit& split, const Vec& xi);

/// Time-dependent perturbation eps^p * g_hat(eps, t / eps, x) of the vector field.
struct Perturbation {
  std::function<Vec(double eps, double tau, const StatePoint& x)> g_hat;
  int order = 1;
  double eps = 0.0;
};

Vec perturbed_lambda(const MechanicalSystem& sys, const StatePoint& x, const Perturbation& p,
                     double t);
/// The perturbed field, tangent to D by construction.
Vec perturbed_field(const MechanicalSystem& sys, const StatePoint& x, const Perturbation& p,
                    double t);
/// Variant that keeps only the q-component of g_hat.  Diagnostic use only.
Vec perturbed_field_q_only(const MechanicalSystem& sys, const StatePoint& x,
                           const Perturbation& p, double t);
/// |perturbed_field - perturbed_field_q_only|.
double perturbation_variant_gap(const MechanicalSystem& sys, const StatePoint& x,
                                const Perturbation& p, double t);

/**
 * @brief Deformed constraint mu(q) v + delta g(q, v) = 0.
 *
 * g has one expression per constraint, over configuration and velocity names.
 */
class Deformation {
 public:
  Deformation(const MechanicalSystem& sys, std::vector<expr::Expression> g, double delta);

  double delta() const { return delta_; }
  int size() const { return static_cast<int>(g_.size()); }
  Vec value(const StatePoint& x) const;
  /// m x 2n Jacobian (d/dq, d/dv).
  Mat jacobian(const StatePoint& x) const;

 private:
  std::vector<expr::Function> g_;
  double delta_;
};

Vec deformed_residual(const MechanicalSystem& sys, const Deformation& d, const StatePoint& x);
CMatrix deformed_c_matrix(const MechanicalSystem& sys, const Deformation& d, const StatePoint& x);
/// Requires the deformed residual to vanish to 1e-10.
Vec deformed_field(const MechanicalSystem& sys, const Deformation& d, const StatePoint& x);
Vec deformed_field_unchecked(const MechanicalSystem& sys, const Deformation& d,
                             const StatePoint& x, Vec* lambda = nullptr);

}  // namespace nonholo
