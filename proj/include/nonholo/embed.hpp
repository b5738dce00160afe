#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "nonholo/discrete.hpp"
#include "nonholo/flow.hpp"

namespace nonholo {

/// Flat cut-off: 1 for tau <= 0, 0 for tau >= 1, (1 + tanh(cot(pi tau))) / 2 between.
double chi0(double tau);
double chi1(double tau);
double chi0_derivative(double tau);

/**
 * @brief Smooth curve in D joining x1 (t = 0) to x2 (t = eps).
 *
 * Configuration and base velocities are blended with chi0, chi1; fiber
 * velocities follow from the connection so every point lies on D.  All
 * derivatives vanish at both ends.
 */
class InterpolationCurve {
 public:
  InterpolationCurve(const MechanicalSystem& sys, ConnectionSplit split, StatePoint x1,
                     StatePoint x2, double eps);
  StatePoint operator()(double t) const;
  double eps() const { return eps_; }

 private:
  const MechanicalSystem* sys_;
  ConnectionSplit split_;
  StatePoint x1_, x2_;
  Vec vb1_, vb2_;
  double eps_;
};

/// Requires x1 and x2 on D to 1e-10.
InterpolationCurve interpolate_in_D(const MechanicalSystem& sys, const ConnectionSplit& split,
                                    const StatePoint& x1, const StatePoint& x2, double eps);

/// z -> Phi(eps, z), claimed to approximate the flow to order p.
struct OneStepMap {
  std::function<Vec(double eps, const Vec& z)> map;
  int order = 1;
};

/// Scheme expressed in reduced coordinates xi = (q, v_base).
OneStepMap reduced_scheme_map(const MechanicalSystem& sys, const ConnectionSplit& split,
                              SchemeKind kind);
/// Phi = F(eps, .) computed with RK4.
OneStepMap exact_flow_map(VectorField field, double max_step = 1e-4);

/**
 * @brief G(t, y) = chi0(t/eps) F(t, y) + chi1(t/eps) F(t - eps, Phi(eps, y)) on [0, eps],
 * continued by G(t, y) = G(t - k eps, Phi^k(y)) with k = floor(t / eps).
 */
class EvolutionInterpolant {
 public:
  EvolutionInterpolant(VectorField field, OneStepMap phi, double eps, double max_step = 1e-4);

  double eps() const { return eps_; }
  const OneStepMap& one_step() const { return phi_; }
  const VectorField& field() const { return field_; }

  Vec operator()(double t, const Vec& y) const;
  /// G~(tau, y) = G(eps tau, y).
  Vec scaled(double tau, const Vec& y) const;
  /// d/dtau of G~(tau, y).
  Vec scaled_tau_derivative(double tau, const Vec& y) const;
  Vec flow(double t, const Vec& y) const;

 private:
  /// Reduces tau to [0, 1) and applies Phi to y accordingly.
  std::pair<double, Vec> wrap(double tau, const Vec& y) const;

  VectorField field_;
  OneStepMap phi_;
  double eps_;
  double max_step_;
};

EvolutionInterpolant build_G(VectorField field, OneStepMap phi, double eps);

/**
 * Perturbation g(eps, tau, z) = eps^-p (-f(z) + eps^-1 dG~/dtau(tau, y)) where
 * G~(tau, y) = z.  y is found by Newton from z; throws ConvergenceError
 * if the inversion fails.
 */
Vec g_eval(const EvolutionInterpolant& G, int p, double tau, const Vec& z);

struct EmbeddingReport {
  double endpoint_mismatch = 0.0;
  double periodicity_defect = 0.0;
  std::optional<double> measured_p;  // empty when the local error is at the oracle floor
  double max_local_error = 0.0;
  int samples = 0;
};

struct EmbeddingOptions {
  int samples = 20;
  std::uint64_t seed = 42;
  double spread = 0.1;  // half-width of the sampling box around the base point
  int jobs = 1;
};

/// Sample-based checks of the embedding for the scheme around base point x0.
EmbeddingReport verify_embedding(const MechanicalSystem& sys, const ConnectionSplit& split,
                                 const OneStepMap& phi, const StatePoint& x0, double eps,
                                 const EmbeddingOptions& opts = {});

std::string to_json(const EmbeddingReport& report);

}  // namespace nonholo
