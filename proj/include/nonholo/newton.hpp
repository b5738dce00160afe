#pragma once

#include <functional>

#include "nonholo/error.hpp"
#include "nonholo/linalg.hpp"

namespace nonholo {

struct NewtonOptions {
  double tolerance = 1e-12;  // max-norm of the residual
  int max_iterations = 50;
  double max_condition = 1e12;
};

struct NewtonResult {
  Vec x;
  int iterations = 0;
  double residual = 0.0;
  double condition = 1.0;  // of the Jacobian at the last factorization
};

/// Fills F(x) and, when J is non-null, the Jacobian dF/dx.
using ResidualJacobian = std::function<void(const Vec& x, Vec& F, Mat* J)>;

/**
 * Dense Newton iteration with partial-pivot LU.  After the tolerance is met a
 * single polishing step is taken and kept only if it lowers the residual.
 *
 * Throws SingularMatrixError when the Jacobian condition estimate exceeds
 * max_condition and ConvergenceError after max_iterations.
 */
NewtonResult newton_solve(const ResidualJacobian& fn, Vec x0, const NewtonOptions& opts = {});

}  // namespace nonholo
