#include <cmath>

#include "nonholo/newton.hpp"

namespace nonholo {

NewtonResult newton_solve(const ResidualJacobian& fn, Vec x0, const NewtonOptions& opts) {
  NewtonResult out;
  out.x = std::move(x0);
  Vec F;
  Mat J;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    fn(out.x, F, &J);
    out.residual = max_abs(F);
    out.iterations = it;
    if (!std::isfinite(out.residual))
      throw ConvergenceError("Newton residual is not finite", it, out.residual);
    if (out.residual <= opts.tolerance) {
      Eigen::PartialPivLU<Mat> lu(J);
      const Vec polished = out.x - lu.solve(F);
      Vec Fp;
      fn(polished, Fp, nullptr);
      if (max_abs(Fp) < out.residual) {
        out.x = polished;
        out.residual = max_abs(Fp);
      }
      return out;
    }
    if (it == opts.max_iterations) break;
    Eigen::PartialPivLU<Mat> lu(J);
    const double rc = lu.rcond();
    out.condition = rc > 0.0 ? 1.0 / rc : INFINITY;
    if (out.condition > opts.max_condition)
      throw SingularMatrixError("Newton Jacobian is singular (condition estimate " +
                                    std::to_string(out.condition) + ")",
                                out.condition);
    out.x -= lu.solve(F);
  }
  throw ConvergenceError("Newton iteration did not converge in " +
                             std::to_string(opts.max_iterations) + " iterations (residual " +
                             std::to_string(out.residual) + ")",
                         out.iterations, out.residual);
}

}  // namespace nonholo
