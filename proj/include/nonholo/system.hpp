#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonholo/expr/expression.hpp"
#include "nonholo/expr/function.hpp"
#include "nonholo/linalg.hpp"

namespace nonholo {

/// A point of TQ.
struct StatePoint {
  Vec q;
  Vec v;
};

/// Stacks (q, v) into one vector of length 2n.
Vec stack(const StatePoint& x);
StatePoint unstack(const Vec& y);

/// mu(q) together with its first derivatives; dmu[a](i, j) = d mu^a_i / d q^j.
struct ConstraintJet {
  Mat mu;
  std::vector<Mat> dmu;
};

/**
 * @brief Mechanical system with constant mass matrix and linear velocity constraints.
 *
 * L(q, v) = v^T M v / 2 - V(q), constraints mu(q) v = 0 with mu an m x n
 * matrix of expressions in the configuration names.
 */
class MechanicalSystem {
 public:
  static constexpr int kMaxDimension = 12;

  MechanicalSystem(std::vector<std::string> names, Mat mass, expr::Expression potential,
                   std::vector<std::vector<expr::Expression>> constraints,
                   std::vector<std::string> velocity_names = {});

  int dim() const { return n_; }
  int num_constraints() const { return m_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& velocity_names() const { return velocity_names_; }
  /// Configuration names followed by velocity names.
  std::vector<std::string> state_names() const;

  const Mat& mass() const { return mass_; }
  const Mat& mass_inverse() const { return mass_inv_; }
  const expr::Expression& potential_expr() const { return potential_.expression(); }
  const expr::Expression& constraint_expr(int a, int i) const {
    return mu_[a * n_ + i].expression();
  }
  bool potential_is_constant() const { return potential_.is_constant(); }

  double potential(const Vec& q) const;
  Vec potential_gradient(const Vec& q) const;
  Mat potential_hessian(const Vec& q) const;

  Mat constraint_matrix(const Vec& q) const;
  ConstraintJet constraint_jet(const Vec& q) const;

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<std::string> names_;
  std::vector<std::string> velocity_names_;
  Mat mass_;
  Mat mass_inv_;
  expr::Function potential_;
  std::vector<expr::Function> mu_;  // row-major m x n
};

/// x = (x, y, z), M = I, V = 0, mu = (-y, 0, 1).
MechanicalSystem nonholonomic_particle();

/// mu(q) v.
Vec constraint_residual(const MechanicalSystem& sys, const StatePoint& x);

struct CMatrix {
  Mat c;
  Mat c_inv;
  double condition = 1.0;
};

/// C = mu M^-1 mu^T.  Throws SingularMatrixError when the condition exceeds 1e12.
CMatrix c_matrix(const MechanicalSystem& sys, const Vec& q);
/// Same as c_matrix for an already evaluated mu.
CMatrix c_matrix_from(const Mat& mu, const Mat& mass_inverse);

/// M-orthogonal projection of v onto D_q.
Vec project_velocity(const MechanicalSystem& sys, const Vec& q, const Vec& v);

double energy(const MechanicalSystem& sys, const StatePoint& x);

/// dA/dq^j stored per j.
struct ConnectionJet {
  Mat a;
  std::vector<Mat> da;
};

/**
 * @brief Split of the coordinates into base and fiber indices.
 *
 * With B = mu[:, fiber] invertible the connection is A = B^-1 mu[:, base] and
 * D_q = { v : v_fiber = -A v_base }.
 */
struct ConnectionSplit {
  std::vector<int> base;
  std::vector<int> fiber;

  Mat connection(const MechanicalSystem& sys, const Vec& q) const;
  ConnectionJet connection_jet(const MechanicalSystem& sys, const Vec& q) const;
  /// B^-1 mu, with the identity in the fiber columns.
  Mat normalized_constraints(const MechanicalSystem& sys, const Vec& q) const;
  /// v with v_fiber replaced by -A(q) v_base.
  Vec complete_velocity(const MechanicalSystem& sys, const Vec& q, const Vec& v_base) const;
  Vec base_velocity(const Vec& v) const;
};

/**
 * Chooses the fiber columns.  With no explicit choice, every m-column subset
 * is scanned and the one maximizing |det B| at q0 wins, ties going to the
 * lexicographically last subset.
 */
ConnectionSplit derive_connection(const MechanicalSystem& sys, const Vec& q0,
                                  const std::optional<std::vector<int>>& fiber = std::nullopt);

/// Tolerance used for "x lies on D" preconditions.
inline constexpr double kOnDistributionTol = 1e-10;
inline constexpr double kSingularCondition = 1e12;

}  // namespace nonholo
