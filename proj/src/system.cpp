#include <algorithm>
#include <cmath>
#include <set>

#include "nonholo/system.hpp"

namespace nonholo {

Vec stack(const StatePoint& x) {
  Vec y(x.q.size() + x.v.size());
  y << x.q, x.v;
  return y;
}

StatePoint unstack(const Vec& y) {
  const Eigen::Index n = y.size() / 2;
  return {y.head(n), y.tail(n)};
}

MechanicalSystem::MechanicalSystem(std::vector<std::string> names, Mat mass,
                                   expr::Expression potential,
                                   std::vector<std::vector<expr::Expression>> constraints,
                                   std::vector<std::string> velocity_names)
    : n_(static_cast<int>(names.size())),
      m_(static_cast<int>(constraints.size())),
      names_(std::move(names)),
      velocity_names_(std::move(velocity_names)),
      mass_(std::move(mass)) {
  if (n_ == 0) throw ConfigError("system has no coordinates");
  if (n_ > kMaxDimension)
    throw ConfigError("system dimension " + std::to_string(n_) + " exceeds the limit of " +
                      std::to_string(kMaxDimension));
  if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
    throw ConfigError("coordinate names must be unique");
  if (velocity_names_.empty())
    for (const auto& s : names_) velocity_names_.push_back("v_" + s);
  if (velocity_names_.size() != names_.size())
    throw ConfigError("need one velocity name per coordinate");
  auto all = state_names();
  if (std::set<std::string>(all.begin(), all.end()).size() != all.size())
    throw ConfigError("velocity names collide with coordinate names");
  if (mass_.rows() != n_ || mass_.cols() != n_)
    throw ConfigError("mass matrix must be " + std::to_string(n_) + "x" + std::to_string(n_));
  if (mass_ != mass_.transpose()) throw ConfigError("mass matrix is not symmetric");
  Eigen::LLT<Mat> llt(mass_);
  if (llt.info() != Eigen::Success || spd_condition(mass_) > kSingularCondition)
    throw ConfigError("mass matrix is not positive definite");
  mass_inv_ = llt.solve(Mat::Identity(n_, n_));
  mass_inv_ = (0.5 * (mass_inv_ + mass_inv_.transpose())).eval();
  if (m_ >= n_) throw ConfigError("need fewer constraints than coordinates");

  try {
    potential_ = expr::Function(potential, names_);
    for (const auto& row : constraints) {
      if (static_cast<int>(row.size()) != n_)
        throw ConfigError("each constraint row needs " + std::to_string(n_) + " entries");
      for (const auto& e : row) mu_.emplace_back(e, names_);
    }
  } catch (const expr::EvalError& e) {
    throw ConfigError(std::string("system expression: ") + e.what());
  }
}

std::vector<std::string> MechanicalSystem::state_names() const {
  std::vector<std::string> all = names_;
  all.insert(all.end(), velocity_names_.begin(), velocity_names_.end());
  return all;
}

double MechanicalSystem::potential(const Vec& q) const { return potential_(q); }

Vec MechanicalSystem::potential_gradient(const Vec& q) const {
  Vec g(n_);
  potential_.value_gradient(q, g);
  return g;
}

Mat MechanicalSystem::potential_hessian(const Vec& q) const { return potential_.hessian(q); }

Mat MechanicalSystem::constraint_matrix(const Vec& q) const {
  Mat mu(m_, n_);
  for (int a = 0; a < m_; ++a)
    for (int i = 0; i < n_; ++i) mu(a, i) = mu_[a * n_ + i](q);
  return mu;
}

ConstraintJet MechanicalSystem::constraint_jet(const Vec& q) const {
  ConstraintJet jet{Mat(m_, n_), std::vector<Mat>(m_, Mat::Zero(n_, n_))};
  Vec g(n_);
  for (int a = 0; a < m_; ++a)
    for (int i = 0; i < n_; ++i) {
      jet.mu(a, i) = mu_[a * n_ + i].value_gradient(q, g);
      jet.dmu[a].row(i) = g.transpose();
    }
  return jet;
}

MechanicalSystem nonholonomic_particle() {
  using namespace expr;
  return MechanicalSystem({"x", "y", "z"}, Mat::Identity(3, 3), number(0.0),
                          {{parse("-y"), number(0.0), number(1.0)}});
}

Vec constraint_residual(const MechanicalSystem& sys, const StatePoint& x) {
  return sys.constraint_matrix(x.q) * x.v;
}

CMatrix c_matrix_from(const Mat& mu, const Mat& mass_inverse) {
  CMatrix out;
  out.c = mu * mass_inverse * mu.transpose();
  out.c = (0.5 * (out.c + out.c.transpose())).eval();
  const auto m = out.c.rows();
  if (m == 0) {
    out.c_inv = Mat(0, 0);
    return out;
  }
  out.condition = spd_condition(out.c);
  if (!(out.condition <= kSingularCondition))
    throw SingularMatrixError("constraint matrix C = mu M^-1 mu^T is singular (condition " +
                                  std::to_string(out.condition) + ")",
                              out.condition);
  out.c_inv = out.c.llt().solve(Mat::Identity(m, m));
  return out;
}

CMatrix c_matrix(const MechanicalSystem& sys, const Vec& q) {
  return c_matrix_from(sys.constraint_matrix(q), sys.mass_inverse());
}

Vec project_velocity(const MechanicalSystem& sys, const Vec& q, const Vec& v) {
  const Mat mu = sys.constraint_matrix(q);
  if (mu.rows() == 0) return v;
  const CMatrix c = c_matrix_from(mu, sys.mass_inverse());
  return v - sys.mass_inverse() * mu.transpose() * (c.c_inv * (mu * v));
}

double energy(const MechanicalSystem& sys, const StatePoint& x) {
  return 0.5 * x.v.dot(sys.mass() * x.v) + sys.potential(x.q);
}

namespace {

Mat columns(const Mat& a, const std::vector<int>& idx) {
  Mat out(a.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = a.col(idx[k]);
  return out;
}

void check_fiber_block(const Mat& b) {
  const double cond = condition_number(b);
  if (!(cond <= kSingularCondition))
    throw SingularMatrixError("fiber block of the constraint matrix is singular (condition " +
                                  std::to_string(cond) + ")",
                              cond);
}

std::vector<int> complement(int n, const std::vector<int>& fiber) {
  std::vector<int> base;
  for (int i = 0; i < n; ++i)
    if (std::find(fiber.begin(), fiber.end(), i) == fiber.end()) base.push_back(i);
  return base;
}

}  // namespace

Mat ConnectionSplit::connection(const MechanicalSystem& sys, const Vec& q) const {
  const Mat mu = sys.constraint_matrix(q);
  const Mat b = columns(mu, fiber);
  check_fiber_block(b);
  return b.partialPivLu().solve(columns(mu, base));
}

ConnectionJet ConnectionSplit::connection_jet(const MechanicalSystem& sys, const Vec& q) const {
  const ConstraintJet jet = sys.constraint_jet(q);
  const Mat b = columns(jet.mu, fiber);
  check_fiber_block(b);
  const Eigen::PartialPivLU<Mat> lu(b);
  ConnectionJet out;
  out.a = lu.solve(columns(jet.mu, base));
  const int n = sys.dim(), m = sys.num_constraints();
  out.da.resize(n);
  for (int j = 0; j < n; ++j) {
    Mat db(m, m), dbase(m, static_cast<Eigen::Index>(base.size()));
    for (int a = 0; a < m; ++a) {
      for (std::size_t k = 0; k < fiber.size(); ++k) db(a, k) = jet.dmu[a](fiber[k], j);
      for (std::size_t k = 0; k < base.size(); ++k) dbase(a, k) = jet.dmu[a](base[k], j);
    }
    out.da[j] = lu.solve(dbase - db * out.a);
  }
  return out;
}

Mat ConnectionSplit::normalized_constraints(const MechanicalSystem& sys, const Vec& q) const {
  const Mat a = connection(sys, q);
  Mat out = Mat::Zero(sys.num_constraints(), sys.dim());
  for (std::size_t k = 0; k < base.size(); ++k) out.col(base[k]) = a.col(k);
  for (std::size_t k = 0; k < fiber.size(); ++k) out(k, fiber[k]) = 1.0;
  return out;
}

Vec ConnectionSplit::complete_velocity(const MechanicalSystem& sys, const Vec& q,
                                       const Vec& v_base) const {
  const Vec vf = -(connection(sys, q) * v_base);
  Vec v(sys.dim());
  for (std::size_t k = 0; k < base.size(); ++k) v[base[k]] = v_base[k];
  for (std::size_t k = 0; k < fiber.size(); ++k) v[fiber[k]] = vf[k];
  return v;
}

Vec ConnectionSplit::base_velocity(const Vec& v) const {
  Vec vb(static_cast<Eigen::Index>(base.size()));
  for (std::size_t k = 0; k < base.size(); ++k) vb[k] = v[base[k]];
  return vb;
}

ConnectionSplit derive_connection(const MechanicalSystem& sys, const Vec& q0,
                                  const std::optional<std::vector<int>>& fiber) {
  const int n = sys.dim(), m = sys.num_constraints();
  const Mat mu = sys.constraint_matrix(q0);
  if (fiber) {
    std::vector<int> f = *fiber;
    std::set<int> uniq(f.begin(), f.end());
    if (static_cast<int>(f.size()) != m || static_cast<int>(uniq.size()) != m ||
        std::any_of(f.begin(), f.end(), [n](int i) { return i < 0 || i >= n; }))
      throw ConfigError("fiber indices must be " + std::to_string(m) +
                        " distinct coordinate indices");
    check_fiber_block(columns(mu, f));
    return {complement(n, f), f};
  }

  std::vector<std::vector<int>> subsets;
  std::vector<double> dets;
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  while (true) {
    subsets.push_back(idx);
    dets.push_back(m == 0 ? 1.0 : std::fabs(columns(mu, idx).partialPivLu().determinant()));
    int i = m - 1;
    while (i >= 0 && idx[i] == n - m + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
  const double best = *std::max_element(dets.begin(), dets.end());
  std::size_t pick = 0;
  for (std::size_t k = 0; k < subsets.size(); ++k)
    if (dets[k] >= best * (1.0 - 1e-12)) pick = k;
  check_fiber_block(columns(mu, subsets[pick]));
  return {complement(n, subsets[pick]), subsets[pick]};
}

}  // namespace nonholo
