#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"

#include "nonholo/embed.hpp"
#include "nonholo/parallel.hpp"

namespace nonholo {

double chi0(double tau) {
  if (tau <= 0.0) return 1.0;
  if (tau >= 1.0) return 0.0;
  const double a = std::numbers::pi * tau;
  return 0.5 * (1.0 + std::tanh(std::cos(a) / std::sin(a)));
}

double chi1(double tau) { return 1.0 - chi0(tau); }

double chi0_derivative(double tau) {
  if (tau <= 0.0 || tau >= 1.0) return 0.0;
  const double a = std::numbers::pi * tau;
  const double c = std::cos(a) / std::sin(a);
  if (std::fabs(c) > 300.0) return 0.0;
  const double sech = 1.0 / std::cosh(c);
  return -0.5 * std::numbers::pi * sech * sech * (1.0 + c * c);
}

InterpolationCurve::InterpolationCurve(const MechanicalSystem& sys, ConnectionSplit split,
                                       StatePoint x1, StatePoint x2, double eps)
    : sys_(&sys), split_(std::move(split)), x1_(std::move(x1)), x2_(std::move(x2)), eps_(eps) {
  vb1_ = split_.base_velocity(x1_.v);
  vb2_ = split_.base_velocity(x2_.v);
}

StatePoint InterpolationCurve::operator()(double t) const {
  if (t <= 0.0) return x1_;
  if (t >= eps_) return x2_;
  const double tau = t / eps_;
  const double a = chi0(tau), b = chi1(tau);
  StatePoint x;
  x.q = a * x1_.q + b * x2_.q;
  x.v = split_.complete_velocity(*sys_, x.q, a * vb1_ + b * vb2_);
  return x;
}

InterpolationCurve interpolate_in_D(const MechanicalSystem& sys, const ConnectionSplit& split,
                                    const StatePoint& x1, const StatePoint& x2, double eps) {
  if (!(eps > 0.0)) throw ConfigError("interpolation length must be positive");
  for (const StatePoint* x : {&x1, &x2}) {
    const double r = max_abs(constraint_residual(sys, *x));
    if (!(r <= kOnDistributionTol))
      throw PreconditionError("interpolation endpoint is off the constraint distribution (residual " +
                              std::to_string(r) + ")");
  }
  return InterpolationCurve(sys, split, x1, x2, eps);
}

OneStepMap reduced_scheme_map(const MechanicalSystem& sys, const ConnectionSplit& split,
                              SchemeKind kind) {
  if (kind != SchemeKind::Vni10 && kind != SchemeKind::Vni20)
    throw ConfigError("embedding supports the vni10 and vni20 schemes");
  OneStepMap out;
  out.order = kind == SchemeKind::Vni10 ? 1 : 2;
  out.map = [&sys, split, kind](double eps, const Vec& xi) {
    const StatePoint x = unstack(psi_embed(sys, split, xi));
    const SchemeStep s = kind == SchemeKind::Vni10 ? vni10_step(sys, x, eps) : vni20_step(sys, x, eps);
    return psi_project(split, s.x);
  };
  return out;
}

OneStepMap exact_flow_map(VectorField field, double max_step) {
  OneStepMap out;
  out.map = [field = std::move(field), max_step](double eps, const Vec& z) {
    return reference_flow(field, z, eps, max_step);
  };
  return out;
}

EvolutionInterpolant::EvolutionInterpolant(VectorField field, OneStepMap phi, double eps,
                                           double max_step)
    : field_(std::move(field)), phi_(std::move(phi)), eps_(eps), max_step_(max_step) {
  if (!(eps > 0.0)) throw ConfigError("step size must be positive");
}

Vec EvolutionInterpolant::flow(double t, const Vec& y) const {
  return reference_flow(field_, y, t, max_step_);
}

std::pair<double, Vec> EvolutionInterpolant::wrap(double tau, const Vec& y) const {
  if (!(tau >= 0.0)) throw PreconditionError("interpolant is defined for t >= 0");
  const double k = std::floor(tau);
  Vec z = y;
  for (long i = 0; i < static_cast<long>(k); ++i) z = phi_.map(eps_, z);
  return {tau - k, z};
}

Vec EvolutionInterpolant::scaled(double tau, const Vec& y) const {
  const auto [s, z] = wrap(tau, y);
  const double a = chi0(s), b = chi1(s);
  Vec out = Vec::Zero(z.size());
  if (a != 0.0) out += a * flow(eps_ * s, z);
  if (b != 0.0) out += b * flow(eps_ * s - eps_, phi_.map(eps_, z));
  return out;
}

Vec EvolutionInterpolant::operator()(double t, const Vec& y) const { return scaled(t / eps_, y); }

Vec EvolutionInterpolant::scaled_tau_derivative(double tau, const Vec& y) const {
  const auto [s, z] = wrap(tau, y);
  const Vec fa = flow(eps_ * s, z);
  const Vec fb = flow(eps_ * s - eps_, phi_.map(eps_, z));
  const double a = chi0(s), b = chi1(s);
  return chi0_derivative(s) * (fa - fb) + eps_ * (a * field_(fa) + b * field_(fb));
}

EvolutionInterpolant build_G(VectorField field, OneStepMap phi, double eps) {
  return EvolutionInterpolant(std::move(field), std::move(phi), eps);
}

namespace {

/// Solves G~(tau, y) = z by a chord iteration with a forward-difference Jacobian.
Vec invert_interpolant(const EvolutionInterpolant& G, double tau, const Vec& z) {
  constexpr double kTol = 1e-13;
  constexpr double kFloor = 1e-11;
  constexpr int kMaxIter = 50;
  const auto d = z.size();
  auto jacobian = [&](const Vec& y, const Vec& gy) {
    Mat J(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      Vec yp = y;
      const double h = 1e-7 * std::max(1.0, std::fabs(y[j]));
      yp[j] += h;
      J.col(j) = (G.scaled(tau, yp) - gy) / (yp[j] - y[j]);
    }
    return Eigen::PartialPivLU<Mat>(J);
  };
  Vec y = z;
  Vec r = G.scaled(tau, y) - z;
  auto lu = jacobian(y, r + z);
  double res = max_abs(r), prev = INFINITY;
  for (int it = 0; it < kMaxIter; ++it) {
    if (res <= kTol) return y;
    if (res <= kFloor && res > 0.5 * prev) return y;
    if (res > 0.5 * prev) lu = jacobian(y, r + z);
    const Vec step = lu.solve(r);
    const Vec y_next = y - step;
    const Vec r_next = G.scaled(tau, y_next) - z;
    const double res_next = max_abs(r_next);
    if (!std::isfinite(res_next)) break;
    if (res_next >= res && res <= kFloor) return y;
    prev = res;
    y = y_next;
    r = r_next;
    res = res_next;
  }
  if (res <= kFloor) return y;
  throw ConvergenceError("could not invert the evolution interpolant (residual " +
                             std::to_string(res) + ")",
                         kMaxIter, res);
}

}  // namespace

Vec g_eval(const EvolutionInterpolant& G, int p, double tau, const Vec& z) {
  const Vec y = invert_interpolant(G, tau, z);
  const double eps = G.eps();
  return (-G.field()(z) + G.scaled_tau_derivative(tau, y) / eps) / std::pow(eps, p);
}

EmbeddingReport verify_embedding(const MechanicalSystem& sys, const ConnectionSplit& split,
                                 const OneStepMap& phi, const StatePoint& x0, double eps,
                                 const EmbeddingOptions& opts) {
  const VectorField field = make_reduced_field(sys, split);
  const EvolutionInterpolant G(field, phi, eps);
  const Vec xi0 = psi_project(split, x0);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> box(-1.0, 1.0), phase(0.05, 0.95);
  std::vector<Vec> ys;
  std::vector<double> taus;
  for (int s = 0; s < opts.samples; ++s) {
    Vec y = xi0;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += opts.spread * box(rng);
    ys.push_back(y);
    taus.push_back(phase(rng));
  }

  struct SampleResult {
    double endpoint = 0.0;
    double periodicity = 0.0;
    std::vector<double> local;
  };
  constexpr int kLevels = 6;
  auto per_sample = [&](std::size_t s) {
    SampleResult r;
    const Vec& y = ys[s];
    r.endpoint = max_abs(G(eps, y) - phi.map(eps, y));
    const Vec z = G.scaled(taus[s], y);
    const Vec g0 = g_eval(G, phi.order, taus[s], z);
    const Vec g1 = g_eval(G, phi.order, taus[s] + 1.0, z);
    r.periodicity = max_abs(g1 - g0);
    for (int j = 0; j < kLevels; ++j) {
      const double e = eps * std::ldexp(1.0, -j);
      r.local.push_back(max_abs(phi.map(e, y) - reference_flow(field, y, e)));
    }
    return r;
  };
  const auto results = map_indices(ys.size(), per_sample, opts.jobs);

  EmbeddingReport rep;
  rep.samples = opts.samples;
  std::vector<double> levels(kLevels, 0.0), step(kLevels);
  for (const auto& r : results) {
    rep.endpoint_mismatch = std::max(rep.endpoint_mismatch, r.endpoint);
    rep.periodicity_defect = std::max(rep.periodicity_defect, r.periodicity);
    for (int j = 0; j < kLevels; ++j) levels[j] = std::max(levels[j], r.local[j]);
  }
  for (int j = 0; j < kLevels; ++j) step[j] = eps * std::ldexp(1.0, -j);
  rep.max_local_error = *std::max_element(levels.begin(), levels.end());
  std::vector<double> xs, es;
  for (int j = 0; j < kLevels; ++j)
    if (levels[j] > 1e-12) {
      xs.push_back(step[j]);
      es.push_back(levels[j]);
    }
  if (xs.size() >= 3) rep.measured_p = loglog_slope(xs, es) - 1.0;
  return rep;
}

std::string to_json(const EmbeddingReport& report) {
  nlohmann::json j;
  j["endpoint_mismatch"] = report.endpoint_mismatch;
  j["periodicity_defect"] = report.periodicity_defect;
  j["measured_p"] = report.measured_p ? nlohmann::json(*report.measured_p) : nlohmann::json();
  j["max_local_error"] = report.max_local_error;
  j["samples"] = report.samples;
  return j.dump(2);
}

}  // namespace nonholo
