#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "nonholo/parallel.hpp"
#include "nonholo/sweep.hpp"

namespace nonholo {

namespace {

long steps_exact(double T, double eps) {
  const double ratio = T / eps;
  const double r = std::round(ratio);
  if (std::fabs(ratio - r) > 1e-9 * std::max(1.0, r))
    throw ConfigError("T must be an integer multiple of every step size");
  return static_cast<long>(r);
}

StudyResult summarize(std::vector<StudyRow> rows) {
  StudyResult out;
  out.rows = std::move(rows);
  std::vector<double> e, se, le, re;
  for (const auto& r : out.rows) {
    if (!r.ok) continue;
    e.push_back(r.eps);
    se.push_back(r.state_error);
    le.push_back(r.lambda_error);
    re.push_back(r.max_residual);
  }
  if (e.size() < 4) return out;
  auto positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
  };
  if (positive(se)) out.state_slope = loglog_slope(e, se);
  if (positive(le)) out.lambda_slope = loglog_slope(e, le);
  if (positive(re)) out.residual_slope = loglog_slope(e, re);
  return out;
}

}  // namespace

StatePoint study_oracle(const MechanicalSystem& sys, const StudyConfig& cfg) {
  if (cfg.eps.empty()) throw ConfigError("empty step-size list");
  if (cfg.integrator.reference) return cfg.x0;
  const double finest = *std::min_element(cfg.eps.begin(), cfg.eps.end());
  return unstack(reference_flow(make_h_field(sys), stack(cfg.x0), cfg.T,
                                std::min(1e-4, finest / 100.0)));
}

StudyRow study_row(const MechanicalSystem& sys, const StudyConfig& cfg, double eps,
                   const StatePoint& oracle) {
  StudyRow row;
  row.eps = eps;
  try {
    row.steps = steps_exact(cfg.T, eps);
    StatePoint end;
    StatePoint ref = oracle;
    if (cfg.integrator.reference) {
      const VectorField f = make_h_field(sys);
      const Trajectory tr = integrate(sys, f, cfg.x0, cfg.T, eps);
      end = tr.x.back();
      ref = unstack(reference_flow(f, stack(cfg.x0), cfg.T, eps / 2.0));
      for (std::size_t k = 0; k < tr.size(); ++k) {
        row.max_residual = std::max(row.max_residual, max_abs(tr.residual[k]));
        row.energy_drift = std::max(row.energy_drift, std::fabs(tr.energy[k] - tr.energy[0]));
      }
      row.lambda_error = max_abs(tr.lambda.back() - lambda_formula(sys, ref));
    } else {
      const ConnectionSplit split = derive_connection(sys, cfg.x0.q, cfg.fiber);
      const IntegratorSpec& spec = cfg.integrator.spec;
      const StatePoint start = admissible_initial_state(spec, sys, split, cfg.x0, eps);
      const DiscreteTrajectory tr = run_integrator(spec, sys, start, eps, row.steps);
      end = tr.x.back();
      for (std::size_t k = 0; k < tr.size(); ++k) {
        row.max_residual = std::max(row.max_residual, max_abs(tr.residual[k]));
        row.max_deformed_residual =
            std::max(row.max_deformed_residual, max_abs(tr.deformed_residual[k]));
        row.energy_drift = std::max(row.energy_drift, std::fabs(tr.energy[k] - tr.energy[0]));
      }
      row.lambda_error = max_abs(tr.lambda.back() - lambda_formula(sys, ref));
    }
    row.q_error = max_abs(end.q - ref.q);
    row.v_error = max_abs(end.v - ref.v);
    row.state_error = std::max(row.q_error, row.v_error);
    row.ok = true;
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

StudyResult converge_serial(const MechanicalSystem& sys, const StudyConfig& cfg) {
  const StatePoint oracle = study_oracle(sys, cfg);
  return summarize(
      map_serial(cfg.eps.size(), [&](std::size_t i) { return study_row(sys, cfg, cfg.eps[i], oracle); }));
}

StudyResult converge_parallel(const MechanicalSystem& sys, const StudyConfig& cfg, int jobs) {
  const StatePoint oracle = study_oracle(sys, cfg);
  return summarize(map_parallel(
      cfg.eps.size(), [&](std::size_t i) { return study_row(sys, cfg, cfg.eps[i], oracle); }, jobs));
}

namespace {

double tangency_defect(const MechanicalSystem& sys, const StatePoint& x) {
  return max_abs(constraint_gradient(sys, x) * h_field(sys, x));
}

}  // namespace

double max_tangency_defect_serial(const MechanicalSystem& sys, const std::vector<StatePoint>& xs) {
  const auto d = map_serial(xs.size(), [&](std::size_t i) { return tangency_defect(sys, xs[i]); });
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double max_tangency_defect_parallel(const MechanicalSystem& sys,
                                    const std::vector<StatePoint>& xs, int jobs) {
  const auto d =
      map_parallel(xs.size(), [&](std::size_t i) { return tangency_defect(sys, xs[i]); }, jobs);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

std::vector<StatePoint> sample_on_distribution(const MechanicalSystem& sys,
                                               const ConnectionSplit& split, const Vec& center,
                                               double half_width, int count,
                                               unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = sys.dim();
  const int r = n - sys.num_constraints();
  std::vector<StatePoint> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    Vec q(n), vb(r);
    for (int i = 0; i < n; ++i) q[i] = center[i] + half_width * u(rng);
    for (int i = 0; i < r; ++i) vb[i] = u(rng);
    out.push_back({q, split.complete_velocity(sys, q, vb)});
  }
  return out;
}

std::string to_json(const StudyResult& result, const StudyConfig& cfg) {
  nlohmann::json j;
  j["integrator"] = cfg.integrator.reference ? "reference" : scheme_name(cfg.integrator.spec.kind);
  j["T"] = cfg.T;
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row{{"eps", r.eps}, {"steps", r.steps}, {"ok", r.ok}};
    if (r.ok) {
      row["state_error"] = r.state_error;
      row["q_error"] = r.q_error;
      row["v_error"] = r.v_error;
      row["lambda_error"] = r.lambda_error;
      row["max_residual"] = r.max_residual;
      row["max_deformed_residual"] = r.max_deformed_residual;
      row["energy_drift"] = r.energy_drift;
    } else {
      row["error"] = r.error;
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  j["state_slope"] = opt(result.state_slope);
  j["lambda_slope"] = opt(result.lambda_slope);
  j["residual_slope"] = opt(result.residual_slope);
  return j.dump(2);
}

}  // namespace nonholo
