#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nonholo/cli/commands.hpp"
#include "nonholo/cli/config.hpp"
#include "nonholo/embed.hpp"
#include "nonholo/sweep.hpp"

namespace nonholo::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::string eps_list;
  int jobs = 1;
};

int default_jobs() {
  if (const char* env = std::getenv("NONHOLO_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  return 1;
}

std::ofstream open_output(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  const fs::path path = fs::path(o.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  return f;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// x0 on D, projected if the config asks for it.
StatePoint initial_on_distribution(const RunConfig& c) {
  const double r = max_abs(constraint_residual(*c.system, c.x0));
  if (r <= kOnDistributionTol) return c.x0;
  if (!c.project_initial)
    throw PreconditionError("initial velocity is off the constraint distribution (residual " +
                            std::to_string(r) + "); set project_initial to project it");
  return {c.x0.q, project_velocity(*c.system, c.x0.q, c.x0.v)};
}

int simulate(const RunConfig& c, const Options& o, std::ostream& out) {
  const MechanicalSystem& sys = *c.system;
  if (!(c.eps > 0.0)) throw ConfigError("config field 'eps': missing");
  json summary{{"integrator", c.integrator}, {"eps", c.eps}, {"steps", c.steps}, {"T", c.T}};

  if (c.is_reference()) {
    std::optional<Deformation> def;
    StatePoint x0 = c.x0;
    VectorField field;
    if (c.deformation) {
      def.emplace(sys, c.deformation->g, c.deformation->delta);
      const double r = max_abs(deformed_residual(sys, *def, x0));
      if (!(r <= kOnDistributionTol))
        throw PreconditionError("initial state is off the deformed constraint (residual " +
                                std::to_string(r) + ")");
      field = make_deformed_field(sys, *def);
    } else {
      x0 = initial_on_distribution(c);
      field = make_h_field(sys);
    }
    Trajectory tr;
    int code = kOk;
    try {
      tr = integrate(sys, field, x0, c.T, c.eps, c.project_each_step);
      summary["status"] = "ok";
    } catch (const BlowUpError& e) {
      tr = e.partial();
      summary["status"] = "failed";
      summary["message"] = e.what();
      code = kNumericalFailure;
    }
    auto csv = open_output(o, c.trajectory_file);
    write_trajectory_csv(csv, tr);
    double max_res = 0.0, drift = 0.0, max_def = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      max_res = std::max(max_res, max_abs(tr.residual[k]));
      drift = std::max(drift, std::fabs(tr.energy[k] - tr.energy[0]));
      if (def) max_def = std::max(max_def, max_abs(deformed_residual(sys, *def, tr.x[k])));
    }
    summary["rows"] = tr.size();
    summary["max_residual"] = max_res;
    summary["energy_drift"] = drift;
    if (def) summary["max_deformed_residual"] = max_def;
    summary["final_q"] = vec_json(tr.x.back().q);
    summary["final_v"] = vec_json(tr.x.back().v);
    open_output(o, c.summary_file) << summary.dump(2) << "\n";
    out << summary.dump(2) << "\n";
    return code;
  }

  if (c.deformation) throw ConfigError("config field 'deformation': only valid with the reference integrator");
  if (c.project_each_step)
    throw ConfigError("config field 'project_each_step': only valid with the reference integrator");
  const IntegratorSpec spec = c.spec();
  const StatePoint on_d = initial_on_distribution(c);
  const ConnectionSplit split = derive_connection(sys, on_d.q, c.fiber);
  const StatePoint x0 = admissible_initial_state(spec, sys, split, on_d, c.eps);

  DiscreteTrajectory tr;
  int code = kOk;
  try {
    tr = run_integrator(spec, sys, x0, c.eps, c.steps);
    summary["status"] = "ok";
  } catch (const StepFailure& e) {
    tr = e.partial();
    summary["status"] = "failed";
    summary["message"] = e.what();
    code = kNumericalFailure;
  }
  auto csv = open_output(o, c.trajectory_file);
  write_discrete_csv(csv, tr);
  double max_res = 0.0, max_def = 0.0, drift = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    max_res = std::max(max_res, max_abs(tr.residual[k]));
    max_def = std::max(max_def, max_abs(tr.deformed_residual[k]));
    drift = std::max(drift, std::fabs(tr.energy[k] - tr.energy[0]));
  }
  summary["rows"] = tr.size();
  summary["max_residual"] = max_res;
  summary["max_deformed_residual"] = max_def;
  summary["energy_drift"] = drift;
  summary["final_q"] = vec_json(tr.x.back().q);
  summary["final_v"] = vec_json(tr.x.back().v);
  open_output(o, c.summary_file) << summary.dump(2) << "\n";
  out << summary.dump(2) << "\n";
  return code;
}

int converge(const RunConfig& c, const Options& o, std::ostream& out) {
  StudyConfig cfg;
  cfg.integrator.reference = c.is_reference();
  if (!cfg.integrator.reference) cfg.integrator.spec = c.spec();
  cfg.T = c.T;
  cfg.eps = o.eps_list.empty() ? c.eps_list : parse_eps_list(o.eps_list);
  cfg.fiber = c.fiber;
  if (cfg.eps.size() < 4) throw ConfigError("a convergence study needs at least 4 step sizes");
  if (!(cfg.T > 0.0)) throw ConfigError("config field 'T': a convergence study needs T > 0");
  cfg.x0 = initial_on_distribution(c);

  const StudyResult res = o.jobs > 1 ? converge_parallel(*c.system, cfg, o.jobs)
                                     : converge_serial(*c.system, cfg);
  open_output(o, "convergence.json") << to_json(res, cfg) << "\n";

  out << std::setw(14) << "eps" << std::setw(16) << "state_error" << std::setw(16)
      << "lambda_error" << std::setw(16) << "max_residual" << "\n";
  int ok = 0;
  for (const auto& r : res.rows) {
    out << std::setw(14) << r.eps;
    if (r.ok) {
      ++ok;
      out << std::setw(16) << r.state_error << std::setw(16) << r.lambda_error << std::setw(16)
          << r.max_residual << "\n";
    } else {
      out << "  failed: " << r.error << "\n";
    }
  }
  auto show = [&out](const char* name, const std::optional<double>& s) {
    out << name << " slope: ";
    if (s)
      out << *s << "\n";
    else
      out << "n/a\n";
  };
  show("state", res.state_slope);
  show("lambda", res.lambda_slope);
  show("residual", res.residual_slope);
  return ok >= 4 ? kOk : kNumericalFailure;
}

int embed(const RunConfig& c, const Options& o, std::ostream& out) {
  const MechanicalSystem& sys = *c.system;
  if (!(c.eps > 0.0)) throw ConfigError("config field 'eps': missing");
  const StatePoint x0 = initial_on_distribution(c);
  const ConnectionSplit split = derive_connection(sys, x0.q, c.fiber);
  const OneStepMap phi = reduced_scheme_map(sys, split, c.spec().kind);
  EmbeddingOptions opts;
  opts.samples = c.samples;
  opts.seed = c.seed;
  opts.spread = c.spread;
  opts.jobs = o.jobs;
  const EmbeddingReport rep = verify_embedding(sys, split, phi, x0, c.eps, opts);
  const std::string text = to_json(rep);
  open_output(o, "embedding.json") << text << "\n";
  out << text << "\n";
  return kOk;
}

int interp(const RunConfig& c, const Options& o, std::ostream& out) {
  const MechanicalSystem& sys = *c.system;
  if (!c.x2) throw ConfigError("config field 'interp': missing");
  if (!(c.eps > 0.0)) throw ConfigError("config field 'eps': missing");
  const ConnectionSplit split = derive_connection(sys, c.x0.q, c.fiber);
  const InterpolationCurve curve = interpolate_in_D(sys, split, c.x0, *c.x2, c.eps);
  const int n = sys.dim(), m = sys.num_constraints();
  auto csv = open_output(o, "interpolation.csv");
  csv << "t";
  for (int i = 1; i <= n; ++i) csv << ",q_" << i;
  for (int i = 1; i <= n; ++i) csv << ",v_" << i;
  for (int a = 1; a <= m; ++a) csv << ",residual_" << a;
  csv << "\r\n";
  double worst = 0.0;
  constexpr int kSamples = 101;
  for (int k = 0; k < kSamples; ++k) {
    const double t = c.eps * k / (kSamples - 1);
    const StatePoint x = curve(t);
    const Vec r = constraint_residual(sys, x);
    worst = std::max(worst, max_abs(r));
    csv << format_number(t);
    for (int i = 0; i < n; ++i) csv << ',' << format_number(x.q[i]);
    for (int i = 0; i < n; ++i) csv << ',' << format_number(x.v[i]);
    for (int a = 0; a < m; ++a) csv << ',' << format_number(r[a]);
    csv << "\r\n";
  }
  out << "samples: " << kSamples << "\nmax residual: " << worst << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-preserving integrators for nonholonomic mechanical systems", "nonholo"};
  app.require_subcommand(1, 1);
  Options opts;
  opts.jobs = default_jobs();
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Integrate one trajectory and write it as CSV"},
      {"converge", "Measure the convergence order over a list of step sizes"},
      {"embed", "Check the embedding of a one-step scheme into a perturbed flow"},
      {"interp", "Sample the interpolation curve in D between two states"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON run configuration")->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--eps-list", opts.eps_list, "Comma-separated step sizes (converge)");
    sub->add_option("--jobs", opts.jobs, "Worker threads (default $NONHOLO_JOBS or 1)")
        ->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = load_config(opts.config);
    if (cmd == "simulate") return simulate(cfg, opts, out);
    if (cmd == "converge") return converge(cfg, opts, out);
    if (cmd == "embed") return embed(cfg, opts, out);
    return interp(cfg, opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const expr::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace nonholo::cli
