#include <algorithm>

#include "nonholo/expr/function.hpp"

namespace nonholo::expr {

namespace {

std::vector<std::string> bound_names(const BindingContext& ctx) {
  std::vector<std::string> names;
  names.reserve(ctx.size());
  for (const auto& [k, _] : ctx) names.push_back(k);
  return names;
}

std::vector<double> bound_values(const BindingContext& ctx) {
  std::vector<double> values;
  values.reserve(ctx.size());
  for (const auto& [_, v] : ctx) values.push_back(v);
  return values;
}

/// Arguments ordered as vars first, then remaining bound names.
std::vector<std::string> differentiation_order(const std::vector<std::string>& vars,
                                               const BindingContext& ctx) {
  std::vector<std::string> order = vars;
  for (const auto& v : vars)
    if (ctx.find(v) == ctx.end())
      throw EvalError(EvalErrorKind::UnboundVariable, "unbound variable '" + v + "'");
  for (const auto& [k, _] : ctx)
    if (std::find(vars.begin(), vars.end(), k) == vars.end()) order.push_back(k);
  return order;
}

}  // namespace

double eval(const Expression& e, const BindingContext& ctx) {
  const Function f(e, bound_names(ctx));
  const auto values = bound_values(ctx);
  return f.evaluate<double>(std::span<const double>(values));
}

Eigen::VectorXd gradient(const Expression& e, const std::vector<std::string>& vars,
                         const BindingContext& ctx) {
  const auto order = differentiation_order(vars, ctx);
  const Function f(e, order);
  const int d = static_cast<int>(vars.size());
  if (d > kMaxDirections)
    throw EvalError(EvalErrorKind::Domain, "too many variables for forward differentiation");
  std::vector<Dual> args;
  args.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double v = ctx.find(order[i])->second;
    args.push_back(static_cast<int>(i) < d ? Dual::seed(v, d, static_cast<int>(i)) : Dual(v, d));
  }
  const Dual r = f.evaluate<Dual>(std::span<const Dual>(args));
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) g[i] = r.d[i];
  return g;
}

Eigen::MatrixXd hessian(const Expression& e, const std::vector<std::string>& vars,
                        const BindingContext& ctx) {
  const auto order = differentiation_order(vars, ctx);
  const Function f(e, order);
  const int d = static_cast<int>(vars.size());
  std::vector<Jet2> args;
  args.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double v = ctx.find(order[i])->second;
    args.push_back(static_cast<int>(i) < d ? Jet2::seed(v, d, static_cast<int>(i)) : Jet2(v, d));
  }
  const Jet2 r = f.evaluate<Jet2>(std::span<const Jet2>(args));
  Eigen::MatrixXd H(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) H(i, j) = H(j, i) = r.hess(i, j);
  return H;
}

}  // namespace nonholo::expr
