#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonholo/expr/dual.hpp"
#include "nonholo/expr/expression.hpp"

namespace nonholo::expr {

/**
 * @brief An expression compiled against a fixed ordered argument list.
 *
 * Variable names are resolved to argument slots once, so evaluation is a
 * linear walk over a postfix program with no name lookups.  Evaluation is
 * generic over double, Dual and Jet2, and the primal part is computed by the
 * same sequence of floating point operations for all three.
 */
class Function {
 public:
  Function() = default;
  /// Throws EvalError(UnboundVariable) if the expression uses a name not in args.
  Function(const Expression& e, const std::vector<std::string>& args);

  const Expression& expression() const { return expr_; }
  int arity() const { return arity_; }
  bool is_constant() const { return constant_; }

  template <class S>
  S evaluate(std::span<const S> args) const;

  double operator()(const Eigen::VectorXd& x) const;
  /// Value and gradient w.r.t. all arguments.
  double value_gradient(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> grad) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  enum class Op : unsigned char {
    Const, Var, Neg, Add, Sub, Mul, Div, PowInt, Pow,
    Sin, Cos, Tan, Exp, Log, Tanh, Sqrt, Cot
  };
  struct Instr {
    Op op;
    int arg;
    double value;
  };

 private:
  Expression expr_;
  std::vector<Instr> program_;
  int arity_ = 0;
  int max_depth_ = 0;
  bool constant_ = true;
};

}  // namespace nonholo::expr
