#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nonholo/error.hpp"

namespace nonholo::expr {

enum class NodeKind { Number, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Call };

enum class Func { Sin, Cos, Tan, Exp, Log, Tanh, Sqrt, Cot };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  double value = 0.0;  // Number
  std::string name;    // Variable
  Func func = Func::Sin;
  NodePtr lhs;  // unary operand, function argument, or left operand
  NodePtr rhs;
};

/**
 * @brief Immutable scalar expression tree over named real variables.
 *
 * Copies share the underlying tree.  Equality is structural.
 */
class Expression {
 public:
  Expression();
  explicit Expression(NodePtr root);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Sorted, deduplicated variable names appearing in the tree.
  std::vector<std::string> variables() const;
  bool is_constant() const { return variables().empty(); }

  friend bool operator==(const Expression& a, const Expression& b);
  friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }

 private:
  NodePtr root_;
};

Expression number(double value);
Expression variable(std::string name);
Expression negate(const Expression& a);
Expression add(const Expression& a, const Expression& b);
Expression subtract(const Expression& a, const Expression& b);
Expression multiply(const Expression& a, const Expression& b);
Expression divide(const Expression& a, const Expression& b);
Expression power(const Expression& base, const Expression& exponent);
Expression call(Func f, const Expression& arg);

std::string_view func_name(Func f);

/// Raised by parse() with the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

enum class EvalErrorKind { UnboundVariable, Domain };

class EvalError : public Error {
 public:
  EvalError(EvalErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  EvalErrorKind kind() const { return kind_; }

 private:
  EvalErrorKind kind_;
};

Expression parse(std::string_view text);

/// Fully parenthesized text; parse(print(e)) == e and numbers round-trip exactly.
std::string print(const Expression& e);

using BindingContext = std::map<std::string, double, std::less<>>;

double eval(const Expression& e, const BindingContext& ctx);

/// d e / d vars at ctx, forward mode.
Eigen::VectorXd gradient(const Expression& e, const std::vector<std::string>& vars,
                         const BindingContext& ctx);

/// Second derivatives at ctx; the result is exactly symmetric.
Eigen::MatrixXd hessian(const Expression& e, const std::vector<std::string>& vars,
                        const BindingContext& ctx);

}  // namespace nonholo::expr
