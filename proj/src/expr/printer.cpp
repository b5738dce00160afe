#include <cstdio>
#include <set>

#include "nonholo/expr/expression.hpp"

namespace nonholo::expr {

namespace {

NodePtr make(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number:
      return a.value == b.value || (a.value != a.value && b.value != b.value);
    case NodeKind::Variable:
      return a.name == b.name;
    case NodeKind::Negate:
      return equal(*a.lhs, *b.lhs);
    case NodeKind::Call:
      return a.func == b.func && equal(*a.lhs, *b.lhs);
    default:
      return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

void collect(const Node& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::Variable) out.insert(n.name);
  if (n.lhs) collect(*n.lhs, out);
  if (n.rhs) collect(*n.rhs, out);
}

void emit(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case NodeKind::Variable:
      out += n.name;
      return;
    case NodeKind::Negate:
      out += "(-";
      emit(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Call:
      out += func_name(n.func);
      out += '(';
      emit(*n.lhs, out);
      out += ')';
      return;
    default:
      break;
  }
  char op = '+';
  switch (n.kind) {
    case NodeKind::Subtract: op = '-'; break;
    case NodeKind::Multiply: op = '*'; break;
    case NodeKind::Divide: op = '/'; break;
    case NodeKind::Power: op = '^'; break;
    default: break;
  }
  out += '(';
  emit(*n.lhs, out);
  out += op;
  emit(*n.rhs, out);
  out += ')';
}

}  // namespace

Expression::Expression() : root_(make(NodeKind::Number)) {}
Expression::Expression(NodePtr root) : root_(std::move(root)) {}

std::vector<std::string> Expression::variables() const {
  std::set<std::string> names;
  collect(*root_, names);
  return {names.begin(), names.end()};
}

bool operator==(const Expression& a, const Expression& b) {
  return a.root_ == b.root_ || equal(*a.root_, *b.root_);
}

Expression number(double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->value = value;
  return Expression(n);
}

Expression variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->name = std::move(name);
  return Expression(n);
}

Expression negate(const Expression& a) { return Expression(make(NodeKind::Negate, a.root_ptr())); }
Expression add(const Expression& a, const Expression& b) {
  return Expression(make(NodeKind::Add, a.root_ptr(), b.root_ptr()));
}
Expression subtract(const Expression& a, const Expression& b) {
  return Expression(make(NodeKind::Subtract, a.root_ptr(), b.root_ptr()));
}
Expression multiply(const Expression& a, const Expression& b) {
  return Expression(make(NodeKind::Multiply, a.root_ptr(), b.root_ptr()));
}
Expression divide(const Expression& a, const Expression& b) {
  return Expression(make(NodeKind::Divide, a.root_ptr(), b.root_ptr()));
}
Expression power(const Expression& base, const Expression& exponent) {
  return Expression(make(NodeKind::Power, base.root_ptr(), exponent.root_ptr()));
}
Expression call(Func f, const Expression& arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->func = f;
  n->lhs = arg.root_ptr();
  return Expression(n);
}

std::string_view func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Tanh: return "tanh";
    case Func::Sqrt: return "sqrt";
    case Func::Cot: return "cot";
  }
  return "?";
}

std::string print(const Expression& e) {
  std::string out;
  emit(e.root(), out);
  return out;
}

}  // namespace nonholo::expr
