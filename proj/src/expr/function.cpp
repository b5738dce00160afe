#include <algorithm>
#include <cmath>

#include "nonholo/expr/function.hpp"

namespace nonholo::expr {

namespace {

using Op = Function::Op;
using Instr = Function::Instr;

Op op_for(Func f) {
  switch (f) {
    case Func::Sin: return Op::Sin;
    case Func::Cos: return Op::Cos;
    case Func::Tan: return Op::Tan;
    case Func::Exp: return Op::Exp;
    case Func::Log: return Op::Log;
    case Func::Tanh: return Op::Tanh;
    case Func::Sqrt: return Op::Sqrt;
    case Func::Cot: return Op::Cot;
  }
  return Op::Sin;
}

/// Integer exponent in [-64, 64] written as a literal, possibly negated.
bool small_integer_exponent(const Node& n, int& k) {
  double v = 0.0;
  if (n.kind == NodeKind::Number) {
    v = n.value;
  } else if (n.kind == NodeKind::Negate && n.lhs->kind == NodeKind::Number) {
    v = -n.lhs->value;
  } else {
    return false;
  }
  if (v != std::floor(v) || std::fabs(v) > 64.0) return false;
  k = static_cast<int>(v);
  return true;
}

struct Compiler {
  const std::vector<std::string>& args;
  std::vector<Instr> program;
  int depth = 0;
  int max_depth = 0;

  void push(Instr ins, int delta) {
    program.push_back(ins);
    depth += delta;
    max_depth = std::max(max_depth, depth);
  }

  void compile(const Node& n) {
    switch (n.kind) {
      case NodeKind::Number:
        push({Op::Const, 0, n.value}, 1);
        return;
      case NodeKind::Variable: {
        auto it = std::find(args.begin(), args.end(), n.name);
        if (it == args.end())
          throw EvalError(EvalErrorKind::UnboundVariable, "unbound variable '" + n.name + "'");
        push({Op::Var, static_cast<int>(it - args.begin()), 0.0}, 1);
        return;
      }
      case NodeKind::Negate:
        compile(*n.lhs);
        push({Op::Neg, 0, 0.0}, 0);
        return;
      case NodeKind::Call:
        compile(*n.lhs);
        push({op_for(n.func), 0, 0.0}, 0);
        return;
      case NodeKind::Power: {
        int k = 0;
        compile(*n.lhs);
        if (small_integer_exponent(*n.rhs, k)) {
          push({Op::PowInt, k, 0.0}, 0);
        } else {
          compile(*n.rhs);
          push({Op::Pow, 0, 0.0}, -1);
        }
        return;
      }
      default:
        break;
    }
    compile(*n.lhs);
    compile(*n.rhs);
    Op op = Op::Add;
    if (n.kind == NodeKind::Subtract) op = Op::Sub;
    if (n.kind == NodeKind::Multiply) op = Op::Mul;
    if (n.kind == NodeKind::Divide) op = Op::Div;
    push({op, 0, 0.0}, -1);
  }
};

template <class S>
S make_const(double v, int n) {
  if constexpr (std::is_same_v<S, double>) {
    (void)n;
    return v;
  } else {
    return S(v, n);
  }
}

template <class S>
int dimension_of(std::span<const S> args) {
  if constexpr (std::is_same_v<S, double>) {
    return 0;
  } else {
    return args.empty() ? 0 : args[0].dim;
  }
}

[[noreturn]] void domain(const char* what) { throw EvalError(EvalErrorKind::Domain, what); }

template <class S>
S divide_checked(const S& a, const S& b) {
  if (primal(b) == 0.0) domain("division by zero");
  return a / b;
}

template <class S>
S apply_func(Op op, const S& x) {
  const double u = primal(x);
  switch (op) {
    case Op::Sin: {
      const double s = std::sin(u), c = std::cos(u);
      return chain(x, s, c, -s);
    }
    case Op::Cos: {
      const double s = std::sin(u), c = std::cos(u);
      return chain(x, c, -s, -c);
    }
    case Op::Tan: {
      if (std::cos(u) == 0.0) domain("tan at a pole");
      const double t = std::tan(u);
      const double sec2 = 1.0 + t * t;
      return chain(x, t, sec2, 2.0 * t * sec2);
    }
    case Op::Exp: {
      const double e = std::exp(u);
      return chain(x, e, e, e);
    }
    case Op::Log: {
      if (!(u > 0.0)) domain("log of a non-positive value");
      return chain(x, std::log(u), 1.0 / u, -1.0 / (u * u));
    }
    case Op::Tanh: {
      const double t = std::tanh(u);
      const double d = 1.0 - t * t;
      return chain(x, t, d, -2.0 * t * d);
    }
    case Op::Sqrt: {
      if (u < 0.0) domain("sqrt of a negative value");
      const double r = std::sqrt(u);
      if constexpr (!std::is_same_v<S, double>) {
        if (r == 0.0) domain("derivative of sqrt at zero");
      }
      return chain(x, r, 0.5 / r, -0.25 / (r * u));
    }
    case Op::Cot: {
      const double s = std::sin(u);
      if (s == 0.0) domain("division by zero in cot");
      const double c = std::cos(u) / s;
      const double csc2 = 1.0 + c * c;
      return chain(x, c, -csc2, 2.0 * c * csc2);
    }
    default:
      domain("unknown function");
  }
}

template <class S, class Stack>
S run(const std::vector<Instr>& program, std::span<const S> args, Stack& stack) {
  const int n = dimension_of(args);
  int top = 0;
  for (const Instr& ins : program) {
    switch (ins.op) {
      case Op::Const:
        stack[top++] = make_const<S>(ins.value, n);
        continue;
      case Op::Var:
        stack[top++] = args[ins.arg];
        continue;
      case Op::Neg:
        stack[top - 1] = -stack[top - 1];
        continue;
      case Op::Add:
        stack[top - 2] = stack[top - 2] + stack[top - 1];
        --top;
        break;
      case Op::Sub:
        stack[top - 2] = stack[top - 2] - stack[top - 1];
        --top;
        break;
      case Op::Mul:
        stack[top - 2] = stack[top - 2] * stack[top - 1];
        --top;
        break;
      case Op::Div:
        stack[top - 2] = divide_checked(stack[top - 2], stack[top - 1]);
        --top;
        break;
      case Op::PowInt: {
        const S base = stack[top - 1];
        const int k = ins.arg < 0 ? -ins.arg : ins.arg;
        S r = make_const<S>(1.0, n);
        S b = base;
        bool first = true;
        for (int e = k; e > 0; e >>= 1) {
          if (e & 1) {
            r = first ? b : r * b;
            first = false;
          }
          if (e > 1) b = b * b;
        }
        if (ins.arg < 0) r = divide_checked(make_const<S>(1.0, n), r);
        stack[top - 1] = r;
        break;
      }
      case Op::Pow: {
        const S l = apply_func(Op::Log, stack[top - 2]);
        stack[top - 2] = apply_func(Op::Exp, stack[top - 1] * l);
        --top;
        break;
      }
      default:
        stack[top - 1] = apply_func(ins.op, stack[top - 1]);
        break;
    }
    if (!std::isfinite(primal(stack[top - 1]))) domain("non-finite intermediate result");
  }
  return stack[0];
}

}  // namespace

Function::Function(const Expression& e, const std::vector<std::string>& args)
    : expr_(e), arity_(static_cast<int>(args.size())) {
  Compiler c{args, {}, 0, 0};
  c.compile(e.root());
  program_ = std::move(c.program);
  max_depth_ = c.max_depth;
  constant_ = std::none_of(program_.begin(), program_.end(),
                           [](const Instr& i) { return i.op == Op::Var; });
}

template <class S>
S Function::evaluate(std::span<const S> args) const {
  if (program_.empty()) return make_const<S>(0.0, dimension_of(args));
  constexpr int kInline = 16;
  if (max_depth_ <= kInline) {
    std::array<S, kInline> stack;
    return run(program_, args, stack);
  }
  std::vector<S> stack(max_depth_);
  return run(program_, args, stack);
}

template double Function::evaluate<double>(std::span<const double>) const;
template Dual Function::evaluate<Dual>(std::span<const Dual>) const;
template Jet2 Function::evaluate<Jet2>(std::span<const Jet2>) const;

double Function::operator()(const Eigen::VectorXd& x) const {
  return evaluate<double>(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double Function::value_gradient(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> grad) const {
  const int n = static_cast<int>(x.size());
  if (constant_) {
    grad.setZero();
    return (*this)(x);
  }
  if (n > kMaxDirections)
    throw EvalError(EvalErrorKind::Domain, "too many variables for forward differentiation");
  std::array<Dual, kMaxDirections> seeded;
  for (int i = 0; i < n; ++i) seeded[i] = Dual::seed(x[i], n, i);
  const Dual r = evaluate<Dual>(std::span<const Dual>(seeded.data(), n));
  for (int i = 0; i < n; ++i) grad[i] = r.d[i];
  return r.value;
}

Eigen::MatrixXd Function::hessian(const Eigen::VectorXd& x) const {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  if (constant_) return H;
  std::vector<Jet2> seeded;
  seeded.reserve(n);
  for (int i = 0; i < n; ++i) seeded.push_back(Jet2::seed(x[i], n, i));
  const Jet2 r = evaluate<Jet2>(std::span<const Jet2>(seeded.data(), seeded.size()));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) H(i, j) = H(j, i) = r.hess(i, j);
  return H;
}

}  // namespace nonholo::expr
