#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>
#include <sstream>

#include "nonholo/expr/expression.hpp"

namespace nonholo::expr {

namespace {

std::string describe_expected(const std::vector<std::string>& expected) {
  std::ostringstream os;
  for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
  return os.str();
}

std::optional<Func> lookup_func(std::string_view name) {
  static constexpr std::pair<std::string_view, Func> table[] = {
      {"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},   {"exp", Func::Exp},
      {"log", Func::Log},   {"tanh", Func::Tanh}, {"sqrt", Func::Sqrt}, {"cot", Func::Cot},
  };
  for (const auto& [n, f] : table)
    if (n == name) return f;
  return std::nullopt;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End, Bad };

struct Token {
  Tok kind = Tok::End;
  std::size_t offset = 0;
  std::string_view text;
  double number = 0.0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { advance(); }

  Expression parse_all() {
    Expression e = parse_expr();
    if (cur_.kind != Tok::End) fail({"operator", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = cur_.kind == Tok::End ? "end of input" : std::string(cur_.text);
    throw ParseError(cur_.offset, std::move(expected), found);
  }

  void advance() {
    std::size_t i = pos_;
    while (i < src_.size() && std::isspace(static_cast<unsigned char>(src_[i]))) ++i;
    cur_ = Token{};
    cur_.offset = i;
    if (i >= src_.size()) {
      cur_.kind = Tok::End;
      pos_ = i;
      return;
    }
    const char c = src_[i];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
          while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
          j = k;
        }
      }
      cur_.text = src_.substr(i, j - i);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(src_.data() + i, src_.data() + j, value);
      if (ec != std::errc() || ptr != src_.data() + j || cur_.text == ".") {
        cur_.kind = Tok::Bad;
        throw ParseError(i, {"number"}, std::string(cur_.text));
      }
      cur_.kind = Tok::Number;
      cur_.number = value;
      pos_ = j;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      cur_.kind = Tok::Ident;
      cur_.text = src_.substr(i, j - i);
      pos_ = j;
      return;
    }
    cur_.text = src_.substr(i, 1);
    pos_ = i + 1;
    switch (c) {
      case '+': cur_.kind = Tok::Plus; break;
      case '-': cur_.kind = Tok::Minus; break;
      case '*': cur_.kind = Tok::Star; break;
      case '/': cur_.kind = Tok::Slash; break;
      case '^': cur_.kind = Tok::Caret; break;
      case '(': cur_.kind = Tok::LParen; break;
      case ')': cur_.kind = Tok::RParen; break;
      default: cur_.kind = Tok::Bad; break;
    }
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const bool plus = cur_.kind == Tok::Plus;
      advance();
      Expression rhs = parse_term();
      lhs = plus ? add(lhs, rhs) : subtract(lhs, rhs);
    }
    return lhs;
  }

  Expression parse_term() {
    Expression lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const bool mul = cur_.kind == Tok::Star;
      advance();
      Expression rhs = parse_unary();
      lhs = mul ? multiply(lhs, rhs) : divide(lhs, rhs);
    }
    return lhs;
  }

  Expression parse_unary() {
    if (cur_.kind == Tok::Minus) {
      advance();
      return negate(parse_unary());
    }
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (cur_.kind == Tok::Caret) {
      advance();
      return power(base, parse_unary());
    }
    return base;
  }

  Expression parse_primary() {
    switch (cur_.kind) {
      case Tok::Number: {
        const double v = cur_.number;
        advance();
        return number(v);
      }
      case Tok::Ident: {
        const std::string name(cur_.text);
        advance();
        if (auto f = lookup_func(name)) {
          if (cur_.kind != Tok::LParen) fail({"("});
          advance();
          Expression arg = parse_expr();
          if (cur_.kind != Tok::RParen) fail({")", "operator"});
          advance();
          return call(*f, arg);
        }
        return variable(name);
      }
      case Tok::LParen: {
        advance();
        Expression inner = parse_expr();
        if (cur_.kind != Tok::RParen) fail({")", "operator"});
        advance();
        return inner;
      }
      default:
        fail({"number", "identifier", "function", "(", "-"});
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token cur_;
};

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       const std::string& found)
    : Error("syntax error at byte " + std::to_string(offset) + ": expected one of {" +
            describe_expected(expected) + "} but found '" + found + "'"),
      offset_(offset),
      expected_(std::move(expected)) {}

Expression parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace nonholo::expr
