#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "nonholo/expr/function.hpp"
#include "test_support.hpp"

using namespace nonholo;
using namespace nonholo::expr;
using Catch::Approx;

TEST_CASE("parse honors precedence and associativity", "[expr]") {
  CHECK(parse("1+y^2") == add(number(1), power(variable("y"), number(2))));
  CHECK(parse("v_x*v_y/(1+y^2)") ==
        divide(multiply(variable("v_x"), variable("v_y")),
               add(number(1), power(variable("y"), number(2)))));
  CHECK(parse("-y") == negate(variable("y")));
  CHECK(parse("-y^2") == negate(power(variable("y"), number(2))));
  CHECK(parse("a-b-c") == subtract(subtract(variable("a"), variable("b")), variable("c")));
  CHECK(parse("a/b*c") == multiply(divide(variable("a"), variable("b")), variable("c")));
  CHECK(parse("2^3^2") == power(number(2), power(number(3), number(2))));
  CHECK(parse("y^-2") == power(variable("y"), negate(number(2))));
  CHECK(parse(" cot( 2.5e-1 ) ") == call(Func::Cot, number(0.25)));
  CHECK(parse("a*-b") == multiply(variable("a"), negate(variable("b"))));
  CHECK(parse(".5") == number(0.5));
  CHECK(parse("1.") == number(1.0));
  CHECK(parse("2E+2") == number(200.0));
}

TEST_CASE("parse errors carry offset and expected tokens", "[expr]") {
  auto offset_of = [](const char* text) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return static_cast<long>(e.offset());
    }
    return -1L;
  };
  CHECK(offset_of("1+*2") == 2);
  CHECK(offset_of("sin x") == 4);
  CHECK(offset_of("(1+2") == 4);
  CHECK(offset_of("1 2") == 2);
  CHECK(offset_of("1 $ 2") == 2);
  CHECK(offset_of("") == 0);
  try {
    parse("(1+2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const auto& ex = e.expected();
    CHECK(std::find(ex.begin(), ex.end(), ")") != ex.end());
  }
}

TEST_CASE("eval examples and errors", "[expr]") {
  CHECK(eval(parse("1+y^2"), {{"y", 1.0}}) == 2.0);
  CHECK(eval(parse("v_x*v_y/(1+y^2)"), {{"v_x", 1.0}, {"v_y", 1.0}, {"y", 1.0}}) == 0.5);
  CHECK(eval(parse("cot(x)"), {{"x", std::numbers::pi / 4}}) == Approx(1.0).epsilon(1e-15));
  CHECK(eval(parse("2^3^2"), {}) == Approx(512.0).epsilon(1e-15));
  CHECK(eval(parse("2^9"), {}) == 512.0);
  CHECK(eval(parse("y^-2"), {{"y", 2.0}}) == 0.25);
  CHECK(eval(parse("y^0.5"), {{"y", 4.0}}) == Approx(2.0).epsilon(1e-15));

  auto kind_of = [](const char* text, const BindingContext& ctx) {
    try {
      eval(parse(text), ctx);
    } catch (const EvalError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  const int unbound = static_cast<int>(EvalErrorKind::UnboundVariable);
  const int domain = static_cast<int>(EvalErrorKind::Domain);
  CHECK(kind_of("x", {}) == unbound);
  CHECK(kind_of("log(x)", {{"x", 0.0}}) == domain);
  CHECK(kind_of("log(x)", {{"x", -1.0}}) == domain);
  CHECK(kind_of("1/(x-x)", {{"x", 3.0}}) == domain);
  CHECK(kind_of("sqrt(x)", {{"x", -1.0}}) == domain);
  CHECK(kind_of("cot(x)", {{"x", 0.0}}) == domain);
  CHECK(kind_of("x^0.5", {{"x", -4.0}}) == domain);
  CHECK(kind_of("exp(x)", {{"x", 1000.0}}) == domain);
  CHECK(kind_of("x^-1", {{"x", 0.0}}) == domain);
}

TEST_CASE("gradient and hessian examples", "[expr]") {
  CHECK(gradient(parse("1+y^2"), {"y"}, {{"y", 1.0}})[0] == 2.0);
  const auto g = gradient(parse("v_x*v_y"), {"v_x", "v_y"}, {{"v_x", 3.0}, {"v_y", 5.0}});
  CHECK(g[0] == 5.0);
  CHECK(g[1] == 3.0);
  CHECK(hessian(parse("y^2"), {"y"}, {{"y", 7.0}})(0, 0) == 2.0);
  const auto h = hessian(parse("x*y"), {"x", "y"}, {{"x", 1.0}, {"y", 1.0}});
  CHECK(h(0, 0) == 0.0);
  CHECK(h(0, 1) == 1.0);
  CHECK(h(1, 0) == 1.0);
  CHECK(h(1, 1) == 0.0);
  CHECK_THROWS_AS(gradient(parse("x"), {"q"}, {{"x", 1.0}}), EvalError);
}

TEST_CASE("derivatives of each primitive", "[expr]") {
  const double x = 0.37;
  const BindingContext ctx{{"x", x}};
  auto d1 = [&](const char* s) { return gradient(parse(s), {"x"}, ctx)[0]; };
  auto d2 = [&](const char* s) { return hessian(parse(s), {"x"}, ctx)(0, 0); };
  CHECK(d1("sin(x)") == Approx(std::cos(x)));
  CHECK(d2("sin(x)") == Approx(-std::sin(x)));
  CHECK(d1("cos(x)") == Approx(-std::sin(x)));
  CHECK(d1("tan(x)") == Approx(1.0 / (std::cos(x) * std::cos(x))));
  CHECK(d2("tan(x)") == Approx(2.0 * std::tan(x) / std::pow(std::cos(x), 2)));
  CHECK(d1("exp(x)") == Approx(std::exp(x)));
  CHECK(d1("log(x)") == Approx(1.0 / x));
  CHECK(d2("log(x)") == Approx(-1.0 / (x * x)));
  CHECK(d1("tanh(x)") == Approx(1.0 - std::tanh(x) * std::tanh(x)));
  CHECK(d1("sqrt(x)") == Approx(0.5 / std::sqrt(x)));
  CHECK(d2("sqrt(x)") == Approx(-0.25 * std::pow(x, -1.5)));
  CHECK(d1("cot(x)") == Approx(-1.0 / (std::sin(x) * std::sin(x))));
  CHECK(d2("cot(x)") == Approx(2.0 * std::cos(x) / std::pow(std::sin(x), 3)));
  CHECK(d1("x^2.5") == Approx(2.5 * std::pow(x, 1.5)));
  CHECK(d2("x^-3") == Approx(12.0 * std::pow(x, -5)));
  CHECK(d2("x/(1+x)") == Approx(-2.0 / std::pow(1 + x, 3)));
}

TEST_CASE("gradient matches central differences on random polynomials", "[expr][property]") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const Expression e = testing::random_polynomial(rng, 6, 5);
    const BindingContext ctx = testing::random_point(rng);
    const double value = eval(e, ctx);
    const Eigen::VectorXd ad = gradient(e, testing::kVars, ctx);
    const Eigen::VectorXd fd = testing::fd_gradient(e, ctx, 1e-6);
    CHECK((ad - fd).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + std::fabs(value)));
  }
}

TEST_CASE("hessian matches second differences on random cubics", "[expr][property]") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const Expression e = testing::random_polynomial(rng, 8, 3);
    const BindingContext ctx = testing::random_point(rng);
    const Eigen::MatrixXd ad = hessian(e, testing::kVars, ctx);
    const Eigen::MatrixXd fd = testing::fd_hessian(e, ctx, 1e-4);
    CHECK((ad - fd).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("derivatives of random smooth expressions", "[expr][property]") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const Expression e = testing::random_smooth(rng, 4);
    const BindingContext ctx = testing::random_point(rng);
    const double value = eval(e, ctx);
    const Eigen::VectorXd ad = gradient(e, testing::kVars, ctx);
    const Eigen::VectorXd fd = testing::fd_gradient(e, ctx, 1e-6);
    const double scale = 1.0 + std::fabs(value) + ad.cwiseAbs().maxCoeff();
    CHECK((ad - fd).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    const Eigen::MatrixXd H = hessian(e, testing::kVars, ctx);
    CHECK(H == H.transpose());
    const Eigen::MatrixXd Hfd = testing::fd_hessian(e, ctx, 1e-4);
    CHECK((H - Hfd).cwiseAbs().maxCoeff() <= 1e-4 * (scale + H.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("print then parse is structurally identical and bit-exact", "[expr][property]") {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 100; ++k) {
    const Expression e = k % 2 ? testing::random_smooth(rng, 5) : testing::random_polynomial(rng, 5, 4);
    const Expression back = parse(print(e));
    REQUIRE(back == e);
    const BindingContext ctx = testing::random_point(rng);
    CHECK(eval(back, ctx) == eval(e, ctx));
  }
  CHECK(parse(print(number(0.1))) == number(0.1));
  CHECK(parse(print(number(1e-300))) == number(1e-300));
}

TEST_CASE("dual and jet primal parts equal plain evaluation exactly", "[expr][property]") {
  std::mt19937_64 rng(15);
  for (int k = 0; k < 100; ++k) {
    const Expression e = testing::random_smooth(rng, 4);
    const Function f(e, testing::kVars);
    const BindingContext ctx = testing::random_point(rng);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = ctx.at(testing::kVars[i]);
    Eigen::VectorXd g(3);
    CHECK(f.value_gradient(x, g) == f(x));
    std::vector<Jet2> jets;
    for (int i = 0; i < 3; ++i) jets.push_back(Jet2::seed(x[i], 3, i));
    CHECK(f.evaluate<Jet2>(std::span<const Jet2>(jets)).value == f(x));
    CHECK(f(x) == eval(e, ctx));
  }
}

TEST_CASE("compiled functions reject unknown names", "[expr]") {
  CHECK_THROWS_AS(Function(parse("x+w"), {"x", "y"}), EvalError);
  const Function f(parse("3"), {"x"});
  CHECK(f.is_constant());
  Eigen::VectorXd x(1), g(1);
  x << 2.0;
  CHECK(f.value_gradient(x, g) == 3.0);
  CHECK(g[0] == 0.0);
}
