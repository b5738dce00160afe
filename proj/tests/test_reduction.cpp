#include <catch_amalgamated.hpp>

#include <random>

#include "nonholo/error.hpp"
#include "nonholo/flow.hpp"
#include "nonholo/reduction.hpp"
#include "nonholo/sweep.hpp"
#include "test_support.hpp"

using namespace nonholo;
using expr::parse;
using Catch::Approx;

namespace {

struct Fixture {
  MechanicalSystem sys = nonholonomic_particle();
  ConnectionSplit split = derive_connection(sys, Vec::Zero(3), std::vector<int>{2});
  std::vector<StatePoint> samples = sample_on_distribution(sys, split, Vec::Zero(3), 2.0, 100, 21);
};

/// Particle in a potential with a coupled mass matrix, for checks beyond V = 0 and M = I.
MechanicalSystem loaded_particle() {
  Mat m(3, 3);
  m << 2.0, 0.3, 0.0, 0.3, 1.5, 0.2, 0.0, 0.2, 1.0;
  return MechanicalSystem({"x", "y", "z"}, m, parse("0.5*x^2 + cos(y) + 0.1*z^3"),
                          {{parse("-y"), parse("0"), parse("1")}});
}

}  // namespace

TEST_CASE("lambda examples", "[reduction]") {
  const auto sys = nonholonomic_particle();
  const StatePoint x = testing::particle_start();
  CHECK(lambda_continuous(sys, x)[0] == Approx(0.5).epsilon(1e-15));
  CHECK(lambda_continuous(sys, testing::make_state({1, 2, 3}, {0, 0, 0}))[0] == 0.0);
  CHECK_THROWS_AS(lambda_continuous(sys, testing::make_state({0, 1, 0}, {1, 0, 0})),
                  PreconditionError);
}

TEST_CASE("lambda matches the closed form and the tangency solve", "[reduction][property]") {
  Fixture fx;
  for (const auto& x : fx.samples) {
    const double y = x.q[1];
    const double closed = x.v[0] * x.v[1] / (1.0 + y * y);
    CHECK(lambda_continuous(fx.sys, x)[0] == Approx(closed).epsilon(1e-13).margin(1e-14));
    CHECK(std::fabs(lambda_from_tangency(fx.sys, x)[0] - lambda_continuous(fx.sys, x)[0]) <= 1e-12);
  }
  const auto loaded = loaded_particle();
  const auto split = derive_connection(loaded, Vec::Zero(3), std::vector<int>{2});
  for (const auto& x : sample_on_distribution(loaded, split, Vec::Zero(3), 1.5, 100, 22))
    CHECK(std::fabs(lambda_from_tangency(loaded, x)[0] - lambda_continuous(loaded, x)[0]) <= 1e-12);
}

TEST_CASE("h field example and tangency", "[reduction]") {
  const auto sys = nonholonomic_particle();
  const Vec h = h_field(sys, testing::particle_start());
  Vec expected(6);
  expected << 1, 1, 1, -0.5, 0, 0.5;
  CHECK(max_abs(h - expected) <= 1e-15);

  const auto free = MechanicalSystem({"a", "b"}, Mat::Identity(2, 2), parse("0"), {});
  const Vec hf = h_field(free, testing::make_state({1, 2}, {3, 4}));
  CHECK(hf == (Vec(4) << 3, 4, 0, 0).finished());

  Fixture fx;
  const auto loaded = loaded_particle();
  const auto split = derive_connection(loaded, Vec::Zero(3), std::vector<int>{2});
  for (const MechanicalSystem* s : {static_cast<const MechanicalSystem*>(&fx.sys), &loaded}) {
    const auto xs = sample_on_distribution(*s, split, Vec::Zero(3), 2.0, 100, 23);
    for (const auto& x : xs) {
      const Vec hx = h_field(*s, x);
      CHECK(std::fabs((constraint_gradient(*s, x) * hx)[0]) <= 1e-10);
      Vec grad_e(6);
      grad_e << s->potential_gradient(x.q), s->mass() * x.v;
      CHECK(std::fabs(grad_e.dot(hx)) <= 1e-10);
    }
  }
}

TEST_CASE("constraint is conserved along a short trajectory", "[reduction]") {
  const auto sys = loaded_particle();
  StatePoint x = testing::particle_start();
  x.v = project_velocity(sys, x.q, x.v);
  const VectorField f = make_h_field(sys);
  const double dt = 1e-3;
  for (int k = 0; k < 20; ++k) {
    const Vec y = reference_flow(f, stack(x), 0.01 * k, 1e-4);
    const StatePoint plus = unstack(reference_flow(f, y, dt, 1e-4));
    const StatePoint minus = unstack(reference_flow(f, y, -dt, 1e-4));
    const double rate = (constraint_residual(sys, plus)[0] - constraint_residual(sys, minus)[0]) /
                        (2.0 * dt);
    CHECK(std::fabs(rate) <= 1e-8);
  }
}

TEST_CASE("reduced coordinates", "[reduction]") {
  Fixture fx;
  Vec xi(5);
  xi << 0, 1, 0, 1, 1;
  const Vec x = psi_embed(fx.sys, fx.split, xi);
  CHECK(x == (Vec(6) << 0, 1, 0, 1, 1, 1).finished());
  Vec rest(5);
  rest << 0.3, -2, 1, 0, 0;
  CHECK(psi_embed(fx.sys, fx.split, rest).tail(3).isZero(0.0));

  const Mat g = grad_psi(fx.sys, fx.split, xi);
  REQUIRE(g.rows() == 6);
  REQUIRE(g.cols() == 5);
  CHECK(g(5, 1) == 1.0);
  CHECK(g(5, 3) == 1.0);
  const Mat p = psi_pseudo_inverse(fx.sys, fx.split);
  CHECK(p * g == Mat::Identity(5, 5));

  Vec expected(5);
  expected << 1, 1, 1, -0.5, 0;
  CHECK(max_abs(reduced_field(fx.sys, fx.split, xi) - expected) <= 1e-15);
  CHECK(reduced_field(fx.sys, fx.split, rest).isZero(0.0));
}

TEST_CASE("reduced coordinates property checks", "[reduction][property]") {
  Fixture fx;
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    Vec xi(5);
    for (int i = 0; i < 5; ++i) xi[i] = u(rng);
    const StatePoint x = unstack(psi_embed(fx.sys, fx.split, xi));
    CHECK(std::fabs(constraint_residual(fx.sys, x)[0]) <= 1e-14);
    const Vec lifted = grad_psi(fx.sys, fx.split, xi) * reduced_field(fx.sys, fx.split, xi);
    CHECK(max_abs(lifted - h_field(fx.sys, x)) <= 1e-10);
  }
  for (const auto& x : fx.samples) {
    const Vec back = psi_embed(fx.sys, fx.split, psi_project(fx.split, x));
    CHECK(max_abs(back - stack(x)) <= 1e-13);
  }
}

TEST_CASE("perturbed lambda and field", "[reduction]") {
  Fixture fx;
  const StatePoint x = testing::particle_start();
  const Vec base = lambda_continuous(fx.sys, x);

  Perturbation zero{[](double, double, const StatePoint&) { return Vec(Vec::Zero(6)); }, 1, 0.1};
  CHECK(perturbed_lambda(fx.sys, x, zero, 0.3) == base);
  CHECK(perturbed_field(fx.sys, x, zero, 0.3) == h_field(fx.sys, x));

  Perturbation sine{[](double, double tau, const StatePoint& s) {
                      Vec g(6);
                      g << std::sin(tau), s.v[0], 0.2, s.q[1], 1.0, std::cos(tau);
                      return g;
                    },
                    2, 0.0};
  CHECK(perturbed_lambda(fx.sys, x, sine, 0.3) == base);
  CHECK(perturbed_field(fx.sys, x, sine, 0.3) == h_field(fx.sys, x));

  Perturbation along_y{[](double, double, const StatePoint&) {
                         Vec g(6);
                         g << 0, 0, 0, 0, 1, 0;
                         return g;
                       },
                       1, 0.1};
  CHECK(perturbed_lambda(fx.sys, x, along_y, 0.0)[0] == Approx(base[0]).epsilon(1e-15));

  sine.eps = 0.1;
  for (const auto& s : fx.samples) {
    const Vec f = perturbed_field(fx.sys, s, sine, 1.7);
    CHECK(std::fabs((constraint_gradient(fx.sys, s) * f)[0]) <= 1e-10);
  }
}

TEST_CASE("perturbation variants agree on the range of M^-1 mu^T", "[reduction]") {
  const auto sys = loaded_particle();
  const auto split = derive_connection(sys, Vec::Zero(3), std::vector<int>{2});
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& x : sample_on_distribution(sys, split, Vec::Zero(3), 1.0, 50, 26)) {
    const double w = u(rng);
    Vec gq(3);
    gq << u(rng), u(rng), u(rng);
    Perturbation p{[&](double, double, const StatePoint& s) {
                     Vec g(6);
                     g << gq, sys.mass_inverse() * sys.constraint_matrix(s.q).transpose() * w;
                     return g;
                   },
                   1, 0.1};
    CHECK(perturbation_variant_gap(sys, x, p, 0.0) <= 1e-12);
    Perturbation off{[&](double, double, const StatePoint&) {
                       Vec g(6);
                       g << gq, 0, 1, 0;
                       return g;
                     },
                     1, 0.1};
    CHECK(perturbation_variant_gap(sys, x, off, 0.0) > 1e-3);
  }
}

TEST_CASE("deformed constraint", "[reduction]") {
  const auto sys = nonholonomic_particle();
  const StatePoint x = testing::particle_start();
  const Deformation none(sys, {parse("v_x*v_y")}, 0.0);
  CHECK(deformed_c_matrix(sys, none, x).c == c_matrix(sys, x.q).c);

  const Deformation d(sys, {parse("v_x*v_y")}, 0.05);
  const Mat jac = d.jacobian(x);
  CHECK(jac(0, 3) == 1.0);
  CHECK(jac(0, 4) == 1.0);
  const double expected = 0.95 * 0.95 + 0.05 * 0.05 + 1.0;
  CHECK(deformed_c_matrix(sys, d, x).c(0, 0) == Approx(expected).epsilon(1e-15));
  CHECK(deformed_c_matrix(sys, d, x).c(0, 0) == Approx(1.905).epsilon(1e-15));
  CHECK_THROWS_AS(deformed_field(sys, d, x), PreconditionError);

  const StatePoint on = testing::make_state({0, 1, 0}, {1, 1, 0.95});
  CHECK(std::fabs(deformed_residual(sys, d, on)[0]) <= 1e-15);

  Fixture fx;
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (const auto& s : fx.samples) {
    CHECK(max_abs(deformed_field(sys, none, s) - h_field(sys, s)) <= 1e-13);
    const Deformation dd(sys, {parse("v_x*v_y")}, u(rng));
    const CMatrix c = deformed_c_matrix(sys, dd, s);
    CHECK(c.c == c.c.transpose());
    CHECK(Eigen::LLT<Mat>(c.c).info() == Eigen::Success);
  }
}

TEST_CASE("deformed constraint is a first integral of the deformed field", "[reduction]") {
  const auto sys = nonholonomic_particle();
  const double eps = 0.1;
  const Deformation d(sys, {parse("v_x*v_y")}, eps / 2);
  const VectorField f = make_deformed_field(sys, d);
  const StatePoint x0 = testing::make_state({0, 1, 0}, {1, 1, 1 - eps / 2});
  REQUIRE(std::fabs(deformed_residual(sys, d, x0)[0]) <= 1e-15);
  const double dt = 1e-3;
  for (int k = 0; k < 20; ++k) {
    const Vec y = reference_flow(f, stack(x0), 0.05 * k, 1e-4);
    const StatePoint s = unstack(y);
    CHECK(std::fabs(s.v[2] - s.q[1] * s.v[0] + eps / 2 * s.v[0] * s.v[1]) <= 1e-10);
    const double rate = (deformed_residual(sys, d, unstack(reference_flow(f, y, dt, 1e-4)))[0] -
                         deformed_residual(sys, d, unstack(reference_flow(f, y, -dt, 1e-4)))[0]) /
                        (2.0 * dt);
    CHECK(std::fabs(rate) <= 1e-8);
    const Vec fx = deformed_field(sys, d, s);
    Mat grad(1, 6);
    grad << constraint_gradient(sys, s) + d.delta() * d.jacobian(s);
    CHECK(std::fabs((grad * fx)(0, 0)) <= 1e-10);
  }
}
