#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nonholo/error.hpp"
#include "nonholo/flow.hpp"
#include "nonholo/reduction.hpp"
#include "test_support.hpp"

using namespace nonholo;
using expr::parse;
using Catch::Approx;

TEST_CASE("rk4 step", "[flow]") {
  const VectorField zero = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  Vec x(2);
  x << 0.3, -1.0;
  CHECK(rk4_step(zero, x, 0.1) == x);

  const VectorField growth = [](const Vec& z) { return z; };
  const Vec z1 = rk4_step(growth, Vec::Ones(1), 0.1);
  CHECK(z1[0] == Approx(1.1051708333333333).epsilon(1e-15));
  CHECK(std::fabs(z1[0] - std::exp(0.1)) <= 1e-7);

  const VectorField bad = [](const Vec& z) { return Vec(z.array() / 0.0); };
  CHECK_THROWS_AS(rk4_step(bad, Vec::Ones(1), 0.1), NumericalError);

  const auto sys = nonholonomic_particle();
  const Vec y = rk4_step(make_h_field(sys), stack(testing::particle_start()), 1e-3);
  CHECK(std::fabs(constraint_residual(sys, unstack(y))[0]) <= 1e-12);
}

TEST_CASE("step counts", "[flow]") {
  CHECK(steps_for(1.0, 1e-4) == 10000);
  CHECK(steps_for(0.3, 0.1) == 3);
  CHECK(steps_for(0.35, 0.1) == 4);
}

TEST_CASE("reference flow on the particle", "[flow]") {
  const auto sys = nonholonomic_particle();
  const StatePoint x0 = testing::particle_start();
  const Trajectory traj = integrate(sys, make_h_field(sys), x0, 1.0, 1e-4);
  REQUIRE(traj.size() == 10001);
  double residual = 0.0, energy_drift = 0.0, vy_drift = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    residual = std::max(residual, max_abs(traj.residual[k]));
    energy_drift = std::max(energy_drift, std::fabs(traj.energy[k] - traj.energy[0]));
    vy_drift = std::max(vy_drift, std::fabs(traj.x[k].v[1] - x0.v[1]));
  }
  CHECK(residual <= 1e-10);
  CHECK(energy_drift <= 1e-10);
  CHECK(vy_drift <= 1e-12);
  CHECK(traj.lambda[0][0] == Approx(0.5).epsilon(1e-15));

  const Trajectory projected = integrate(sys, make_h_field(sys), x0, 1.0, 1e-2, true);
  for (const auto& r : projected.residual) CHECK(max_abs(r) <= 1e-12);

  const Trajectory single = integrate(sys, make_h_field(sys), x0, 0.0, 1e-4);
  CHECK(single.size() == 1);
}

TEST_CASE("rk4 self-convergence", "[flow]") {
  const auto sys = nonholonomic_particle();
  const VectorField f = make_h_field(sys);
  const Vec x0 = stack(testing::particle_start());
  const double h = 0.05;
  const Vec a = reference_flow(f, x0, 1.0, h);
  const Vec b = reference_flow(f, x0, 1.0, h / 2);
  const Vec c = reference_flow(f, x0, 1.0, h / 4);
  const double ratio = (a - b).norm() / (b - c).norm();
  CHECK(ratio >= 14.0);
  CHECK(ratio <= 18.0);
}

TEST_CASE("flow map identities", "[flow]") {
  const auto sys = nonholonomic_particle();
  const StatePoint x0 = testing::particle_start();
  const StatePoint same = reference_flow(sys, x0, 0.0);
  CHECK(stack(same) == stack(x0));
  for (double s : {0.03, 0.1})
    for (double t : {0.05, 0.1}) {
      const Vec two = stack(reference_flow(sys, reference_flow(sys, x0, t), s));
      const Vec one = stack(reference_flow(sys, x0, s + t));
      CHECK(max_abs(two - one) <= 1e-9);
    }
  const Vec back = stack(reference_flow(sys, reference_flow(sys, x0, 0.1), -0.1));
  CHECK(max_abs(back - stack(x0)) <= 1e-12);
}

TEST_CASE("reduced field integrates to the same flow", "[flow]") {
  const auto sys = nonholonomic_particle();
  const auto split = derive_connection(sys, Vec::Zero(3), std::vector<int>{2});
  const StatePoint x0 = testing::particle_start();
  const Vec xi = reference_flow(make_reduced_field(sys, split), psi_project(split, x0), 0.5);
  const Vec full = stack(reference_flow(sys, x0, 0.5));
  CHECK(max_abs(psi_embed(sys, split, xi) - full) <= 1e-12);
}

TEST_CASE("blow-up keeps the partial trajectory", "[flow]") {
  const auto sys = MechanicalSystem({"x"}, Mat::Identity(1, 1), parse("-x^4"), {});
  const StatePoint x0 = testing::make_state({0.0}, {1.0});
  try {
    integrate(sys, make_h_field(sys), x0, 10.0, 1e-2);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.partial().size() > 1);
    CHECK(e.partial().t.front() == 0.0);
    CHECK(stack(e.partial().x.back()).norm() <= kBlowUpNorm);
  }
}

TEST_CASE("trajectory csv", "[flow]") {
  const auto sys = nonholonomic_particle();
  const Trajectory traj = integrate(sys, make_h_field(sys), testing::particle_start(), 0.2, 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const std::string text = os.str();
  CHECK(text.rfind("t,q_1,q_2,q_3,v_1,v_2,v_3,lambda_1,residual_1,energy\r\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(std::stod(format_number(0.1)) == 0.1);
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
