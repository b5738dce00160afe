#include <catch_amalgamated.hpp>

#include <cstring>

#include "nonholo/parallel.hpp"
#include "nonholo/sweep.hpp"
#include "test_support.hpp"

using namespace nonholo;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_rows(const StudyRow& a, const StudyRow& b) {
  return same_bits(a.eps, b.eps) && a.steps == b.steps && a.ok == b.ok && a.error == b.error &&
         same_bits(a.q_error, b.q_error) && same_bits(a.v_error, b.v_error) &&
         same_bits(a.state_error, b.state_error) && same_bits(a.lambda_error, b.lambda_error) &&
         same_bits(a.max_residual, b.max_residual) &&
         same_bits(a.max_deformed_residual, b.max_deformed_residual) &&
         same_bits(a.energy_drift, b.energy_drift);
}

StudyConfig particle_study(SchemeKind kind) {
  StudyConfig cfg;
  cfg.integrator.spec.kind = kind;
  cfg.T = 0.2;
  cfg.eps = {0.02, 0.01, 0.005, 0.0025};
  cfg.x0 = testing::particle_start();
  cfg.fiber = std::vector<int>{2};
  return cfg;
}

}  // namespace

TEST_CASE("parallel map preserves order and rethrows", "[sweep]") {
  auto square = [](std::size_t i) { return static_cast<double>(i * i); };
  CHECK(map_parallel(100, square, 4) == map_serial(100, square));
  CHECK(map_indices(7, square, 1) == map_serial(7, square));
  auto failing = [](std::size_t i) -> int {
    if (i == 3 || i == 9) throw std::runtime_error("index " + std::to_string(i));
    return static_cast<int>(i);
  };
  try {
    map_parallel(12, failing, 4);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "index 3");
  }
}

TEST_CASE("parallel convergence study is bitwise identical to the serial one", "[sweep]") {
  const auto sys = nonholonomic_particle();
  for (SchemeKind kind : {SchemeKind::Vni10, SchemeKind::Vni20, SchemeKind::OriginalNode}) {
    const StudyConfig cfg = particle_study(kind);
    const StudyResult serial = converge_serial(sys, cfg);
    const StudyResult parallel = converge_parallel(sys, cfg, 4);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i)
      CHECK(same_rows(serial.rows[i], parallel.rows[i]));
    REQUIRE(serial.state_slope.has_value());
    CHECK(same_bits(*serial.state_slope, *parallel.state_slope));
    CHECK(to_json(serial, cfg) == to_json(parallel, cfg));
  }
}

TEST_CASE("parallel tangency kernel is bitwise identical to the serial one", "[sweep]") {
  const auto sys = nonholonomic_particle();
  const auto split = derive_connection(sys, Vec::Zero(3), std::vector<int>{2});
  const auto xs = sample_on_distribution(sys, split, Vec::Zero(3), 2.0, 1000, 77);
  const double serial = max_tangency_defect_serial(sys, xs);
  CHECK(same_bits(serial, max_tangency_defect_parallel(sys, xs, 4)));
  CHECK(serial <= 1e-10);
}

TEST_CASE("study slopes and reference self-convergence", "[sweep]") {
  const auto sys = nonholonomic_particle();
  StudyConfig cfg = particle_study(SchemeKind::Vni10);
  cfg.integrator.reference = true;
  cfg.eps = {0.1, 0.05, 0.025, 0.0125};
  cfg.T = 0.5;
  const StudyResult r = converge_parallel(sys, cfg, 4);
  REQUIRE(r.state_slope.has_value());
  CHECK(*r.state_slope >= 3.7);
  CHECK(*r.state_slope <= 4.3);

  StudyConfig few = particle_study(SchemeKind::Vni10);
  few.eps = {0.02, 0.01, 0.005};
  CHECK_FALSE(converge_serial(sys, few).state_slope.has_value());
}

TEST_CASE("samples are reproducible", "[sweep]") {
  const auto sys = nonholonomic_particle();
  const auto split = derive_connection(sys, Vec::Zero(3), std::vector<int>{2});
  const auto a = sample_on_distribution(sys, split, Vec::Zero(3), 1.0, 10, 5);
  const auto b = sample_on_distribution(sys, split, Vec::Zero(3), 1.0, 10, 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(stack(a[i]) == stack(b[i]));
}
