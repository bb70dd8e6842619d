#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"
#include "mfcg/lq.hpp"
#include "mfcg/rng.hpp"

using namespace mfcg;

namespace {

// frozen reference values for the standard benchmark coefficients, beta = 1,
// sigma = 0.5, computed from the closed forms at 30-digit precision
constexpr double kGamma2 = 0.594097150806706609155844470476;
constexpr double kGamma1 = -0.286311879906846558629322636374;
constexpr double kGamma0 = 0.245841766337571940961096084696;
constexpr double kMean = 0.240963855421686746987951807229;

LqParams random_params(rng::Stream& rs) {
  for (;;) {
    LqParams p;
    p.c1 = 0.05 + 2.0 * rs.next_unit();
    p.c2 = -1.0 + 3.0 * rs.next_unit();
    p.c3 = 0.05 + 2.0 * rs.next_unit();
    p.c4 = -1.0 + 2.0 * rs.next_unit();
    p.ct1 = 0.05 + 2.0 * rs.next_unit();
    p.ct2 = -1.0 + 3.0 * rs.next_unit();
    p.ct5 = 0.05 + 1.0 * rs.next_unit();
    p.beta = 0.3 + 2.0 * rs.next_unit();
    p.sigma = 0.1 + 0.9 * rs.next_unit();
    p.dt = 0.001 + 0.05 * rs.next_unit();
    if (std::abs(p.denom()) > 0.1) return p;
  }
}

}  // namespace

TEST_CASE("running cost: zero coefficients and zero action cost nothing") {
  LqParams p;
  p.c1 = p.c2 = p.c3 = p.c4 = p.ct1 = p.ct2 = p.ct5 = 0.0;
  CHECK(running_cost(1.7, -0.3, 0.8, 0.0, p) == 0.0);
}

TEST_CASE("running cost: benchmark coefficients at the origin") {
  LqParams p;
  CHECK(running_cost(0.0, 0.0, 0.0, 1.0, p) ==
        doctest::Approx(0.53125).epsilon(1e-15));
}

TEST_CASE("running cost: benchmark coefficients at x = 1 with unit means") {
  LqParams p;
  CHECK(running_cost(1.0, 1.0, 1.0, 0.0, p) ==
        doctest::Approx(0.675).epsilon(1e-15));
}

TEST_CASE("env step: no noise and no drift is the identity") {
  LqParams p;
  p.sigma = 0.0;
  CHECK(env_step(0.77, 0.0, p, 1.3) == 0.77);
}

TEST_CASE("env step: deterministic drift") {
  LqParams p;
  p.sigma = 0.0;
  p.dt = 0.1;
  CHECK(env_step(1.0, 2.0, p, 0.0) == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("env step: Monte Carlo moments of the diffusion") {
  LqParams p;  // sigma 0.5, dt 0.01
  const long n = 1000000;
  rng::Stream rs(2024);
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = env_step(0.0, 0.0, p, rs.next_normal());
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double step_sd = p.sigma * std::sqrt(p.dt);
  CHECK(std::abs(mean) <= 3.0 * step_sd / 1000.0);
  CHECK(std::abs(var - step_sd * step_sd) <= 0.01 * step_sd * step_sd);
}

TEST_CASE("env step: batched version equals the scalar one bitwise") {
  LqParams p;
  rng::Stream rs(7);
  Eigen::VectorXd x(64), a(64), z(64), out;
  for (int i = 0; i < 64; ++i) {
    x(i) = rs.next_normal();
    a(i) = rs.next_normal();
    z(i) = rs.next_normal();
  }
  env_step(x, a, p, z, out);
  for (int i = 0; i < 64; ++i) CHECK(out(i) == env_step(x(i), a(i), p, z(i)));
}

TEST_CASE("reward is exactly -dt times the running cost") {
  LqParams p;
  CHECK(reward(0.0, 0.0, 0.0, 1.0, p) ==
        doctest::Approx(-0.0053125).epsilon(1e-15));
  rng::Stream rs(5);
  for (int i = 0; i < 100; ++i) {
    const double x = rs.next_normal(), mg = rs.next_normal(),
                 ml = rs.next_normal(), a = rs.next_normal();
    CHECK(reward(x, mg, ml, a, p) == -p.dt * running_cost(x, mg, ml, a, p));
  }
}

TEST_CASE("discount factor") {
  LqParams p;
  CHECK(discount_factor(p) ==
        doctest::Approx(0.99004983374916805).epsilon(1e-15));
  p.dt = 0.0;
  CHECK(discount_factor(p) == 1.0);
  p.dt = 0.01;
  p.beta = 0.0;
  CHECK(discount_factor(p) == 1.0);
}

TEST_CASE("analytical solution: benchmark values") {
  LqParams p;
  const AnalyticalSolution sol = analytical_solution(p);
  CHECK(std::abs(sol.gamma2 - kGamma2) <= 1e-12);
  CHECK(std::abs(sol.gamma1 - kGamma1) <= 1e-12);
  CHECK(std::abs(sol.gamma0 - kGamma0) <= 1e-12);
  CHECK(std::abs(sol.m - kMean) <= 1e-12);
  CHECK(std::abs(-sol.gamma1 / (2.0 * sol.gamma2) - sol.m) <= 1e-12);
  CHECK(sol.limit_mean == doctest::Approx(kMean).epsilon(1e-12));
  CHECK(sol.limit_var ==
        doctest::Approx(0.25 / (4.0 * kGamma2)).epsilon(1e-12));
}

TEST_CASE("analytical solution: zero c3 kills the linear term and the mean") {
  LqParams p;
  p.c3 = 0.0;
  const AnalyticalSolution sol = analytical_solution(p);
  CHECK(sol.gamma1 == 0.0);
  CHECK(sol.m == 0.0);
}

TEST_CASE("analytical solution: degenerate denominator is rejected") {
  LqParams p;
  p.c1 = 1.0;
  p.c2 = 2.0;  // c1(1-c2) = -1
  p.ct1 = 0.0;
  p.c3 = 0.75;
  p.ct5 = 0.25;  // D = 0
  CHECK(p.denom() == 0.0);
  CHECK_THROWS_AS(analytical_solution(p), UsageError);
}

TEST_CASE("fixed-point identity holds across random coefficient sets") {
  rng::Stream rs(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const LqParams p = random_params(rs);
    const AnalyticalSolution sol = analytical_solution(p);
    CHECK(sol.gamma2 > 0.0);
    CHECK(std::abs(-sol.gamma1 / (2.0 * sol.gamma2) - sol.m) <= 1e-12);
  }
}

TEST_CASE("optimal control: zero at the equilibrium mean") {
  LqParams p;
  const AnalyticalSolution sol = analytical_solution(p);
  CHECK(std::abs(optimal_control(sol.m, sol)) <= 1e-12);
  CHECK(optimal_control(1.0, sol) ==
        doctest::Approx(-0.901882421706566659682).epsilon(1e-12));
  AnalyticalSolution flat;
  flat.gamma2 = 0.7;
  CHECK(optimal_control(0.0, flat) == 0.0);
}

TEST_CASE("value function: quadratic with vertex at the mean") {
  LqParams p;
  const AnalyticalSolution sol = analytical_solution(p);
  CHECK(value_function(0.0, sol) == sol.gamma0);
  CHECK(std::abs(value_function(0.0, sol) - kGamma0) <= 1e-12);
  const double d = 0.37;
  CHECK(value_function(sol.m + d, sol) ==
        doctest::Approx(value_function(sol.m - d, sol)).epsilon(1e-12));
  CHECK(value_function(sol.m, sol) < value_function(sol.m + 0.1, sol));
}

TEST_CASE("stationary equation residual vanishes on the closed form") {
  LqParams p;
  const AnalyticalSolution sol = analytical_solution(p);
  for (double x : {-2.0, 0.0, 2.0})
    CHECK(std::abs(hjb_residual(x, sol, p)) <= 1e-8);
  for (double x = -3.0; x <= 3.0 + 1e-12; x += 0.01)
    CHECK(std::abs(hjb_residual(x, sol, p)) <= 1e-8);
}

TEST_CASE("stationary equation residual vanishes for random coefficients") {
  rng::Stream rs(123);
  for (int trial = 0; trial < 100; ++trial) {
    const LqParams p = random_params(rs);
    const AnalyticalSolution sol = analytical_solution(p);
    for (double x = -3.0; x <= 3.0 + 1e-12; x += 0.05)
      CHECK(std::abs(hjb_residual(x, sol, p)) <= 1e-8);
  }
}

TEST_CASE("perturbing the curvature makes the residual grow quadratically") {
  LqParams p;
  AnalyticalSolution sol = analytical_solution(p);
  sol.gamma2 += 0.01;
  const double r1 = hjb_residual(10.0, sol, p) - hjb_residual(0.0, sol, p);
  const double r2 = hjb_residual(20.0, sol, p) - hjb_residual(0.0, sol, p);
  CHECK(std::abs(hjb_residual(2.0, sol, p)) > 1e-3);  // the test has power
  CHECK(r2 / r1 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("all-zero cost with zero noise gives an identically zero residual") {
  LqParams p;
  p.c1 = p.c2 = p.c3 = p.c4 = p.ct1 = p.ct2 = p.ct5 = 0.0;
  p.sigma = 0.0;
  AnalyticalSolution sol;  // all gammas and means zero
  for (double x : {-5.0, -1.0, 0.0, 2.0})
    CHECK(hjb_residual(x, sol, p) == 0.0);
}

TEST_CASE("parameter json uses the documented keys and round-trips") {
  LqParams p;
  p.c4 = 0.33;
  p.sigma = 0.7;
  const nlohmann::json j = lq_to_json(p);
  for (const char* key :
       {"c1", "c2", "c3", "c4", "ct1", "ct2", "ct5", "beta", "sigma", "dt"})
    CHECK(j.contains(key));
  CHECK(j.size() == 10);
  const LqParams q = lq_from_json(j);
  CHECK(q.c4 == p.c4);
  CHECK(q.sigma == p.sigma);
  CHECK(q.denom() == p.denom());
}

TEST_CASE("parameter validation") {
  LqParams p;
  p.beta = 0.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = LqParams{};
  p.dt = -0.1;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = LqParams{};
  p.sigma = -1.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
}
