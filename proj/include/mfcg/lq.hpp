#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace mfcg {

// Linear-quadratic benchmark coefficients. ct* are the within-group cost
// weights, c* the cross-population ones; d = 1 throughout.
struct LqParams {
  double c1 = 0.5;
  double c2 = 1.5;
  double c3 = 0.5;
  double c4 = 0.25;
  double ct1 = 0.3;
  double ct2 = 1.25;
  double ct5 = 0.25;
  double beta = 1.0;   // discount rate
  double sigma = 0.5;  // diffusion coefficient
  double dt = 0.01;    // time step

  // c1(1-c2) + ct1(1-ct2)^2 + c3 + ct5; must stay away from zero for the
  // closed-form solution to exist
  double denom() const;
  void validate() const;  // beta > 0, sigma >= 0, dt > 0
};

// Closed-form equilibrium: quadratic value function, its minimizing control,
// the fixed-point mean and the stationary Gaussian of the controlled process.
struct AnalyticalSolution {
  double gamma2 = 0.0;
  double gamma1 = 0.0;
  double gamma0 = 0.0;
  double m = 0.0;  // equilibrium population mean
  double limit_mean = 0.0;
  double limit_var = 0.0;
  double limit_std() const;
};

// running cost: 0.5 a^2 + c1 (x - c2 m)^2 + c3 (x - c4)^2
//             + ct1 (x - ct2 m_local)^2 + ct5 m_local^2
double running_cost(double x, double m_global, double m_local, double a,
                    const LqParams& p);

// reward = -running_cost * dt
double reward(double x, double m_global, double m_local, double a,
              const LqParams& p);

// one Euler-Maruyama step: x + a dt + sigma sqrt(dt) z
double env_step(double x, double a, const LqParams& p, double z);

// batched step, element i uses draw z(i); identical arithmetic to the scalar
void env_step(const Eigen::VectorXd& x, const Eigen::VectorXd& a,
              const LqParams& p, const Eigen::VectorXd& z,
              Eigen::VectorXd& x_next);

// exp(-beta dt)
double discount_factor(const LqParams& p);

// throws DivergenceError-free UsageError when the denominator vanishes or
// the quadratic coefficient is not positive
AnalyticalSolution analytical_solution(const LqParams& p);

double optimal_control(double x, const AnalyticalSolution& sol);
double value_function(double x, const AnalyticalSolution& sol);

// Stationary equation residual of the candidate solution. Includes the
// McKean-Vlasov term from the controlled local mean,
//   x * 2 m (ct5 + ct1 ct2 (ct2 - 1)),
// without which the closed form does not satisfy the pointwise equation.
// Identically zero (to rounding) when sol = analytical_solution(p).
double hjb_residual(double x, const AnalyticalSolution& sol,
                    const LqParams& p);

nlohmann::json lq_to_json(const LqParams& p);
LqParams lq_from_json(const nlohmann::json& j);

}  // namespace mfcg
