#include "mfcg/lq.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"

namespace mfcg {

double LqParams::denom() const {
  return c1 * (1.0 - c2) + ct1 * (1.0 - ct2) * (1.0 - ct2) + c3 + ct5;
}

void LqParams::validate() const {
  if (!(beta > 0.0)) throw UsageError("LqParams: beta must be positive");
  if (!(sigma >= 0.0)) throw UsageError("LqParams: sigma must be >= 0");
  if (!(dt > 0.0)) throw UsageError("LqParams: dt must be positive");
}

double AnalyticalSolution::limit_std() const { return std::sqrt(limit_var); }

double running_cost(double x, double m_global, double m_local, double a,
                    const LqParams& p) {
  const double dg = x - p.c2 * m_global;
  const double dc = x - p.c4;
  const double dl = x - p.ct2 * m_local;
  return 0.5 * a * a + p.c1 * dg * dg + p.c3 * dc * dc + p.ct1 * dl * dl +
         p.ct5 * m_local * m_local;
}

double reward(double x, double m_global, double m_local, double a,
              const LqParams& p) {
  return -running_cost(x, m_global, m_local, a, p) * p.dt;
}

double env_step(double x, double a, const LqParams& p, double z) {
  return x + a * p.dt + p.sigma * std::sqrt(p.dt) * z;
}

void env_step(const Eigen::VectorXd& x, const Eigen::VectorXd& a,
              const LqParams& p, const Eigen::VectorXd& z,
              Eigen::VectorXd& x_next) {
  if (x.size() != a.size() || x.size() != z.size())
    throw UsageError("env_step: batch size mismatch");
  x_next.resize(x.size());
  for (long i = 0; i < x.size(); ++i)
    x_next(i) = env_step(x(i), a(i), p, z(i));
}

double discount_factor(const LqParams& p) { return std::exp(-p.beta * p.dt); }

AnalyticalSolution analytical_solution(const LqParams& p) {
  p.validate();
  const double D = p.denom();
  if (D == 0.0)
    throw UsageError("analytical_solution: degenerate cost (denominator 0)");
  const double disc = p.beta * p.beta + 8.0 * (p.c1 + p.c3 + p.ct1);
  if (disc < 0.0)
    throw UsageError("analytical_solution: negative discriminant");
  AnalyticalSolution sol;
  sol.gamma2 = (-p.beta + std::sqrt(disc)) / 4.0;
  if (!(sol.gamma2 > 0.0))
    throw UsageError("analytical_solution: nonpositive curvature");
  sol.m = p.c3 * p.c4 / D;
  sol.gamma1 = -2.0 * sol.gamma2 * p.c3 * p.c4 / D;
  // constant term with both population means at the fixed point m
  sol.gamma0 = (p.c1 * p.c2 * p.c2 * sol.m * sol.m +
                (p.ct1 * p.ct2 * p.ct2 + p.ct5) * sol.m * sol.m +
                p.sigma * p.sigma * sol.gamma2 - 0.5 * sol.gamma1 * sol.gamma1 +
                p.c3 * p.c4 * p.c4) /
               p.beta;
  sol.limit_mean = -sol.gamma1 / (2.0 * sol.gamma2);
  sol.limit_var = p.sigma * p.sigma / (4.0 * sol.gamma2);
  return sol;
}

double optimal_control(double x, const AnalyticalSolution& sol) {
  return -(2.0 * sol.gamma2 * x + sol.gamma1);
}

double value_function(double x, const AnalyticalSolution& sol) {
  return sol.gamma2 * x * x + sol.gamma1 * x + sol.gamma0;
}

double hjb_residual(double x, const AnalyticalSolution& sol,
                    const LqParams& p) {
  const double g = running_cost(x, sol.m, sol.m, 0.0, p);
  const double vp = 2.0 * sol.gamma2 * x + sol.gamma1;
  const double mean_field_term =
      2.0 * sol.m * (p.ct5 + p.ct1 * p.ct2 * (p.ct2 - 1.0));
  const double rhs = g - 0.5 * vp * vp + p.sigma * p.sigma * sol.gamma2 +
                     x * mean_field_term;
  return p.beta * value_function(x, sol) - rhs;
}

nlohmann::json lq_to_json(const LqParams& p) {
  return nlohmann::json{{"c1", p.c1},   {"c2", p.c2},       {"c3", p.c3},
                        {"c4", p.c4},   {"ct1", p.ct1},     {"ct2", p.ct2},
                        {"ct5", p.ct5}, {"beta", p.beta},   {"sigma", p.sigma},
                        {"dt", p.dt}};
}

LqParams lq_from_json(const nlohmann::json& j) {
  LqParams p;
  p.c1 = j.at("c1").get<double>();
  p.c2 = j.at("c2").get<double>();
  p.c3 = j.at("c3").get<double>();
  p.c4 = j.at("c4").get<double>();
  p.ct1 = j.at("ct1").get<double>();
  p.ct2 = j.at("ct2").get<double>();
  p.ct5 = j.at("ct5").get<double>();
  p.beta = j.at("beta").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.dt = j.at("dt").get<double>();
  p.validate();
  return p;
}

}  // namespace mfcg
