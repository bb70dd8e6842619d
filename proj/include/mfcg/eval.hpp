#pragma once

#include <array>
#include <string>
#include <vector>

#include "mfcg/agents.hpp"
#include "mfcg/lq.hpp"
#include "mfcg/score.hpp"

namespace mfcg {

struct GridSpec {
  double lower = -1.0;
  double upper = 1.0;
  double step = 0.01;

  void validate() const;  // lower < upper, step > 0
  std::vector<double> points() const;
  static GridSpec parse(const std::string& spec);  // "lo:hi:step"
  std::string str() const;
};

// [m - 4 s, m + 4 s] with s the limiting standard deviation: the region the
// trained critic actually visits
GridSpec default_grid(const AnalyticalSolution& sol, double step = 0.01);

struct ValueErrors {
  double sup = 0.0;
  double l2 = 0.0;  // root mean square over the grid
};

ValueErrors eval_value(const MlpNet& critic, const AnalyticalSolution& sol,
                       const GridSpec& grid);

// sup over the grid of |policy mean - optimal control|
double eval_policy(const GaussianPolicy& actor, const AnalyticalSolution& sol,
                   const GridSpec& grid);

struct DistributionErrors {
  double mean_err = 0.0;
  double std_err = 0.0;
  double ks = 0.0;  // Kolmogorov-Smirnov vs the limiting Gaussian
};

DistributionErrors eval_distribution(const EmpiricalMeasure& meas,
                                     const AnalyticalSolution& sol);

double normal_cdf(double x, double mean, double stddev);

// per-run summary; field order matches field_names()
struct RunReport {
  double value_sup = 0.0;
  double value_l2 = 0.0;
  double policy_sup = 0.0;
  double mean_err_global = 0.0;
  double mean_err_local = 0.0;
  double std_err_global = 0.0;
  double std_err_local = 0.0;
  double ks_global = 0.0;
  double ks_local = 0.0;

  static constexpr int kFields = 9;
  static const std::array<const char*, kFields>& field_names();
  std::array<double, kFields> values() const;
  static RunReport from_values(const std::array<double, kFields>& v);
};

struct AggregateReport {
  RunReport mean;
  RunReport stddev;  // sample standard deviation; zero for a single run
  int runs = 0;
};

AggregateReport aggregate_runs(const std::vector<RunReport>& reports);

}  // namespace mfcg
