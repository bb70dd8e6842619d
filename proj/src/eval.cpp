#include "mfcg/eval.hpp"

#include <algorithm>
#include <cmath>

#include "mfcg/errors.hpp"

namespace mfcg {

void GridSpec::validate() const {
  if (!(lower < upper)) throw UsageError("grid: lower must be below upper");
  if (!(step > 0.0)) throw UsageError("grid: step must be positive");
}

std::vector<double> GridSpec::points() const {
  validate();
  const long n = static_cast<long>(std::floor((upper - lower) / step + 1e-9)) + 1;
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    xs[static_cast<std::size_t>(i)] = lower + step * static_cast<double>(i);
  return xs;
}

GridSpec GridSpec::parse(const std::string& spec) {
  GridSpec g;
  const auto a = spec.find(':');
  const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos)
    throw UsageError("grid spec must look like lo:hi:step");
  try {
    g.lower = std::stod(spec.substr(0, a));
    g.upper = std::stod(spec.substr(a + 1, b - a - 1));
    g.step = std::stod(spec.substr(b + 1));
  } catch (const std::exception&) {
    throw UsageError("could not parse grid spec: " + spec);
  }
  g.validate();
  return g;
}

std::string GridSpec::str() const {
  return std::to_string(lower) + ":" + std::to_string(upper) + ":" +
         std::to_string(step);
}

GridSpec default_grid(const AnalyticalSolution& sol, double step) {
  GridSpec g;
  const double s = sol.limit_std();
  g.lower = sol.m - 4.0 * s;
  g.upper = sol.m + 4.0 * s;
  g.step = step;
  return g;
}

ValueErrors eval_value(const MlpNet& critic, const AnalyticalSolution& sol,
                       const GridSpec& grid) {
  ValueErrors err;
  Workspace ws;
  double sq_sum = 0.0;
  long n = 0;
  for (const double x : grid.points()) {
    const double e = std::abs(critic.value1(x, ws) - value_function(x, sol));
    err.sup = std::max(err.sup, e);
    sq_sum += e * e;
    ++n;
  }
  err.l2 = std::sqrt(sq_sum / static_cast<double>(n));
  return err;
}

double eval_policy(const GaussianPolicy& actor, const AnalyticalSolution& sol,
                   const GridSpec& grid) {
  GaussianPolicy::Workspaces ws;
  double sup = 0.0;
  for (const double x : grid.points()) {
    double mean, stddev;
    actor.forward_heads(x, ws, mean, stddev);
    sup = std::max(sup, std::abs(mean - optimal_control(x, sol)));
  }
  return sup;
}

double normal_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * 1.4142135623730951));
}

DistributionErrors eval_distribution(const EmpiricalMeasure& meas,
                                     const AnalyticalSolution& sol) {
  if (meas.size() == 0) throw UsageError("eval_distribution: no particles");
  DistributionErrors err;
  err.mean_err = std::abs(measure_mean(meas) - sol.m);
  err.std_err = std::abs(std::sqrt(measure_variance(meas)) - sol.limit_std());

  std::vector<double> xs(meas.x.data(), meas.x.data() + meas.size());
  std::sort(xs.begin(), xs.end());
  const double k = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = normal_cdf(xs[i], sol.limit_mean,
                                  std::sqrt(sol.limit_var));
    const double hi = (static_cast<double>(i) + 1.0) / k - cdf;
    const double lo = cdf - static_cast<double>(i) / k;
    d = std::max(d, std::max(hi, lo));
  }
  err.ks = d;
  return err;
}

const std::array<const char*, RunReport::kFields>& RunReport::field_names() {
  static const std::array<const char*, kFields> names = {
      "value_sup",      "value_l2",       "policy_sup",
      "mean_err_global", "mean_err_local", "std_err_global",
      "std_err_local",  "ks_global",      "ks_local"};
  return names;
}

std::array<double, RunReport::kFields> RunReport::values() const {
  return {value_sup,      value_l2,       policy_sup,
          mean_err_global, mean_err_local, std_err_global,
          std_err_local,  ks_global,      ks_local};
}

RunReport RunReport::from_values(const std::array<double, kFields>& v) {
  RunReport r;
  r.value_sup = v[0];
  r.value_l2 = v[1];
  r.policy_sup = v[2];
  r.mean_err_global = v[3];
  r.mean_err_local = v[4];
  r.std_err_global = v[5];
  r.std_err_local = v[6];
  r.ks_global = v[7];
  r.ks_local = v[8];
  return r;
}

AggregateReport aggregate_runs(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw UsageError("aggregate_runs: no reports");
  const double n = static_cast<double>(reports.size());
  std::array<double, RunReport::kFields> mean{}, var{};
  for (const auto& r : reports) {
    const auto v = r.values();
    for (int f = 0; f < RunReport::kFields; ++f) mean[f] += v[f];
  }
  for (int f = 0; f < RunReport::kFields; ++f) mean[f] /= n;
  if (reports.size() > 1) {
    for (const auto& r : reports) {
      const auto v = r.values();
      for (int f = 0; f < RunReport::kFields; ++f) {
        const double d = v[f] - mean[f];
        var[f] += d * d;
      }
    }
    for (int f = 0; f < RunReport::kFields; ++f) var[f] /= (n - 1.0);
  }
  AggregateReport agg;
  agg.mean = RunReport::from_values(mean);
  std::array<double, RunReport::kFields> sd{};
  for (int f = 0; f < RunReport::kFields; ++f) sd[f] = std::sqrt(var[f]);
  agg.stddev = RunReport::from_values(sd);
  agg.runs = static_cast<int>(reports.size());
  return agg;
}

}  // namespace mfcg
