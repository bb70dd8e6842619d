#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mfcg/net.hpp"

namespace mfcg {

// k particle positions standing in for a mean-field distribution
struct EmpiricalMeasure {
  Eigen::VectorXd x;

  long size() const { return x.size(); }
};

double measure_mean(const EmpiricalMeasure& meas);
// unbiased; a single particle has variance 0 by convention
double measure_variance(const EmpiricalMeasure& meas);

struct LangevinConfig {
  double step_size = 0.05;
  int iterations = 200;
  int particles = 1000;
  bool warm_start = true;  // keep particle sets alive across refreshes
};

// particles whose magnitude passes this are treated as a failed score
inline constexpr double kLangevinGuard = 1e6;

struct ScoreLoss {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// mean over the batch of tr(dS/dx) + 0.5 |S(x)|^2 together with its exact
// parameter gradient; scalar states (d = 1)
ScoreLoss score_loss_exact(const MlpNet& net, const Eigen::VectorXd& states);

// trace term replaced by the probe quadratic form z (dS/dx) z, one probe per
// state; for d = 1 and |z| = 1 this equals the exact loss
ScoreLoss score_loss_hutchinson(const MlpNet& net,
                                const Eigen::VectorXd& states,
                                const Eigen::VectorXd& probes);

// Run cfg.iterations steps of x <- x + (eps/2) S(x) + sqrt(eps) z on every
// particle, each with its own noise stream derived from noise_key, and
// return the final particle set. step_size 0 is the identity. Throws
// DivergenceError when any particle escapes kLangevinGuard.
//
// For the common frozen 1-hidden-layer score the net is evaluated through a
// piecewise cubic Hermite table built from exact node values/derivatives
// (node spacing set from the net's own fourth-derivative bound, interpolation
// error < ~1e-9); positions outside the table fall back to a direct forward
// pass. MFCG_LANGEVIN_DIRECT=1 disables the table.
EmpiricalMeasure langevin_sample(const MlpNet& net, const LangevinConfig& cfg,
                                 const EmpiricalMeasure& init,
                                 std::uint64_t noise_key);

}  // namespace mfcg
