#include "mfcg/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <vector>

#include "mfcg/errors.hpp"
#include "mfcg/pool.hpp"
#include "mfcg/rng.hpp"

namespace mfcg {

double measure_mean(const EmpiricalMeasure& meas) {
  if (meas.size() == 0) throw UsageError("empty particle set");
  double s = 0.0;
  for (long i = 0; i < meas.size(); ++i) s += meas.x(i);
  return s / static_cast<double>(meas.size());
}

double measure_variance(const EmpiricalMeasure& meas) {
  const long k = meas.size();
  if (k == 0) throw UsageError("empty particle set");
  if (k == 1) return 0.0;
  const double mu = measure_mean(meas);
  double s = 0.0;
  for (long i = 0; i < k; ++i) {
    const double d = meas.x(i) - mu;
    s += d * d;
  }
  return s / static_cast<double>(k - 1);
}

namespace {

constexpr long kLossGrain = 64;

// shared batched loss driver; trace_probe(i) supplies the forward-mode
// direction/upstream per sample (1 for the exact trace)
template <typename ProbeFn>
ScoreLoss batched_score_loss(const MlpNet& net, const Eigen::VectorXd& states,
                             ProbeFn&& probe) {
  if (net.input_dim() != 1 || net.output_dim() != 1)
    throw UsageError("score loss expects a scalar score network");
  const long n = states.size();
  if (n == 0) throw UsageError("score loss needs a nonempty batch");
  if (!states.allFinite()) throw UsageError("non-finite states");

  const int P = net.param_count();
  const long nblocks = (n + kLossGrain - 1) / kLossGrain;
  std::vector<double> block_loss(static_cast<std::size_t>(nblocks), 0.0);
  std::vector<Eigen::VectorXd> block_grad(static_cast<std::size_t>(nblocks));

  parallel_blocks(n, kLossGrain, [&](long begin, long end) {
    const long b = begin / kLossGrain;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(P);
    double loss = 0.0;
    Workspace ws;
    Tangent t;
    Eigen::VectorXd xv(1), yv, dir(1), dy, up(1);
    for (long i = begin; i < end; ++i) {
      xv(0) = states(i);
      net.forward(xv, yv, ws);
      const double z = probe(i);
      dir(0) = z;
      net.jvp(ws, dir, dy, t);
      loss += z * dy(0) + 0.5 * yv(0) * yv(0);
      // d(0.5 y^2)/dtheta flows through y, the trace term through the jvp
      net.backward(ws, yv, grad);
      up(0) = z;
      net.grad_of_jvp(ws, t, up, grad);
    }
    block_loss[static_cast<std::size_t>(b)] = loss;
    block_grad[static_cast<std::size_t>(b)] = std::move(grad);
  });

  ScoreLoss out;
  out.grad = Eigen::VectorXd::Zero(P);
  for (long b = 0; b < nblocks; ++b) {
    out.loss += block_loss[static_cast<std::size_t>(b)];
    out.grad += block_grad[static_cast<std::size_t>(b)];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad *= inv_n;
  if (!std::isfinite(out.loss) || !out.grad.allFinite())
    throw DivergenceError("score loss is not finite");
  return out;
}

}  // namespace

ScoreLoss score_loss_exact(const MlpNet& net, const Eigen::VectorXd& states) {
  return batched_score_loss(net, states, [](long) { return 1.0; });
}

ScoreLoss score_loss_hutchinson(const MlpNet& net,
                                const Eigen::VectorXd& states,
                                const Eigen::VectorXd& probes) {
  if (probes.size() != states.size())
    throw UsageError("need one probe per state");
  if (!probes.allFinite()) throw UsageError("non-finite probes");
  return batched_score_loss(net, states,
                            [&](long i) { return probes(i); });
}

namespace {

// Cubic Hermite table over the frozen score with exact fallback outside the
// fitted range.
struct ScoreTable {
  double lo = 0.0, hi = 0.0, inv_h = 0.0, h = 0.0;
  std::vector<double> f, fp;
  bool usable = false;

  double eval(double x, const MlpNet& net, Workspace& ws) const {
    if (!usable || x < lo || x > hi) return net.value1(x, ws);
    double s = (x - lo) * inv_h;
    long i = static_cast<long>(s);
    const long last = static_cast<long>(f.size()) - 2;
    if (i > last) i = last;
    const double u = s - static_cast<double>(i);
    const double u2 = u * u, u3 = u2 * u;
    return f[i] * (2 * u3 - 3 * u2 + 1) + f[i + 1] * (-2 * u3 + 3 * u2) +
           h * fp[i] * (u3 - 2 * u2 + u) + h * fp[i + 1] * (u3 - u2);
  }
};

bool table_eligible(const MlpNet& net) {
  if (std::getenv("MFCG_LANGEVIN_DIRECT")) return false;
  return net.layers().size() == 2 && net.input_dim() == 1 &&
         net.output_dim() == 1 && net.layers()[0].act == Act::Tanh &&
         net.layers()[1].act == Act::Identity &&
         net.head() == HeadMap::Identity;
}

ScoreTable build_table(const MlpNet& net, const LangevinConfig& cfg,
                       const EmpiricalMeasure& init) {
  ScoreTable tab;
  if (!table_eligible(net)) return tab;

  // fourth-derivative bound of sum_j w2_j tanh(w1_j x + b1_j)
  const int hdim = net.layers()[0].out;
  const double* w1 = net.params().data() + net.weight_offset(0);
  const double* w2 = net.params().data() + net.weight_offset(1);
  double b4 = 0.0;
  for (int j = 0; j < hdim; ++j) {
    const double a = std::abs(w1[j]);
    b4 += std::abs(w2[j]) * a * a * a * a;
  }
  b4 *= 4.1;  // max |tanh''''| is about 4.086
  double h = (b4 > 0.0) ? std::pow(384.0 * 1e-9 / b4, 0.25) : 0.25;
  h = std::clamp(h, 1e-3, 0.25);

  const double pad =
      2.0 + 2.0 * std::sqrt(std::max(0.0, cfg.step_size) * cfg.iterations);
  double lo = init.x.minCoeff() - pad;
  double hi = init.x.maxCoeff() + pad;
  long nodes = static_cast<long>(std::ceil((hi - lo) / h)) + 2;
  const long kMaxNodes = 1 << 16;
  if (nodes > kMaxNodes) {
    nodes = kMaxNodes;
    h = (hi - lo) / static_cast<double>(nodes - 1);
  }
  // only worth building when it saves evaluations
  if (nodes * 2 >= static_cast<long>(cfg.iterations) * init.size()) return tab;

  tab.lo = lo;
  tab.hi = lo + h * static_cast<double>(nodes - 1);
  tab.h = h;
  tab.inv_h = 1.0 / h;
  tab.f.resize(static_cast<std::size_t>(nodes));
  tab.fp.resize(static_cast<std::size_t>(nodes));
  Workspace ws;
  Tangent t;
  Eigen::VectorXd xv(1), yv, dir(1), dy;
  dir(0) = 1.0;
  for (long i = 0; i < nodes; ++i) {
    xv(0) = tab.lo + h * static_cast<double>(i);
    net.forward(xv, yv, ws);
    net.jvp(ws, dir, dy, t);
    tab.f[static_cast<std::size_t>(i)] = yv(0);
    tab.fp[static_cast<std::size_t>(i)] = dy(0);
  }
  tab.usable = true;
  return tab;
}

constexpr long kChainGrain = 64;

}  // namespace

EmpiricalMeasure langevin_sample(const MlpNet& net, const LangevinConfig& cfg,
                                 const EmpiricalMeasure& init,
                                 std::uint64_t noise_key) {
  if (init.size() == 0) throw UsageError("langevin_sample: no particles");
  if (cfg.step_size < 0.0) throw UsageError("langevin_sample: step size < 0");
  if (!init.x.allFinite()) throw UsageError("non-finite particles");
  EmpiricalMeasure out = init;
  if (cfg.step_size == 0.0 || cfg.iterations <= 0) return out;
  if (net.input_dim() != 1 || net.output_dim() != 1)
    throw UsageError("langevin_sample expects a scalar score network");

  const ScoreTable tab = build_table(net, cfg, init);
  const double half_eps = 0.5 * cfg.step_size;
  const double noise_scale = std::sqrt(cfg.step_size);

  std::mutex err_mutex;
  std::exception_ptr first_error;
  parallel_blocks(out.size(), kChainGrain, [&](long begin, long end) {
    try {
      Workspace ws;
      for (long i = begin; i < end; ++i) {
        rng::Stream rs(rng::mix(noise_key, static_cast<std::uint64_t>(i)));
        double x = out.x(i);
        for (int it = 0; it < cfg.iterations; ++it) {
          x += half_eps * tab.eval(x, net, ws) + noise_scale * rs.next_normal();
          if (!(std::abs(x) <= kLangevinGuard))
            throw DivergenceError("langevin particle diverged");
        }
        out.x(i) = x;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace mfcg
