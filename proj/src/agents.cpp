#include "mfcg/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"
#include "mfcg/pool.hpp"

namespace mfcg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr long kGrain = 64;
}  // namespace

GaussianPolicy::GaussianPolicy(int input_dim, int trunk_width, int head_width)
    : trunk_({{input_dim, trunk_width, Act::Tanh}}),
      mean_head_(MlpNet::mlp(trunk_width, {head_width}, 1)),
      std_head_(MlpNet::mlp(trunk_width, {head_width}, 1, HeadMap::Softplus)) {}

void GaussianPolicy::init_params(rng::Stream& rs) {
  trunk_.init_params(rs);
  mean_head_.init_params(rs);
  std_head_.init_params(rs);
}

int GaussianPolicy::param_count() const {
  return trunk_.param_count() + mean_head_.param_count() +
         std_head_.param_count();
}

Eigen::VectorXd GaussianPolicy::params_flat() const {
  Eigen::VectorXd p(param_count());
  p << trunk_.params(), mean_head_.params(), std_head_.params();
  return p;
}

void GaussianPolicy::set_params_flat(const Eigen::VectorXd& p) {
  if (p.size() != param_count())
    throw UsageError("policy parameter size mismatch");
  long off = 0;
  trunk_.params() = p.segment(off, trunk_.param_count());
  off += trunk_.param_count();
  mean_head_.params() = p.segment(off, mean_head_.param_count());
  off += mean_head_.param_count();
  std_head_.params() = p.segment(off, std_head_.param_count());
}

void GaussianPolicy::forward_heads(double x, Workspaces& ws, double& mean,
                                   double& stddev) const {
  ws.x.resize(1);
  ws.x(0) = x;
  trunk_.forward(ws.x, ws.trunk_out, ws.trunk);
  mean_head_.forward(ws.trunk_out, ws.head_out, ws.mean);
  mean = ws.head_out(0);
  std_head_.forward(ws.trunk_out, ws.head_out, ws.std);
  stddev = ws.head_out(0);
}

void GaussianPolicy::backward_heads(Workspaces& ws, double dmean, double dstd,
                                    Eigen::Ref<Eigen::VectorXd> grad) const {
  const long nt = trunk_.param_count();
  const long nm = mean_head_.param_count();
  const long ns = std_head_.param_count();
  ws.up.resize(1);
  ws.up(0) = dmean;
  mean_head_.backward(ws.mean, ws.up, grad.segment(nt, nm), &ws.gin_mean);
  ws.up(0) = dstd;
  std_head_.backward(ws.std, ws.up, grad.segment(nt + nm, ns), &ws.gin_std);
  ws.gin_sum = ws.gin_mean + ws.gin_std;
  trunk_.backward(ws.trunk, ws.gin_sum, grad.segment(0, nt));
}

double gaussian_logpdf(double a, double mean, double stddev) {
  const double z = (a - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - 0.5 * kLog2Pi;
}

double gaussian_entropy(double stddev) {
  return 0.5 * (kLog2Pi + 1.0) + std::log(stddev);
}

ActionSample policy_sample(const GaussianPolicy& policy, double x, double z) {
  GaussianPolicy::Workspaces ws;
  double mean, stddev;
  policy.forward_heads(x, ws, mean, stddev);
  ActionSample s;
  s.action = mean + stddev * z;
  s.logprob = gaussian_logpdf(s.action, mean, stddev);
  return s;
}

double policy_logprob(const GaussianPolicy& policy, double x, double a) {
  GaussianPolicy::Workspaces ws;
  double mean, stddev;
  policy.forward_heads(x, ws, mean, stddev);
  return gaussian_logpdf(a, mean, stddev);
}

double policy_entropy(const GaussianPolicy& policy, double x) {
  GaussianPolicy::Workspaces ws;
  double mean, stddev;
  policy.forward_heads(x, ws, mean, stddev);
  return gaussian_entropy(stddev);
}

void target_sync(CriticPair& pair, long step) {
  if (pair.sync_period <= 0) throw UsageError("sync period must be positive");
  if (step % pair.sync_period == 0) pair.target.params() = pair.critic.params();
}

double td_target(double r, double x_next, const MlpNet& target_net,
                 double gamma) {
  return r + gamma * target_net.value1(x_next);
}

Eigen::VectorXd batch_values(const MlpNet& net, const Eigen::VectorXd& xs) {
  Eigen::VectorXd out(xs.size());
  parallel_blocks(xs.size(), kGrain, [&](long begin, long end) {
    Workspace ws;
    for (long i = begin; i < end; ++i) out(i) = net.value1(xs(i), ws);
  });
  return out;
}

namespace {

// block-parallel mean-loss driver over per-sample contributions writing into
// per-block partial (loss, grad) slots combined in block order
template <typename SampleFn>
LossGrad reduce_loss(long n, int param_count, SampleFn&& fn) {
  const long nblocks = (n + kGrain - 1) / kGrain;
  std::vector<double> block_loss(static_cast<std::size_t>(nblocks), 0.0);
  std::vector<Eigen::VectorXd> block_grad(static_cast<std::size_t>(nblocks));
  parallel_blocks(n, kGrain, [&](long begin, long end) {
    const long b = begin / kGrain;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(param_count);
    double loss = 0.0;
    fn(begin, end, loss, grad);
    block_loss[static_cast<std::size_t>(b)] = loss;
    block_grad[static_cast<std::size_t>(b)] = std::move(grad);
  });
  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(param_count);
  for (long b = 0; b < nblocks; ++b) {
    out.loss += block_loss[static_cast<std::size_t>(b)];
    out.grad += block_grad[static_cast<std::size_t>(b)];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad *= inv_n;
  return out;
}

}  // namespace

LossGrad critic_loss(const MlpNet& critic, const Eigen::VectorXd& states,
                     const Eigen::VectorXd& deltas) {
  if (states.size() != deltas.size())
    throw UsageError("critic_loss: size mismatch");
  if (states.size() == 0) throw UsageError("critic_loss: empty batch");
  return reduce_loss(
      states.size(), critic.param_count(),
      [&](long begin, long end, double& loss, Eigen::VectorXd& grad) {
        Workspace ws;
        Eigen::VectorXd xv(1), yv, up(1);
        for (long i = begin; i < end; ++i) {
          xv(0) = states(i);
          critic.forward(xv, yv, ws);
          loss += deltas(i) * deltas(i);
          // d(delta^2)/dtheta = -2 delta dV/dtheta, delta held constant
          up(0) = -2.0 * deltas(i);
          critic.backward(ws, up, grad);
        }
      });
}

LossGrad critic_regression_loss(const MlpNet& critic,
                                const Eigen::VectorXd& states,
                                const Eigen::VectorXd& targets) {
  if (states.size() != targets.size())
    throw UsageError("critic_regression_loss: size mismatch");
  if (states.size() == 0) throw UsageError("critic_regression_loss: empty");
  return reduce_loss(
      states.size(), critic.param_count(),
      [&](long begin, long end, double& loss, Eigen::VectorXd& grad) {
        Workspace ws;
        Eigen::VectorXd xv(1), yv, up(1);
        for (long i = begin; i < end; ++i) {
          xv(0) = states(i);
          critic.forward(xv, yv, ws);
          const double resid = targets(i) - yv(0);
          loss += resid * resid;
          up(0) = -2.0 * resid;
          critic.backward(ws, up, grad);
        }
      });
}

LossGrad reinforce_actor_loss(const GaussianPolicy& policy,
                              const Eigen::VectorXd& states,
                              const Eigen::VectorXd& actions,
                              const Eigen::VectorXd& deltas) {
  const long n = states.size();
  if (actions.size() != n || deltas.size() != n)
    throw UsageError("reinforce_actor_loss: size mismatch");
  if (n == 0) throw UsageError("reinforce_actor_loss: empty batch");
  return reduce_loss(
      n, policy.param_count(),
      [&](long begin, long end, double& loss, Eigen::VectorXd& grad) {
        GaussianPolicy::Workspaces ws;
        for (long i = begin; i < end; ++i) {
          double mean, stddev;
          policy.forward_heads(states(i), ws, mean, stddev);
          const double logp = gaussian_logpdf(actions(i), mean, stddev);
          loss += -deltas(i) * logp;
          const double dlogp = -deltas(i);
          const double zn = (actions(i) - mean) / stddev;
          const double dmean = dlogp * zn / stddev;
          const double dstd = dlogp * (zn * zn - 1.0) / stddev;
          policy.backward_heads(ws, dmean, dstd, grad);
        }
      });
}

LossGrad ppo_actor_loss(const GaussianPolicy& policy,
                        const Eigen::VectorXd& states,
                        const Eigen::VectorXd& actions,
                        const Eigen::VectorXd& old_logprobs,
                        const Eigen::VectorXd& advantages, double eps_clip,
                        double c_ent) {
  const long n = states.size();
  if (actions.size() != n || old_logprobs.size() != n ||
      advantages.size() != n)
    throw UsageError("ppo_actor_loss: size mismatch");
  if (n == 0) throw UsageError("ppo_actor_loss: empty batch");
  if (!(eps_clip > 0.0)) throw UsageError("ppo_actor_loss: eps_clip <= 0");

  std::atomic<bool> bad_ratio{false};
  LossGrad out = reduce_loss(
      n, policy.param_count(),
      [&](long begin, long end, double& loss, Eigen::VectorXd& grad) {
        GaussianPolicy::Workspaces ws;
        for (long i = begin; i < end; ++i) {
          double mean, stddev;
          policy.forward_heads(states(i), ws, mean, stddev);
          const double logp = gaussian_logpdf(actions(i), mean, stddev);
          const double ratio = std::exp(logp - old_logprobs(i));
          if (!std::isfinite(ratio)) {
            bad_ratio.store(true, std::memory_order_relaxed);
            return;
          }
          const double adv = advantages(i);
          const double unclipped = ratio * adv;
          const double clipped =
              std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * adv;
          const double surrogate = std::min(unclipped, clipped);
          const double entropy = gaussian_entropy(stddev);
          loss += -surrogate - c_ent * entropy;
          // gradient passes through the ratio only on the unclipped branch
          const double dlogp =
              (unclipped <= clipped) ? -adv * ratio : 0.0;
          const double zn = (actions(i) - mean) / stddev;
          const double dmean = dlogp * zn / stddev;
          const double dstd =
              dlogp * (zn * zn - 1.0) / stddev - c_ent / stddev;
          policy.backward_heads(ws, dmean, dstd, grad);
        }
      });
  if (bad_ratio.load()) throw DivergenceError("ppo_actor_loss: non-finite ratio");
  return out;
}

void RolloutBuffer::push(TransitionBatch batch) {
  if (full()) throw UsageError("rollout buffer already full");
  if (!steps_.empty() && batch.size() != steps_.front().size())
    throw UsageError("rollout batch width changed");
  steps_.push_back(std::move(batch));
}

GaeResult gae(const RolloutBuffer& rollout, const MlpNet& critic, double gamma,
              double lambda) {
  if (!rollout.full()) throw UsageError("gae requires a full rollout");
  const auto& steps = rollout.steps();
  const long M = rollout.size();
  const long B = steps.front().size();

  Eigen::MatrixXd v_state(M, B), v_next(M, B);
  for (long mstep = 0; mstep < M; ++mstep) {
    v_state.row(mstep) = batch_values(critic, steps[mstep].states).transpose();
    v_next.row(mstep) =
        batch_values(critic, steps[mstep].next_states).transpose();
  }

  GaeResult res;
  res.advantages.resize(M, B);
  res.returns.resize(M, B);
  for (long i = 0; i < B; ++i) {
    double acc = 0.0;
    for (long mstep = M - 1; mstep >= 0; --mstep) {
      const double delta = steps[mstep].rewards(i) +
                           gamma * v_next(mstep, i) - v_state(mstep, i);
      acc = delta + gamma * lambda * acc;
      res.advantages(mstep, i) = acc;
      res.returns(mstep, i) = acc + v_state(mstep, i);
    }
  }
  return res;
}

nlohmann::json policy_to_json(const GaussianPolicy& policy) {
  nlohmann::json j;
  j["trunk"] = net_to_json(policy.trunk());
  j["mean_head"] = net_to_json(policy.mean_head());
  j["std_head"] = net_to_json(policy.std_head());
  return j;
}

GaussianPolicy policy_from_json(const nlohmann::json& j) {
  const MlpNet trunk = net_from_json(j.at("trunk"));
  const MlpNet mean = net_from_json(j.at("mean_head"));
  const MlpNet stddev = net_from_json(j.at("std_head"));
  GaussianPolicy policy(trunk.input_dim(), trunk.output_dim(),
                        mean.layers().front().out);
  policy.trunk().params() = trunk.params();
  policy.mean_head().params() = mean.params();
  policy.std_head().params() = stddev.params();
  return policy;
}

}  // namespace mfcg
