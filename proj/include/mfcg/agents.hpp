#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "mfcg/net.hpp"

namespace mfcg {

// Gaussian policy: shared tanh trunk, one head for the mean and one
// softplus-capped head for the standard deviation (floored at 1e-4).
class GaussianPolicy {
 public:
  struct Workspaces {
    Workspace trunk, mean, std;
    Eigen::VectorXd x, trunk_out, head_out, up, gin_mean, gin_std, gin_sum;
  };

  GaussianPolicy(int input_dim = 1, int trunk_width = 64, int head_width = 64);

  void init_params(rng::Stream& rs);

  int param_count() const;
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);

  // head values at x; fills ws for a later backward_heads
  void forward_heads(double x, Workspaces& ws, double& mean,
                     double& stddev) const;

  // accumulate (dmean, dstd) upstreams through both heads and the trunk
  void backward_heads(Workspaces& ws, double dmean, double dstd,
                      Eigen::Ref<Eigen::VectorXd> grad) const;

  const MlpNet& trunk() const { return trunk_; }
  const MlpNet& mean_head() const { return mean_head_; }
  const MlpNet& std_head() const { return std_head_; }
  MlpNet& mean_head() { return mean_head_; }
  MlpNet& std_head() { return std_head_; }
  MlpNet& trunk() { return trunk_; }

 private:
  MlpNet trunk_, mean_head_, std_head_;
};

struct ActionSample {
  double action = 0.0;
  double logprob = 0.0;
};

// a = mean(x) + std(x) z with the Gaussian log-density at a
ActionSample policy_sample(const GaussianPolicy& policy, double x, double z);
double policy_logprob(const GaussianPolicy& policy, double x, double a);
// 0.5 ln(2 pi e std^2)
double policy_entropy(const GaussianPolicy& policy, double x);

double gaussian_logpdf(double a, double mean, double stddev);
double gaussian_entropy(double stddev);

// critic plus its slowly synchronized copy used inside TD targets
struct CriticPair {
  MlpNet critic;
  MlpNet target;
  long sync_period = 200;

  CriticPair(const MlpNet& c, long period)
      : critic(c), target(c), sync_period(period) {}
};

// copy critic -> target exactly when step = 0 (mod period)
void target_sync(CriticPair& pair, long step);

double td_target(double r, double x_next, const MlpNet& target_net,
                 double gamma);
inline double td_error(double y, double v) { return y - v; }

// batched net evaluation of a scalar net over many points (block-parallel,
// order-independent)
Eigen::VectorXd batch_values(const MlpNet& net, const Eigen::VectorXd& xs);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// mean squared TD error; gradients flow only through V(x), the target side
// of each delta is already baked into the constant
LossGrad critic_loss(const MlpNet& critic, const Eigen::VectorXd& states,
                     const Eigen::VectorXd& deltas);

// mean over the batch of -delta log pi(a|x); deltas are constants
LossGrad reinforce_actor_loss(const GaussianPolicy& policy,
                              const Eigen::VectorXd& states,
                              const Eigen::VectorXd& actions,
                              const Eigen::VectorXd& deltas);

// regression of V onto fixed targets, mean (target - V)^2
LossGrad critic_regression_loss(const MlpNet& critic,
                                const Eigen::VectorXd& states,
                                const Eigen::VectorXd& targets);

// clipped-surrogate policy loss with entropy bonus:
//   -mean[min(r A, clip(r, 1-eps, 1+eps) A)] - c_ent mean[H]
// advantages and old log-probabilities are constants
LossGrad ppo_actor_loss(const GaussianPolicy& policy,
                        const Eigen::VectorXd& states,
                        const Eigen::VectorXd& actions,
                        const Eigen::VectorXd& old_logprobs,
                        const Eigen::VectorXd& advantages, double eps_clip,
                        double c_ent);

// aligned per-step arrays for one environment batch
struct TransitionBatch {
  Eigen::VectorXd states, actions, rewards, next_states, logprobs;
  long size() const { return states.size(); }
};

// fixed-length storage for the rollout-based update
class RolloutBuffer {
 public:
  explicit RolloutBuffer(int capacity) : capacity_(capacity) {}

  void push(TransitionBatch batch);
  bool full() const { return static_cast<int>(steps_.size()) == capacity_; }
  long size() const { return static_cast<long>(steps_.size()); }
  int capacity() const { return capacity_; }
  void clear() { steps_.clear(); }
  const std::vector<TransitionBatch>& steps() const { return steps_; }

 private:
  int capacity_;
  std::vector<TransitionBatch> steps_;
};

struct GaeResult {
  Eigen::MatrixXd advantages;  // step x env
  Eigen::MatrixXd returns;
};

// backward recursion A_m = delta_m + gamma lambda A_{m+1}, A_M = 0, applied
// per environment column; R = A + V(states). Requires a full rollout.
GaeResult gae(const RolloutBuffer& rollout, const MlpNet& critic, double gamma,
              double lambda);

nlohmann::json policy_to_json(const GaussianPolicy& policy);
GaussianPolicy policy_from_json(const nlohmann::json& j);

}  // namespace mfcg
