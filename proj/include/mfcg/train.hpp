#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mfcg/agents.hpp"
#include "mfcg/lq.hpp"
#include "mfcg/score.hpp"

namespace mfcg {

enum class AlgoKind { Baseline, Batch, Minibatch, Drl };

const char* algo_name(AlgoKind k);
AlgoKind algo_from_name(const std::string& name);

// diagnostic modes used by the evaluation harness: pin the actor to the
// closed-form control and/or pin the cost means to the equilibrium value
struct FreezeOptions {
  bool actor_at_optimum = false;
  double actor_std = 0.05;
  bool means_at_equilibrium = false;
};

struct TrainConfig {
  AlgoKind algo = AlgoKind::Batch;
  long steps = 100000;
  int batch_size = 8192;
  int minibatch_size = 1024;
  double lr_actor = 5e-6;
  double lr_critic = 1e-5;
  double lr_score_global = 1e-6;
  double lr_score_local = 5e-4;
  int rollout_len = 256;
  double eps_clip = 0.2;
  double entropy_coeff = 0.01;
  double gae_lambda = 0.95;
  int ppo_epochs = 1;
  LangevinConfig langevin;
  long langevin_period = 0;  // 0 -> per-algorithm default (50 for minibatch)
  long target_sync_period = 200;
  long checkpoint_period = 10000;
  std::uint64_t seed = 0;
  LqParams lq;
  FreezeOptions freeze;

  // the single-sample variant runs with one environment copy, a live-critic
  // target (sync period 1) and per-step sampling
  int effective_batch() const;
  long effective_target_period() const;
  long effective_langevin_period() const;
  bool uses_hutchinson() const { return algo == AlgoKind::Minibatch; }

  void validate() const;
};

// one row of the per-step metrics table
struct MetricsRecord {
  long step = 0;
  double lr_multiplier = 1.0;
  double score_loss_global = 0.0;
  double score_loss_local = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_global = 0.0;
  double mean_local = 0.0;
  double var_global = 0.0;
  double var_local = 0.0;
};

// learning-rate ramp: 1x -> 10x over the first 10% of the run, then down to
// 0.25x at the end
double lr_multiplier(double step, double total_steps);
double lr_schedule(double step, double total_steps, double base);

// uniformly random permutation of [0, n) chunked into n/b ordered blocks
std::vector<std::vector<long>> partition_minibatches(long n, long b,
                                                     rng::Stream& rs);

struct TrainArtifacts {
  GaussianPolicy actor;
  MlpNet critic, target, score_global, score_local;
  std::vector<MetricsRecord> metrics;
  EmpiricalMeasure particles_global, particles_local;
  bool diverged = false;
  long divergence_step = -1;

  TrainArtifacts(GaussianPolicy a, MlpNet c, MlpNet t, MlpNet sg, MlpNet sl)
      : actor(std::move(a)),
        critic(std::move(c)),
        target(std::move(t)),
        score_global(std::move(sg)),
        score_local(std::move(sl)) {}
};

// Owns the four networks and drives one outer step per call; all four
// algorithm variants share this engine. Deterministic: every random draw is
// keyed by (seed, purpose, step, index).
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  void step();
  long current_step() const { return step_; }
  bool done() const { return step_ >= cfg_.steps; }

  const TrainConfig& config() const { return cfg_; }
  const std::vector<MetricsRecord>& metrics() const { return metrics_; }
  const GaussianPolicy& actor() const { return actor_; }
  const MlpNet& critic() const { return pair_.critic; }
  const MlpNet& target() const { return pair_.target; }
  const MlpNet& score_global() const { return score_global_; }
  const MlpNet& score_local() const { return score_local_; }
  const EmpiricalMeasure& particles_global() const { return particles_global_; }
  const EmpiricalMeasure& particles_local() const { return particles_local_; }
  const Eigen::VectorXd& states() const { return states_; }
  double mean_global() const { return mean_global_; }
  double mean_local() const { return mean_local_; }
  const RolloutBuffer& rollout() const { return rollout_; }
  long update_count(const char* which) const;  // "critic" | "actor" | "score"

  TrainArtifacts artifacts() const;
  nlohmann::json checkpoint_json() const;

 private:
  void refresh_particles();
  void sample_actions(const std::vector<long>* idx, Eigen::VectorXd& actions,
                      Eigen::VectorXd& logprobs);
  void step_batch_like();
  void step_minibatch();
  void step_drl();
  void maybe_adam(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                  AdamState& st, double lr);
  void update_actor(const LossGrad& lg, double lr);

  TrainConfig cfg_;
  double gamma_;
  std::optional<AnalyticalSolution> frozen_sol_;
  GaussianPolicy actor_;
  CriticPair pair_;
  MlpNet score_global_, score_local_;
  AdamState adam_actor_, adam_critic_, adam_sg_, adam_sl_;
  Eigen::VectorXd states_;
  EmpiricalMeasure particles_global_, particles_local_;
  double mean_global_ = 0.0, mean_local_ = 0.0;
  RolloutBuffer rollout_;
  std::vector<MetricsRecord> metrics_;
  long step_ = 0;
  std::uint64_t refresh_counter_ = 0;
  double last_critic_loss_ = 0.0, last_actor_loss_ = 0.0;
  long critic_updates_ = 0, actor_updates_ = 0, score_updates_ = 0;
};

// in-memory drivers; each pins the knobs its variant requires and runs all
// cfg.steps, stopping early (with the flag set) on numerical divergence
TrainArtifacts train_baseline(TrainConfig cfg);
TrainArtifacts train_batch(TrainConfig cfg);
TrainArtifacts train_minibatch(TrainConfig cfg);
TrainArtifacts train_drl(TrainConfig cfg);
TrainArtifacts run_training(const TrainConfig& cfg);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// checkpoint bundle as written to run directories
struct CheckpointData {
  GaussianPolicy actor;
  MlpNet critic, target, score_global, score_local;
  long step = 0;

  CheckpointData(GaussianPolicy a, MlpNet c, MlpNet t, MlpNet sg, MlpNet sl)
      : actor(std::move(a)),
        critic(std::move(c)),
        target(std::move(t)),
        score_global(std::move(sg)),
        score_local(std::move(sl)) {}
};
CheckpointData checkpoint_from_json(const nlohmann::json& j);

}  // namespace mfcg
