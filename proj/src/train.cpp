#include "mfcg/train.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "mfcg/errors.hpp"
#include "mfcg/pool.hpp"

namespace mfcg {

const char* algo_name(AlgoKind k) {
  switch (k) {
    case AlgoKind::Baseline: return "baseline";
    case AlgoKind::Batch: return "batch";
    case AlgoKind::Minibatch: return "minibatch";
    case AlgoKind::Drl: return "drl";
  }
  return "batch";
}

AlgoKind algo_from_name(const std::string& name) {
  if (name == "baseline") return AlgoKind::Baseline;
  if (name == "batch") return AlgoKind::Batch;
  if (name == "minibatch") return AlgoKind::Minibatch;
  if (name == "drl") return AlgoKind::Drl;
  throw UsageError("unknown algorithm: " + name);
}

int TrainConfig::effective_batch() const {
  return algo == AlgoKind::Baseline ? 1 : batch_size;
}

long TrainConfig::effective_target_period() const {
  return algo == AlgoKind::Baseline ? 1 : target_sync_period;
}

long TrainConfig::effective_langevin_period() const {
  if (langevin_period > 0) return langevin_period;
  return algo == AlgoKind::Minibatch ? 50 : 1;
}

void TrainConfig::validate() const {
  if (steps < 0) throw UsageError("config: steps must be >= 0");
  if (batch_size < 1) throw UsageError("config: batch size must be >= 1");
  if (lr_actor < 0 || lr_critic < 0 || lr_score_global < 0 ||
      lr_score_local < 0)
    throw UsageError("config: learning rates must be >= 0");
  if (algo == AlgoKind::Minibatch) {
    if (minibatch_size < 1) throw UsageError("config: minibatch size >= 1");
    if (effective_batch() % minibatch_size != 0)
      throw UsageError("config: batch size must be divisible by minibatch");
  }
  if (algo == AlgoKind::Drl) {
    if (rollout_len < 1) throw UsageError("config: rollout length >= 1");
    if (!(eps_clip > 0)) throw UsageError("config: eps_clip must be > 0");
    if (ppo_epochs < 1) throw UsageError("config: ppo_epochs >= 1");
  }
  if (langevin.particles < 1) throw UsageError("config: particles >= 1");
  if (langevin.iterations < 0) throw UsageError("config: iterations >= 0");
  if (langevin.step_size < 0) throw UsageError("config: langevin step >= 0");
  if (effective_target_period() < 1)
    throw UsageError("config: target sync period >= 1");
  if (checkpoint_period < 1) throw UsageError("config: checkpoint period >= 1");
  lq.validate();
}

double lr_multiplier(double step, double total_steps) {
  if (total_steps <= 0) return 1.0;
  const double ramp = 0.1 * total_steps;
  if (step <= ramp) return ramp > 0 ? 1.0 + 9.0 * (step / ramp) : 1.0;
  return 10.0 - 9.75 * ((step - ramp) / (total_steps - ramp));
}

double lr_schedule(double step, double total_steps, double base) {
  return base * lr_multiplier(step, total_steps);
}

std::vector<std::vector<long>> partition_minibatches(long n, long b,
                                                     rng::Stream& rs) {
  if (n < 1 || b < 1 || n % b != 0)
    throw UsageError("partition_minibatches: n must be a positive multiple of b");
  std::vector<long> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0L);
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(rs.next_u64() %
                                     static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<long>> blocks;
  for (long off = 0; off < n; off += b)
    blocks.emplace_back(perm.begin() + off, perm.begin() + off + b);
  return blocks;
}

namespace {

constexpr int kCriticWidth = 128;
constexpr int kScoreWidth = 128;
constexpr int kActorWidth = 64;

MlpNet make_scalar_net(std::uint64_t seed, std::uint64_t tag, int width) {
  MlpNet net = MlpNet::mlp(1, {width}, 1);
  rng::Stream rs(rng::mix(seed, rng::kParamInit, tag));
  net.init_params(rs);
  return net;
}

EmpiricalMeasure draw_particles(std::uint64_t seed, std::uint64_t tag, int k) {
  EmpiricalMeasure meas;
  meas.x.resize(k);
  for (int i = 0; i < k; ++i)
    meas.x(i) = rng::normal_at(rng::mix(seed, rng::kInitialParticles, tag,
                                        static_cast<std::uint64_t>(i)));
  return meas;
}

constexpr long kGrain = 64;

}  // namespace

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)),
      gamma_(discount_factor(cfg_.lq)),
      actor_(1, kActorWidth, kActorWidth),
      pair_(make_scalar_net(cfg_.seed, 1, kCriticWidth),
            cfg_.effective_target_period()),
      score_global_(make_scalar_net(cfg_.seed, 2, kScoreWidth)),
      score_local_(make_scalar_net(cfg_.seed, 3, kScoreWidth)),
      rollout_(cfg_.rollout_len) {
  cfg_.validate();
  rng::Stream actor_rs(rng::mix(cfg_.seed, rng::kParamInit, 0));
  actor_.init_params(actor_rs);

  adam_actor_ = AdamState(actor_.param_count());
  adam_critic_ = AdamState(pair_.critic.param_count());
  adam_sg_ = AdamState(score_global_.param_count());
  adam_sl_ = AdamState(score_local_.param_count());

  const int B = cfg_.effective_batch();
  states_.resize(B);
  for (int i = 0; i < B; ++i)
    states_(i) = rng::normal_at(
        rng::mix(cfg_.seed, rng::kInitialStates, static_cast<std::uint64_t>(i)));

  particles_global_ = draw_particles(cfg_.seed, 0, cfg_.langevin.particles);
  particles_local_ = draw_particles(cfg_.seed, 1, cfg_.langevin.particles);
  mean_global_ = measure_mean(particles_global_);
  mean_local_ = measure_mean(particles_local_);

  if (cfg_.freeze.actor_at_optimum || cfg_.freeze.means_at_equilibrium) {
    frozen_sol_ = analytical_solution(cfg_.lq);
    if (cfg_.freeze.means_at_equilibrium)
      mean_global_ = mean_local_ = frozen_sol_->m;
  }
}

void Trainer::maybe_adam(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                         AdamState& st, double lr) {
  if (lr > 0.0) adam_step(params, grad, st, lr);
}

void Trainer::update_actor(const LossGrad& lg, double lr) {
  if (lr <= 0.0) return;
  Eigen::VectorXd flat = actor_.params_flat();
  adam_step(flat, lg.grad, adam_actor_, lr);
  actor_.set_params_flat(flat);
}

void Trainer::refresh_particles() {
  const auto key = [&](std::uint64_t tag) {
    return rng::mix(cfg_.seed, rng::kLangevin, tag, refresh_counter_);
  };
  particles_global_ =
      langevin_sample(score_global_, cfg_.langevin, particles_global_, key(0));
  particles_local_ =
      langevin_sample(score_local_, cfg_.langevin, particles_local_, key(1));
  ++refresh_counter_;
  mean_global_ = measure_mean(particles_global_);
  mean_local_ = measure_mean(particles_local_);
  if (cfg_.freeze.means_at_equilibrium)
    mean_global_ = mean_local_ = frozen_sol_->m;
}

// Actions for the given env indices (all envs when idx == nullptr); one
// normal draw per env, keyed by (step, env index).
void Trainer::sample_actions(const std::vector<long>* idx,
                             Eigen::VectorXd& actions,
                             Eigen::VectorXd& logprobs) {
  const long n = idx ? static_cast<long>(idx->size()) : states_.size();
  actions.resize(n);
  logprobs.resize(n);
  const bool frozen = cfg_.freeze.actor_at_optimum;
  parallel_blocks(n, kGrain, [&](long begin, long end) {
    GaussianPolicy::Workspaces ws;
    for (long s = begin; s < end; ++s) {
      const long env = idx ? (*idx)[static_cast<std::size_t>(s)] : s;
      const double x = states_(env);
      const double z = rng::normal_at(
          rng::mix(cfg_.seed, rng::kActionNoise,
                   static_cast<std::uint64_t>(step_),
                   static_cast<std::uint64_t>(env)));
      double mean, stddev;
      if (frozen) {
        mean = optimal_control(x, *frozen_sol_);
        stddev = cfg_.freeze.actor_std;
      } else {
        actor_.forward_heads(x, ws, mean, stddev);
      }
      actions(s) = mean + stddev * z;
      logprobs(s) = gaussian_logpdf(actions(s), mean, stddev);
    }
  });
}

namespace {

// env transition for a set of indices; draws keyed by (step, env index)
void step_envs(const LqParams& lq, std::uint64_t seed, long step,
               const std::vector<long>* idx, const Eigen::VectorXd& states,
               const Eigen::VectorXd& actions, double m_global, double m_local,
               Eigen::VectorXd& rewards, Eigen::VectorXd& next_states) {
  const long n = actions.size();
  rewards.resize(n);
  next_states.resize(n);
  parallel_blocks(n, kGrain, [&](long begin, long end) {
    for (long s = begin; s < end; ++s) {
      const long env = idx ? (*idx)[static_cast<std::size_t>(s)] : s;
      const double x = states(env);
      rewards(s) = reward(x, m_global, m_local, actions(s), lq);
      const double z = rng::normal_at(
          rng::mix(seed, rng::kEnvNoise, static_cast<std::uint64_t>(step),
                   static_cast<std::uint64_t>(env)));
      next_states(s) = env_step(x, actions(s), lq, z);
    }
  });
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<long>& idx) {
  Eigen::VectorXd out(static_cast<long>(idx.size()));
  for (std::size_t s = 0; s < idx.size(); ++s)
    out(static_cast<long>(s)) = v(idx[s]);
  return out;
}

}  // namespace

void Trainer::step_batch_like() {
  MetricsRecord rec;
  const double mult = lr_multiplier(static_cast<double>(step_),
                                    static_cast<double>(cfg_.steps));

  if (!cfg_.freeze.means_at_equilibrium) {
    const ScoreLoss gl = score_loss_exact(score_global_, states_);
    maybe_adam(score_global_.params(), gl.grad, adam_sg_,
               cfg_.lr_score_global * mult);
    const ScoreLoss ll = score_loss_exact(score_local_, states_);
    maybe_adam(score_local_.params(), ll.grad, adam_sl_,
               cfg_.lr_score_local * mult);
    ++score_updates_;
    rec.score_loss_global = gl.loss;
    rec.score_loss_local = ll.loss;
    if (step_ % cfg_.effective_langevin_period() == 0) refresh_particles();
  }

  Eigen::VectorXd actions, logprobs, rewards, next_states;
  sample_actions(nullptr, actions, logprobs);
  step_envs(cfg_.lq, cfg_.seed, step_, nullptr, states_, actions, mean_global_,
            mean_local_, rewards, next_states);

  const Eigen::VectorXd v_next = batch_values(pair_.target, next_states);
  const Eigen::VectorXd v_cur = batch_values(pair_.critic, states_);
  const Eigen::VectorXd deltas =
      rewards + gamma_ * v_next - v_cur;  // y - V(x)

  const LossGrad cl = critic_loss(pair_.critic, states_, deltas);
  maybe_adam(pair_.critic.params(), cl.grad, adam_critic_,
             cfg_.lr_critic * mult);
  ++critic_updates_;
  last_critic_loss_ = cl.loss;

  if (!cfg_.freeze.actor_at_optimum) {
    const LossGrad al = reinforce_actor_loss(actor_, states_, actions, deltas);
    update_actor(al, cfg_.lr_actor * mult);
    ++actor_updates_;
    last_actor_loss_ = al.loss;
  }

  states_ = next_states;
  target_sync(pair_, step_);

  rec.step = step_;
  rec.lr_multiplier = mult;
  rec.critic_loss = last_critic_loss_;
  rec.actor_loss = last_actor_loss_;
  rec.mean_global = mean_global_;
  rec.mean_local = mean_local_;
  rec.var_global = measure_variance(particles_global_);
  rec.var_local = measure_variance(particles_local_);
  metrics_.push_back(rec);
}

void Trainer::step_minibatch() {
  MetricsRecord rec;
  const double mult = lr_multiplier(static_cast<double>(step_),
                                    static_cast<double>(cfg_.steps));
  const long B = states_.size();
  const long b = cfg_.minibatch_size;
  rng::Stream perm_rs(rng::mix(cfg_.seed, rng::kPermutation,
                               static_cast<std::uint64_t>(step_)));
  const auto blocks = partition_minibatches(B, b, perm_rs);
  const double inv_c = 1.0 / static_cast<double>(blocks.size());

  Eigen::VectorXd actions, logprobs, rewards, next_states;
  for (std::size_t mb = 0; mb < blocks.size(); ++mb) {
    const auto& idx = blocks[mb];
    const Eigen::VectorXd xs = gather(states_, idx);

    Eigen::VectorXd probes_g(b), probes_l(b);
    for (long s = 0; s < b; ++s) {
      const auto pos = static_cast<std::uint64_t>(mb * b + s);
      probes_g(s) = rng::normal_at(rng::mix(
          rng::mix(cfg_.seed, rng::kHutchinson, 0),
          static_cast<std::uint64_t>(step_), pos));
      probes_l(s) = rng::normal_at(rng::mix(
          rng::mix(cfg_.seed, rng::kHutchinson, 1),
          static_cast<std::uint64_t>(step_), pos));
    }
    const ScoreLoss gl = score_loss_hutchinson(score_global_, xs, probes_g);
    maybe_adam(score_global_.params(), gl.grad, adam_sg_,
               cfg_.lr_score_global * mult);
    const ScoreLoss ll = score_loss_hutchinson(score_local_, xs, probes_l);
    maybe_adam(score_local_.params(), ll.grad, adam_sl_,
               cfg_.lr_score_local * mult);
    ++score_updates_;
    rec.score_loss_global += gl.loss * inv_c;
    rec.score_loss_local += ll.loss * inv_c;

    if (step_ % cfg_.effective_langevin_period() == 0) refresh_particles();

    sample_actions(&idx, actions, logprobs);
    step_envs(cfg_.lq, cfg_.seed, step_, &idx, states_, actions, mean_global_,
              mean_local_, rewards, next_states);

    const Eigen::VectorXd v_next = batch_values(pair_.target, next_states);
    const Eigen::VectorXd v_cur = batch_values(pair_.critic, xs);
    const Eigen::VectorXd deltas = rewards + gamma_ * v_next - v_cur;

    const LossGrad cl = critic_loss(pair_.critic, xs, deltas);
    maybe_adam(pair_.critic.params(), cl.grad, adam_critic_,
               cfg_.lr_critic * mult);
    ++critic_updates_;
    rec.critic_loss += cl.loss * inv_c;

    if (!cfg_.freeze.actor_at_optimum) {
      const LossGrad al = reinforce_actor_loss(actor_, xs, actions, deltas);
      update_actor(al, cfg_.lr_actor * mult);
      ++actor_updates_;
      rec.actor_loss += al.loss * inv_c;
    }

    for (std::size_t s = 0; s < idx.size(); ++s)
      states_(idx[s]) = next_states(static_cast<long>(s));
  }
  last_critic_loss_ = rec.critic_loss;
  last_actor_loss_ = rec.actor_loss;

  target_sync(pair_, step_);

  rec.step = step_;
  rec.lr_multiplier = mult;
  rec.mean_global = mean_global_;
  rec.mean_local = mean_local_;
  rec.var_global = measure_variance(particles_global_);
  rec.var_local = measure_variance(particles_local_);
  metrics_.push_back(rec);
}

void Trainer::step_drl() {
  MetricsRecord rec;
  const double mult = lr_multiplier(static_cast<double>(step_),
                                    static_cast<double>(cfg_.steps));

  const ScoreLoss gl = score_loss_exact(score_global_, states_);
  maybe_adam(score_global_.params(), gl.grad, adam_sg_,
             cfg_.lr_score_global * mult);
  const ScoreLoss ll = score_loss_exact(score_local_, states_);
  maybe_adam(score_local_.params(), ll.grad, adam_sl_,
             cfg_.lr_score_local * mult);
  ++score_updates_;
  rec.score_loss_global = gl.loss;
  rec.score_loss_local = ll.loss;
  if (step_ % cfg_.effective_langevin_period() == 0) refresh_particles();

  Eigen::VectorXd actions, logprobs, rewards, next_states;
  sample_actions(nullptr, actions, logprobs);
  step_envs(cfg_.lq, cfg_.seed, step_, nullptr, states_, actions, mean_global_,
            mean_local_, rewards, next_states);

  TransitionBatch batch;
  batch.states = states_;
  batch.actions = actions;
  batch.rewards = rewards;
  batch.next_states = next_states;
  batch.logprobs = logprobs;
  rollout_.push(std::move(batch));
  states_ = next_states;

  if ((step_ + 1) % cfg_.rollout_len == 0) {
    const GaeResult res = gae(rollout_, pair_.critic, gamma_, cfg_.gae_lambda);
    const long M = rollout_.size();
    const long B = states_.size();
    const long n = M * B;
    Eigen::VectorXd fs(n), fa(n), flp(n), fadv(n), fret(n);
    for (long mstep = 0; mstep < M; ++mstep) {
      const auto& tb = rollout_.steps()[static_cast<std::size_t>(mstep)];
      for (long i = 0; i < B; ++i) {
        const long at = mstep * B + i;
        fs(at) = tb.states(i);
        fa(at) = tb.actions(i);
        flp(at) = tb.logprobs(i);
        fadv(at) = res.advantages(mstep, i);
        fret(at) = res.returns(mstep, i);
      }
    }
    const LossGrad cl = critic_regression_loss(pair_.critic, fs, fret);
    maybe_adam(pair_.critic.params(), cl.grad, adam_critic_,
               cfg_.lr_critic * mult);
    ++critic_updates_;
    last_critic_loss_ = cl.loss;

    if (!cfg_.freeze.actor_at_optimum) {
      LossGrad pl;
      for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
        pl = ppo_actor_loss(actor_, fs, fa, flp, fadv, cfg_.eps_clip,
                            cfg_.entropy_coeff);
        update_actor(pl, cfg_.lr_actor * mult);
      }
      ++actor_updates_;
      last_actor_loss_ = pl.loss;
    }
    rollout_.clear();
  }

  target_sync(pair_, step_);

  rec.step = step_;
  rec.lr_multiplier = mult;
  rec.critic_loss = last_critic_loss_;
  rec.actor_loss = last_actor_loss_;
  rec.mean_global = mean_global_;
  rec.mean_local = mean_local_;
  rec.var_global = measure_variance(particles_global_);
  rec.var_local = measure_variance(particles_local_);
  metrics_.push_back(rec);
}

void Trainer::step() {
  if (done()) throw UsageError("training already finished");
  switch (cfg_.algo) {
    case AlgoKind::Baseline:
    case AlgoKind::Batch:
      step_batch_like();
      break;
    case AlgoKind::Minibatch:
      step_minibatch();
      break;
    case AlgoKind::Drl:
      step_drl();
      break;
  }
  ++step_;
}

long Trainer::update_count(const char* which) const {
  const std::string w = which;
  if (w == "critic") return critic_updates_;
  if (w == "actor") return actor_updates_;
  if (w == "score") return score_updates_;
  throw UsageError("unknown counter: " + w);
}

TrainArtifacts Trainer::artifacts() const {
  TrainArtifacts art(actor_, pair_.critic, pair_.target, score_global_,
                     score_local_);
  art.metrics = metrics_;
  art.particles_global = particles_global_;
  art.particles_local = particles_local_;
  return art;
}

nlohmann::json Trainer::checkpoint_json() const {
  nlohmann::json j;
  j["format"] = "mfcg-checkpoint-v1";
  j["step"] = step_;
  j["actor"] = policy_to_json(actor_);
  j["critic"] = net_to_json(pair_.critic);
  j["target"] = net_to_json(pair_.target);
  j["score_global"] = net_to_json(score_global_);
  j["score_local"] = net_to_json(score_local_);
  j["optimizers"] = nlohmann::json{{"actor", adam_to_json(adam_actor_)},
                                   {"critic", adam_to_json(adam_critic_)},
                                   {"score_global", adam_to_json(adam_sg_)},
                                   {"score_local", adam_to_json(adam_sl_)}};
  return j;
}

CheckpointData checkpoint_from_json(const nlohmann::json& j) {
  CheckpointData data(policy_from_json(j.at("actor")),
                      net_from_json(j.at("critic")),
                      net_from_json(j.at("target")),
                      net_from_json(j.at("score_global")),
                      net_from_json(j.at("score_local")));
  data.step = j.at("step").get<long>();
  return data;
}

namespace {

TrainArtifacts run_loop(TrainConfig cfg) {
  Trainer trainer(std::move(cfg));
  bool diverged = false;
  long div_step = -1;
  while (!trainer.done()) {
    try {
      trainer.step();
    } catch (const DivergenceError&) {
      diverged = true;
      div_step = trainer.current_step();
      break;
    }
  }
  TrainArtifacts art = trainer.artifacts();
  art.diverged = diverged;
  art.divergence_step = div_step;
  return art;
}

}  // namespace

TrainArtifacts train_baseline(TrainConfig cfg) {
  cfg.algo = AlgoKind::Baseline;
  return run_loop(std::move(cfg));
}

TrainArtifacts train_batch(TrainConfig cfg) {
  cfg.algo = AlgoKind::Batch;
  return run_loop(std::move(cfg));
}

TrainArtifacts train_minibatch(TrainConfig cfg) {
  cfg.algo = AlgoKind::Minibatch;
  return run_loop(std::move(cfg));
}

TrainArtifacts train_drl(TrainConfig cfg) {
  cfg.algo = AlgoKind::Drl;
  return run_loop(std::move(cfg));
}

TrainArtifacts run_training(const TrainConfig& cfg) { return run_loop(cfg); }

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["algo"] = algo_name(cfg.algo);
  j["steps"] = cfg.steps;
  j["batch_size"] = cfg.batch_size;
  j["minibatch_size"] = cfg.minibatch_size;
  j["lr_actor"] = cfg.lr_actor;
  j["lr_critic"] = cfg.lr_critic;
  j["lr_score_global"] = cfg.lr_score_global;
  j["lr_score_local"] = cfg.lr_score_local;
  j["rollout_len"] = cfg.rollout_len;
  j["eps_clip"] = cfg.eps_clip;
  j["entropy_coeff"] = cfg.entropy_coeff;
  j["gae_lambda"] = cfg.gae_lambda;
  j["ppo_epochs"] = cfg.ppo_epochs;
  j["langevin"] = nlohmann::json{{"step_size", cfg.langevin.step_size},
                                 {"iterations", cfg.langevin.iterations},
                                 {"particles", cfg.langevin.particles},
                                 {"warm_start", cfg.langevin.warm_start}};
  j["langevin_period"] = cfg.langevin_period;
  j["target_sync_period"] = cfg.target_sync_period;
  j["checkpoint_period"] = cfg.checkpoint_period;
  j["seed"] = cfg.seed;
  j["lq"] = lq_to_json(cfg.lq);
  if (cfg.freeze.actor_at_optimum || cfg.freeze.means_at_equilibrium) {
    j["freeze"] = nlohmann::json{
        {"actor_at_optimum", cfg.freeze.actor_at_optimum},
        {"actor_std", cfg.freeze.actor_std},
        {"means_at_equilibrium", cfg.freeze.means_at_equilibrium}};
  }
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("algo")) cfg.algo = algo_from_name(j["algo"].get<std::string>());
  if (j.contains("steps")) cfg.steps = j["steps"].get<long>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("minibatch_size"))
    cfg.minibatch_size = j["minibatch_size"].get<int>();
  if (j.contains("lr_actor")) cfg.lr_actor = j["lr_actor"].get<double>();
  if (j.contains("lr_critic")) cfg.lr_critic = j["lr_critic"].get<double>();
  if (j.contains("lr_score_global"))
    cfg.lr_score_global = j["lr_score_global"].get<double>();
  if (j.contains("lr_score_local"))
    cfg.lr_score_local = j["lr_score_local"].get<double>();
  if (j.contains("rollout_len")) cfg.rollout_len = j["rollout_len"].get<int>();
  if (j.contains("eps_clip")) cfg.eps_clip = j["eps_clip"].get<double>();
  if (j.contains("entropy_coeff"))
    cfg.entropy_coeff = j["entropy_coeff"].get<double>();
  if (j.contains("gae_lambda")) cfg.gae_lambda = j["gae_lambda"].get<double>();
  if (j.contains("ppo_epochs")) cfg.ppo_epochs = j["ppo_epochs"].get<int>();
  if (j.contains("langevin")) {
    const auto& lj = j["langevin"];
    if (lj.contains("step_size"))
      cfg.langevin.step_size = lj["step_size"].get<double>();
    if (lj.contains("iterations"))
      cfg.langevin.iterations = lj["iterations"].get<int>();
    if (lj.contains("particles"))
      cfg.langevin.particles = lj["particles"].get<int>();
    if (lj.contains("warm_start"))
      cfg.langevin.warm_start = lj["warm_start"].get<bool>();
  }
  if (j.contains("langevin_period"))
    cfg.langevin_period = j["langevin_period"].get<long>();
  if (j.contains("target_sync_period"))
    cfg.target_sync_period = j["target_sync_period"].get<long>();
  if (j.contains("checkpoint_period"))
    cfg.checkpoint_period = j["checkpoint_period"].get<long>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("lq")) cfg.lq = lq_from_json(j["lq"]);
  if (j.contains("freeze")) {
    const auto& fj = j["freeze"];
    if (fj.contains("actor_at_optimum"))
      cfg.freeze.actor_at_optimum = fj["actor_at_optimum"].get<bool>();
    if (fj.contains("actor_std"))
      cfg.freeze.actor_std = fj["actor_std"].get<double>();
    if (fj.contains("means_at_equilibrium"))
      cfg.freeze.means_at_equilibrium = fj["means_at_equilibrium"].get<bool>();
  }
  return cfg;
}

}  // namespace mfcg
