#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlbench/env.hpp"
#include "rlbench/mlp.hpp"
#include "rlbench/tabular.hpp"

namespace rlbench {

/// Discrete Ornstein-Uhlenbeck exploration noise, one unit time step per call.
///
/// The default recurrence is N <- (1 - beta) N - mu + sigma z. With `standard_form`
/// it is the usual mean-reverting N <- N + beta (mu - N) + sigma z. Both agree for mu = 0.
struct OuParams
{
  double beta{0.15};
  double mu{0.0};
  double sigma{0.3};
  bool   standard_form{false};

  void validate() const
  {
    if (!(beta > 0.0 && beta < 1.0) || !(sigma >= 0.0))
    {
      throw ConfigError("OuParams: need 0 < beta < 1 and sigma >= 0");
    }
  }

  // Variance of the stationary AR(1) distribution when mu = 0.
  [[nodiscard]] double stationary_variance() const { return sigma * sigma / (beta * (2.0 - beta)); }
};

class OuNoise
{
public:
  OuNoise() = default;
  OuNoise(Eigen::Index dim, OuParams params)
    : params_(params)
    , state_(Vec::Zero(dim))
  {
    params_.validate();
  }

  void reset() { state_.setZero(); }

  const Vec &step(SeededRng &rng)
  {
    for (Eigen::Index i = 0; i < state_.size(); ++i)
    {
      double const z = rng.normal();
      if (params_.standard_form)
      {
        state_[i] = state_[i] + params_.beta * (params_.mu - state_[i]) + params_.sigma * z;
      }
      else
      {
        state_[i] = (1.0 - params_.beta) * state_[i] - params_.mu + params_.sigma * z;
      }
    }
    return state_;
  }

  [[nodiscard]] const Vec      &state() const { return state_; }
  void                          set_state(const Vec &s) { state_ = s; }
  [[nodiscard]] const OuParams &params() const { return params_; }

private:
  OuParams params_;
  Vec      state_;
};

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer
{
public:
  explicit ReplayBuffer(std::size_t capacity = 10000)
    : capacity_(capacity)
  {
    if (capacity == 0)
    {
      throw InputError("ReplayBuffer: capacity must be positive");
    }
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t)
  {
    if (storage_.size() < capacity_)
    {
      storage_.push_back(std::move(t));
    }
    else
    {
      storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  [[nodiscard]] std::size_t size() const { return storage_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

  // i = 0 is the oldest stored transition.
  [[nodiscard]] const Transition &at(std::size_t i) const
  {
    if (i >= size())
    {
      throw InputError("ReplayBuffer::at: index out of range");
    }
    std::size_t const start = storage_.size() < capacity_ ? 0 : cursor_;
    return storage_[(start + i) % storage_.size()];
  }

  /// n uniform draws with replacement.
  [[nodiscard]] std::vector<Transition> sample(std::size_t n, SeededRng &rng) const
  {
    if (n < 1 || n > size())
    {
      throw InsufficientDataError("ReplayBuffer::sample: requested " + std::to_string(n) +
                                  " transitions from a buffer holding " + std::to_string(size()));
    }
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      out.push_back(storage_[static_cast<std::size_t>(rng.uniform_int(storage_.size()))]);
    }
    return out;
  }

private:
  std::size_t             capacity_;
  std::size_t             cursor_{0};
  std::vector<Transition> storage_;
};

struct DdpgConfig
{
  double      gamma{0.4};
  double      tau{0.99};
  int         batch_n{100};
  int         actor_batch{1};
  double      actor_lr{1e-4};
  double      critic_lr{1e-3};
  int         warmup_steps{-1};  // negative: same as batch_n
  int         episodes{10};
  int         steps_per_episode{1000};
  std::size_t buffer_capacity{10000};
  bool        mask_terminal{true};
  OuParams    ou{};
  ArchSpec    arch{};

  [[nodiscard]] int effective_warmup() const { return warmup_steps < 0 ? batch_n : warmup_steps; }

  void validate() const
  {
    if (!(gamma >= 0.0 && gamma <= 1.0) || !(tau >= 0.0 && tau <= 1.0))
    {
      throw ConfigError("DdpgConfig: gamma and tau must lie in [0, 1]");
    }
    if (batch_n < 1 || actor_batch < 1 || static_cast<std::size_t>(batch_n) > buffer_capacity ||
        static_cast<std::size_t>(actor_batch) > buffer_capacity)
    {
      throw ConfigError("DdpgConfig: batch sizes must be in [1, buffer_capacity]");
    }
    if (episodes < 0 || steps_per_episode < 1)
    {
      throw ConfigError("DdpgConfig: episodes must be >= 0 and steps_per_episode >= 1");
    }
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    {
      throw ConfigError("DdpgConfig: learning rates must be positive");
    }
    ou.validate();
  }
};

/// target <- tau * live + (1 - tau) * target, parameter-wise.
inline void soft_update(const Mlp &live, Mlp &target, double tau)
{
  if (!live.same_shape(target))
  {
    throw InputError("soft_update: networks have different shapes");
  }
  target.set_flat_params(tau * live.flat_params() + (1.0 - tau) * target.flat_params());
}

inline Vec concat(const Vec &a, const Vec &b)
{
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

/// Actor, critic, their target copies, exploration noise and replay memory.
class DdpgAgent
{
public:
  DdpgAgent(int obs_dim, BoxSpace action_space, DdpgConfig cfg, SeededRng &rng)
    : action_space_(std::move(action_space))
    , cfg_(std::move(cfg))
    , actor_(make_actor(obs_dim, static_cast<int>(action_space_.dim()), cfg_.arch, rng))
    , critic_(make_critic(obs_dim, static_cast<int>(action_space_.dim()), cfg_.arch, rng))
    , target_actor_(actor_)
    , target_critic_(critic_)
    , noise_(action_space_.dim(), cfg_.ou)
    , buffer_(cfg_.buffer_capacity)
  {
    cfg_.validate();
    if (!action_space_.is_finite())
    {
      throw UnsupportedSpaceError("DdpgAgent: action space bounds must be finite");
    }
    init_optimizers();
  }

  /// Builds an agent around caller-supplied networks (targets start as copies).
  DdpgAgent(Mlp actor, Mlp critic, BoxSpace action_space, DdpgConfig cfg)
    : action_space_(std::move(action_space))
    , cfg_(std::move(cfg))
    , actor_(std::move(actor))
    , critic_(std::move(critic))
    , target_actor_(actor_)
    , target_critic_(critic_)
    , noise_(action_space_.dim(), cfg_.ou)
    , buffer_(cfg_.buffer_capacity)
  {
    cfg_.validate();
    if (actor_.output_dim() != action_space_.dim() ||
        critic_.input_dim() != actor_.input_dim() + actor_.output_dim() || critic_.output_dim() != 1)
    {
      throw InputError("DdpgAgent: actor/critic shapes do not match the action space");
    }
    init_optimizers();
  }

  [[nodiscard]] const DdpgConfig &config() const { return cfg_; }
  [[nodiscard]] const BoxSpace   &action_space() const { return action_space_; }
  [[nodiscard]] const Mlp        &actor() const { return actor_; }
  [[nodiscard]] const Mlp        &critic() const { return critic_; }
  [[nodiscard]] const Mlp        &target_actor() const { return target_actor_; }
  [[nodiscard]] const Mlp        &target_critic() const { return target_critic_; }
  Mlp                            &actor() { return actor_; }
  Mlp                            &critic() { return critic_; }
  Mlp                            &target_actor() { return target_actor_; }
  Mlp                            &target_critic() { return target_critic_; }
  OuNoise                        &noise() { return noise_; }
  ReplayBuffer                   &buffer() { return buffer_; }
  [[nodiscard]] const ReplayBuffer &buffer() const { return buffer_; }

  /// Deterministic policy output, plus OU noise when exploring, clipped to the action space.
  Vec act(const Vec &obs, bool explore, SeededRng &rng)
  {
    if (obs.size() != actor_.input_dim())
    {
      throw InputError(dim_mismatch("DdpgAgent::act", actor_.input_dim(), obs.size()));
    }
    Vec a = actor_.predict(obs);
    if (explore)
    {
      a += noise_.step(rng);
    }
    return clip_to_space(action_space_, a);
  }

  /// Bootstrap targets from the target networks (no dropout).
  [[nodiscard]] Vec critic_targets(const std::vector<Transition> &batch) const
  {
    if (batch.empty())
    {
      throw InputError("critic_targets: empty batch");
    }
    Vec y(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
    {
      const auto &t = batch[i];
      double      q_next = 0.0;
      if (!(cfg_.mask_terminal && t.done))
      {
        Vec const a_next = target_actor_.predict(t.next_state);
        q_next           = target_critic_.predict(concat(t.next_state, a_next))[0];
      }
      y[static_cast<Eigen::Index>(i)] = t.reward + cfg_.gamma * q_next;
    }
    return y;
  }

  /// One Adam step of the critic towards the bootstrap targets; returns the pre-step loss.
  double critic_update(const std::vector<Transition> &batch, SeededRng &rng)
  {
    Vec const y = critic_targets(batch);
    Vec       q(y.size());
    std::vector<ForwardCache> caches;
    caches.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
    {
      auto pass = critic_.forward(concat(batch[i].state, batch[i].action), &rng);
      q[static_cast<Eigen::Index>(i)] = pass.output[0];
      caches.push_back(std::move(pass.cache));
    }
    MseResult const loss = mse_loss(q, y);
    if (!std::isfinite(loss.loss))
    {
      throw NumericalDivergenceError("critic_update: non-finite loss");
    }
    Gradients grad = critic_.zero_gradients();
    for (std::size_t i = 0; i < batch.size(); ++i)
    {
      grad += critic_.backward(caches[i], Vec::Constant(1, loss.grad[static_cast<Eigen::Index>(i)]));
    }
    adam_step(critic_, grad, critic_opt_);
    return loss.loss;
  }

  /// One Adam ascent step of the actor on the critic's estimate; returns the mean Q
  /// before the step. Critic parameters are read only.
  double actor_update(const std::vector<Transition> &batch, SeededRng &rng)
  {
    if (batch.empty())
    {
      throw InputError("actor_update: empty batch");
    }
    auto const act_dim = action_space_.dim();
    Gradients  grad    = actor_.zero_gradients();
    double     q_sum   = 0.0;
    for (const auto &t : batch)
    {
      auto const   pass  = actor_.forward(t.state, &rng);
      auto const   cpass = critic_.forward_eval(concat(t.state, pass.output));
      q_sum += cpass.output[0];
      Gradients const cg     = critic_.backward(cpass.cache, Vec::Ones(1));
      Vec const       dq_da  = cg.input.tail(act_dim);
      grad += actor_.backward(pass.cache, dq_da);
    }
    double const n = static_cast<double>(batch.size());
    grad *= -1.0 / n;  // ascend Q
    adam_step(actor_, grad, actor_opt_);
    return q_sum / n;
  }

  void update_targets()
  {
    soft_update(actor_, target_actor_, cfg_.tau);
    soft_update(critic_, target_critic_, cfg_.tau);
  }

  [[nodiscard]] const AdamState &actor_optimizer() const { return actor_opt_; }
  [[nodiscard]] const AdamState &critic_optimizer() const { return critic_opt_; }

private:
  void init_optimizers()
  {
    actor_opt_.lr  = cfg_.actor_lr;
    critic_opt_.lr = cfg_.critic_lr;
    actor_.set_mode(NetMode::Train);
    critic_.set_mode(NetMode::Train);
    target_actor_.set_mode(NetMode::Eval);
    target_critic_.set_mode(NetMode::Eval);
  }

  BoxSpace     action_space_;
  DdpgConfig   cfg_;
  Mlp          actor_;
  Mlp          critic_;
  Mlp          target_actor_;
  Mlp          target_critic_;
  OuNoise      noise_;
  ReplayBuffer buffer_;
  AdamState    actor_opt_;
  AdamState    critic_opt_;
};

struct DdpgTrainResult
{
  DdpgAgent               agent;
  std::vector<EpisodeLog> log;
};

/// Per environment step: act with noise, store the transition, then (once the buffer
/// holds enough) one critic step, one actor step and a soft update of both targets.
inline DdpgTrainResult ddpg_train(Environment &env, const DdpgConfig &cfg, SeededRng &rng)
{
  cfg.validate();
  auto const &spec = env.spec();
  DdpgTrainResult result{
      DdpgAgent(static_cast<int>(spec.observation_space.dim()), spec.action_space, cfg, rng), {}};
  DdpgAgent        &agent  = result.agent;
  std::size_t const warmup = static_cast<std::size_t>(std::max(cfg.batch_n, cfg.effective_warmup()));

  for (int ep = 0; ep < cfg.episodes; ++ep)
  {
    EpisodeLog entry{0.0, cfg.ou.sigma, 0};
    Vec        obs = env.reset(rng.next_u64());
    agent.noise().reset();
    for (int t = 0; t < cfg.steps_per_episode; ++t)
    {
      Vec const        action = agent.act(obs, true, rng);
      StepResult const r      = env.step(action);
      agent.buffer().push({obs, action, r.reward, r.observation, r.terminated});
      entry.episode_return += r.reward;
      ++entry.steps;

      if (agent.buffer().size() >= warmup)
      {
        agent.critic_update(agent.buffer().sample(static_cast<std::size_t>(cfg.batch_n), rng), rng);
        agent.actor_update(agent.buffer().sample(static_cast<std::size_t>(cfg.actor_batch), rng), rng);
        agent.update_targets();
      }
      if (r.done)
      {
        break;
      }
      obs = r.observation;
    }
    if (!std::isfinite(entry.episode_return))
    {
      throw NumericalDivergenceError("ddpg_train: non-finite episode return");
    }
    result.log.push_back(entry);
  }
  return result;
}

// Archive layout: "RLAG", u32 header length, JSON header, then four network
// checkpoints (actor, critic, target_actor, target_critic) back to back.
inline void save_agent(const DdpgAgent &agent, const std::string &path, const nlohmann::json &meta = {})
{
  nlohmann::json header = {{"networks", {"actor", "critic", "target_actor", "target_critic"}},
                           {"actor_adam_t", agent.actor_optimizer().t},
                           {"critic_adam_t", agent.critic_optimizer().t}};
  if (meta.is_object())
  {
    header.update(meta);
  }
  std::string const h   = header.dump();
  auto const        len = static_cast<std::uint32_t>(h.size());
  std::ofstream     out(path, std::ios::binary);
  if (!out)
  {
    throw Error("save_agent: cannot open " + path);
  }
  out.write("RLAG", 4);
  out.write(reinterpret_cast<const char *>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const Mlp *net : {&agent.actor(), &agent.critic(), &agent.target_actor(), &agent.target_critic()})
  {
    save_mlp(*net, out);
  }
}

struct AgentArchive
{
  nlohmann::json header;
  Mlp            actor;
  Mlp            critic;
  Mlp            target_actor;
  Mlp            target_critic;
};

inline AgentArchive load_agent(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  char          magic[4];
  std::uint32_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, "RLAG", 4) != 0 ||
      !in.read(reinterpret_cast<char *>(&len), sizeof(len)))
  {
    throw Error("load_agent: " + path + " is not an agent archive");
  }
  std::string h(len, '\0');
  in.read(h.data(), len);
  AgentArchive a;
  a.header        = nlohmann::json::parse(h);
  a.actor         = load_mlp(in);
  a.critic        = load_mlp(in);
  a.target_actor  = load_mlp(in);
  a.target_critic = load_mlp(in);
  return a;
}

}  // namespace rlbench
