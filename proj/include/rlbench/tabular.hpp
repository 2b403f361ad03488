#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlbench/discretizer.hpp"
#include "rlbench/env.hpp"

namespace rlbench {

/// Dense action-value table indexed by (flat state, flat action).
class QTable
{
public:
  QTable() = default;

  QTable(std::uint64_t states, std::uint64_t actions, double init_value = 0.0)
    : states_(states)
    , actions_(actions)
    , init_value_(init_value)
    , values_(states * actions, init_value)
  {
    if (states == 0 || actions == 0)
    {
      throw InputError("QTable: dimensions must be positive");
    }
  }

  [[nodiscard]] std::uint64_t states() const { return states_; }
  [[nodiscard]] std::uint64_t actions() const { return actions_; }
  [[nodiscard]] double        init_value() const { return init_value_; }

  double &at(std::uint64_t s, std::uint64_t a) { return values_[offset(s, a)]; }
  [[nodiscard]] double at(std::uint64_t s, std::uint64_t a) const { return values_[offset(s, a)]; }

  [[nodiscard]] double max_value(std::uint64_t s) const { return at(s, argmax(s)); }

  // Lowest index wins ties.
  [[nodiscard]] std::uint64_t argmax(std::uint64_t s) const
  {
    std::uint64_t best = 0;
    for (std::uint64_t a = 1; a < actions_; ++a)
    {
      if (at(s, a) > at(s, best))
      {
        best = a;
      }
    }
    return best;
  }

  [[nodiscard]] const std::vector<double> &values() const { return values_; }

  bool operator==(const QTable &o) const = default;

private:
  [[nodiscard]] std::size_t offset(std::uint64_t s, std::uint64_t a) const
  {
    if (s >= states_ || a >= actions_)
    {
      throw InputError("QTable: index (" + std::to_string(s) + ", " + std::to_string(a) +
                       ") out of range");
    }
    return static_cast<std::size_t>(s * actions_ + a);
  }

  std::uint64_t       states_{0};
  std::uint64_t       actions_{0};
  double              init_value_{0.0};
  std::vector<double> values_;
};

struct TdConfig
{
  double        alpha{0.5};
  double        gamma{0.99};
  int           episodes{500};
  int           steps_per_episode{1000};
  double        epsilon0{0.99};
  double        epsilon_min{0.01};
  int           action_buckets{2};
  int           obs_dim_cap{16};
  double        init_value{0.0};
  std::uint64_t table_cap{std::uint64_t{1} << 24};

  void validate() const
  {
    if (!(alpha > 0.0 && alpha <= 1.0))
    {
      throw ConfigError("TdConfig: alpha must lie in (0, 1]");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0))
    {
      throw ConfigError("TdConfig: gamma must lie in [0, 1]");
    }
    if (episodes < 0 || steps_per_episode < 1)
    {
      throw ConfigError("TdConfig: episodes must be >= 0 and steps_per_episode >= 1");
    }
    if (!(epsilon_min >= 0.0 && epsilon_min <= 1.0) || obs_dim_cap < 1 || action_buckets < 1)
    {
      throw ConfigError("TdConfig: invalid epsilon_min, obs_dim_cap or action_buckets");
    }
  }
};

struct EpisodeLog
{
  double episode_return{0.0};
  double epsilon{0.0};  // exploration parameter in force during the episode
  int    steps{0};
};

inline double td_error(double reward, double gamma, double v_next, double v)
{
  return reward + gamma * v_next - v;
}

/// Off-policy update: bootstraps from the greedy value of the successor.
/// A terminal successor contributes nothing.
inline double q_update(QTable &q, std::uint64_t s, std::uint64_t a, double reward,
                       std::uint64_t s_next, double alpha, double gamma, bool terminal = false)
{
  double const bootstrap = terminal ? 0.0 : q.max_value(s_next);
  double      &entry     = q.at(s, a);
  entry += alpha * td_error(reward, gamma, bootstrap, entry);
  return entry;
}

/// On-policy update: bootstraps from the action the behaviour policy actually chose.
inline double sarsa_update(QTable &q, std::uint64_t s, std::uint64_t a, double reward,
                           std::uint64_t s_next, std::uint64_t a_next, double alpha, double gamma,
                           bool terminal = false)
{
  double const bootstrap = terminal ? 0.0 : q.at(s_next, a_next);
  double      &entry     = q.at(s, a);
  entry += alpha * td_error(reward, gamma, bootstrap, entry);
  return entry;
}

/// The raw per-episode decay map eps -> log10((e^eps + 1) / 25). It leaves [0, 1]
/// after one application from 0.99, so callers clamp it.
inline double epsilon_decay_raw(double eps) { return std::log10((std::exp(eps) + 1.0) / 25.0); }

inline double epsilon_step(double eps, double eps_min)
{
  return std::max(eps_min, epsilon_decay_raw(eps));
}

inline std::uint64_t select_epsilon_greedy(const QTable &q, std::uint64_t s, double eps,
                                           SeededRng &rng)
{
  if (rng.uniform() < eps)
  {
    return rng.uniform_int(q.actions());
  }
  return q.argmax(s);
}

enum class TdAlgorithm
{
  QLearning,
  Sarsa
};

inline const char *to_string(TdAlgorithm a) { return a == TdAlgorithm::QLearning ? "qlearning" : "sarsa"; }

struct TabularResult
{
  QTable                  table;
  std::vector<EpisodeLog> log;
};

/// One recorded update, enough to replay the same trajectory through either rule.
struct TdStep
{
  std::uint64_t s{0}, a{0};
  double        reward{0.0};
  std::uint64_t s_next{0}, a_next{0};
  bool          terminal{false};
};

/// Discretises observations with `spec` (leading cfg.obs_dim_cap dimensions) and the
/// action space into cfg.action_buckets per dimension, then runs epsilon-greedy TD control.
/// If `trace` is non-null every update is appended to it.
inline TabularResult train_tabular(Environment &env, TdAlgorithm algo, const RangeSpec &spec,
                                   const TdConfig &cfg, SeededRng &rng,
                                   std::vector<TdStep> *trace = nullptr)
{
  cfg.validate();
  auto const &act_space = env.spec().action_space;
  int const   act_dim   = static_cast<int>(act_space.dim());
  if (spec.dim() != env.spec().observation_space.dim())
  {
    throw InputError(dim_mismatch("train_tabular range spec", env.spec().observation_space.dim(),
                                  spec.dim()));
  }
  RangeSpec const     state_spec = spec.prefix(cfg.obs_dim_cap);
  std::uint64_t const n_actions  = joint_action_count(act_dim, cfg.action_buckets, cfg.table_cap);
  std::uint64_t const n_states =
      joint_action_count(static_cast<int>(state_spec.dim()), state_spec.k, cfg.table_cap);
  if (n_states > cfg.table_cap / n_actions)
  {
    throw CapacityError("train_tabular: Q-table of " + std::to_string(n_states) + " x " +
                        std::to_string(n_actions) + " exceeds the table cap");
  }

  TabularResult result{QTable(n_states, n_actions, cfg.init_value), {}};
  QTable       &q = result.table;

  auto encode = [&](const Vec &obs) { return encode_obs(state_spec, obs.head(state_spec.dim())).flat; };
  auto decode = [&](std::uint64_t a) {
    auto const idx = unflatten_index(a, act_dim, cfg.action_buckets);
    return decode_action(act_space, cfg.action_buckets, idx);
  };

  double eps = cfg.epsilon0;
  for (int ep = 0; ep < cfg.episodes; ++ep)
  {
    EpisodeLog    entry{0.0, eps, 0};
    std::uint64_t s = encode(env.reset(rng.next_u64()));
    std::uint64_t a = select_epsilon_greedy(q, s, eps, rng);
    for (int t = 0; t < cfg.steps_per_episode; ++t)
    {
      StepResult const    r      = env.step(decode(a));
      std::uint64_t const s_next = encode(r.observation);
      std::uint64_t       a_next = 0;
      entry.episode_return += r.reward;
      ++entry.steps;
      if (algo == TdAlgorithm::Sarsa)
      {
        a_next = select_epsilon_greedy(q, s_next, eps, rng);
        sarsa_update(q, s, a, r.reward, s_next, a_next, cfg.alpha, cfg.gamma, r.terminated);
      }
      else
      {
        q_update(q, s, a, r.reward, s_next, cfg.alpha, cfg.gamma, r.terminated);
        a_next = select_epsilon_greedy(q, s_next, eps, rng);
      }
      if (trace != nullptr)
      {
        trace->push_back({s, a, r.reward, s_next, a_next, r.terminated});
      }
      if (!std::isfinite(q.at(s, a)))
      {
        throw NumericalDivergenceError("train_tabular: non-finite Q value");
      }
      if (r.done)
      {
        break;
      }
      s = s_next;
      a = a_next;
    }
    result.log.push_back(entry);
    eps = epsilon_step(eps, cfg.epsilon_min);
  }
  return result;
}

// Binary layout: "RLQT", u32 header length, JSON header, then states*actions doubles
// in host byte order, row-major by state.
inline void save_qtable(const QTable &q, const std::string &path, const nlohmann::json &extra = {})
{
  nlohmann::json header = {
      {"states", q.states()}, {"actions", q.actions()}, {"init_value", q.init_value()}};
  if (extra.is_object())
  {
    header.update(extra);
  }
  std::string const h = header.dump();
  std::ofstream     out(path, std::ios::binary);
  if (!out)
  {
    throw Error("save_qtable: cannot open " + path);
  }
  auto const len = static_cast<std::uint32_t>(h.size());
  out.write("RLQT", 4);
  out.write(reinterpret_cast<const char *>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char *>(q.values().data()),
            static_cast<std::streamsize>(q.values().size() * sizeof(double)));
}

inline QTable load_qtable(const std::string &path, nlohmann::json *header_out = nullptr)
{
  std::ifstream in(path, std::ios::binary);
  char          magic[4];
  std::uint32_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, "RLQT", 4) != 0 ||
      !in.read(reinterpret_cast<char *>(&len), sizeof(len)))
  {
    throw Error("load_qtable: " + path + " is not a Q-table file");
  }
  std::string h(len, '\0');
  in.read(h.data(), len);
  auto const    header = nlohmann::json::parse(h);
  QTable        q(header.at("states").get<std::uint64_t>(), header.at("actions").get<std::uint64_t>(),
                  header.at("init_value").get<double>());
  for (std::uint64_t s = 0; s < q.states(); ++s)
  {
    for (std::uint64_t a = 0; a < q.actions(); ++a)
    {
      if (!in.read(reinterpret_cast<char *>(&q.at(s, a)), sizeof(double)))
      {
        throw Error("load_qtable: truncated file " + path);
      }
    }
  }
  if (header_out != nullptr)
  {
    *header_out = header;
  }
  return q;
}

}  // namespace rlbench
