#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "rlbench/bridge.hpp"
#include "rlbench/ddpg.hpp"
#include "rlbench/discretizer.hpp"
#include "rlbench/envs/idp.hpp"
#include "rlbench/envs/reacher.hpp"
#include "rlbench/envs/toy.hpp"
#include "rlbench/tabular.hpp"

namespace rlbench {

inline constexpr int kCsvSchemaVersion = 1;

/// Trailing mean over the last `window` entries; the first entries average what exists.
inline std::vector<double> moving_average(std::span<const double> xs, int window)
{
  if (window < 1)
  {
    throw InputError("moving_average: window must be >= 1");
  }
  std::vector<double> out;
  out.reserve(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
  {
    sum += xs[i];
    if (i >= static_cast<std::size_t>(window))
    {
      sum -= xs[i - static_cast<std::size_t>(window)];
    }
    std::size_t const n = std::min(i + 1, static_cast<std::size_t>(window));
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

enum class Algo
{
  QLearning,
  Sarsa,
  Ddpg
};

inline const char *to_string(Algo a)
{
  switch (a)
  {
  case Algo::QLearning:
    return "qlearning";
  case Algo::Sarsa:
    return "sarsa";
  default:
    return "ddpg";
  }
}

inline Algo algo_from_string(const std::string &s)
{
  if (s == "qlearning")
  {
    return Algo::QLearning;
  }
  if (s == "sarsa")
  {
    return Algo::Sarsa;
  }
  if (s == "ddpg")
  {
    return Algo::Ddpg;
  }
  throw ConfigError("unknown algorithm '" + s + "' (expected qlearning, sarsa or ddpg)");
}

struct RunConfig
{
  Algo               algo{Algo::QLearning};
  std::string        env_id{"toy"};
  std::optional<int> episodes;  // unset: 500 for tabular, 10 for ddpg
  std::optional<int> steps;     // unset: 1000
  std::uint64_t      seed{0};
  TdConfig           td{};
  DdpgConfig         ddpg{};
  int                obs_buckets{2};
  std::size_t        range_samples{10000};
  double             clip_low{kDefaultClipLow};
  double             clip_high{kDefaultClipHigh};
  int                smoothing_window{10};
  std::string        out_dir{"runs/latest"};

  [[nodiscard]] int effective_episodes() const
  {
    return episodes.value_or(algo == Algo::Ddpg ? 10 : 500);
  }
  [[nodiscard]] int effective_steps() const { return steps.value_or(1000); }

  // A learning rate for whichever algorithm is configured (both DDPG networks for ddpg).
  void set_alpha(double alpha)
  {
    td.alpha       = alpha;
    ddpg.actor_lr  = alpha;
    ddpg.critic_lr = alpha;
  }

  [[nodiscard]] double alpha() const { return algo == Algo::Ddpg ? ddpg.critic_lr : td.alpha; }

  void set_gamma(double gamma)
  {
    td.gamma   = gamma;
    ddpg.gamma = gamma;
  }
};

inline std::vector<int> parse_int_list(const std::string &text)
{
  std::vector<int>  out;
  std::stringstream ss(text);
  std::string       item;
  while (std::getline(ss, item, ','))
  {
    try
    {
      std::size_t used = 0;
      int const   v    = std::stoi(item, &used);
      if (used != item.size() || v < 1)
      {
        throw ConfigError("");
      }
      out.push_back(v);
    }
    catch (const std::exception &)
    {
      throw ConfigError("invalid integer list '" + text + "'");
    }
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string &text)
{
  std::vector<double> out;
  std::stringstream   ss(text);
  std::string         item;
  while (std::getline(ss, item, ','))
  {
    try
    {
      std::size_t  used = 0;
      double const v    = std::stod(item, &used);
      if (used != item.size())
      {
        throw ConfigError("");
      }
      out.push_back(v);
    }
    catch (const std::exception &)
    {
      throw ConfigError("invalid number list '" + text + "'");
    }
  }
  if (out.empty())
  {
    throw ConfigError("empty number list");
  }
  return out;
}

// Learning-rate grids used in the tabular comparisons.
inline std::vector<double> alpha_preset(const std::string &name)
{
  if (name == "grid")
  {
    return {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  }
  if (name == "log")
  {
    return {0.01, 0.05, 0.1, 0.5, 1.0};
  }
  throw ConfigError("unknown alpha preset '" + name + "' (expected grid or log)");
}

inline nlohmann::json rng_state_to_json(const SeededRng::State &s)
{
  return {{"words", s.words}, {"has_spare", s.has_spare}, {"spare", s.spare}};
}

inline nlohmann::json to_json(const RunConfig &c)
{
  std::vector<int> hidden = c.ddpg.arch.hidden;
  return {
      {"algo", to_string(c.algo)},
      {"env", c.env_id},
      {"episodes", c.effective_episodes()},
      {"steps", c.effective_steps()},
      {"seed", c.seed},
      {"window", c.smoothing_window},
      {"tabular",
       {{"alpha", c.td.alpha},
        {"gamma", c.td.gamma},
        {"epsilon0", c.td.epsilon0},
        {"epsilon_min", c.td.epsilon_min},
        {"buckets", c.obs_buckets},
        {"action_buckets", c.td.action_buckets},
        {"obs_dim_cap", c.td.obs_dim_cap},
        {"range_samples", c.range_samples},
        {"clip_low", c.clip_low},
        {"clip_high", c.clip_high},
        {"init_value", c.td.init_value}}},
      {"ddpg",
       {{"gamma", c.ddpg.gamma},
        {"tau", c.ddpg.tau},
        {"batch", c.ddpg.batch_n},
        {"actor_batch", c.ddpg.actor_batch},
        {"actor_lr", c.ddpg.actor_lr},
        {"critic_lr", c.ddpg.critic_lr},
        {"warmup", c.ddpg.effective_warmup()},
        {"buffer", c.ddpg.buffer_capacity},
        {"mask_terminal", c.ddpg.mask_terminal},
        {"arch", hidden},
        {"hidden_activation", to_string(c.ddpg.arch.hidden_activation)},
        {"actor_head", to_string(c.ddpg.arch.actor_head)},
        {"dropout", c.ddpg.arch.dropout},
        {"ou",
         {{"theta", c.ddpg.ou.beta},
          {"mu", c.ddpg.ou.mu},
          {"sigma", c.ddpg.ou.sigma},
          {"standard_form", c.ddpg.ou.standard_form}}}}},
  };
}

namespace detail {

inline void check_keys(const toml::table &tbl, const std::set<std::string> &allowed, const std::string &where)
{
  for (const auto &[k, v] : tbl)
  {
    if (!allowed.contains(std::string(k.str())))
    {
      throw ConfigError("config: unknown key '" + std::string(k.str()) + "' in " + where);
    }
  }
}

template <typename T>
void read(const toml::table &tbl, const char *key, T &dst)
{
  auto node = tbl[key];
  if (!node)
  {
    return;
  }
  if constexpr (std::is_same_v<T, bool>)
  {
    auto v = node.value<bool>();
    if (!v)
    {
      throw ConfigError(std::string("config: '") + key + "' must be a boolean");
    }
    dst = *v;
  }
  else if constexpr (std::is_same_v<T, std::string>)
  {
    auto v = node.value<std::string>();
    if (!v)
    {
      throw ConfigError(std::string("config: '") + key + "' must be a string");
    }
    dst = *v;
  }
  else if constexpr (std::is_floating_point_v<T>)
  {
    auto v = node.value<double>();
    if (!v)
    {
      throw ConfigError(std::string("config: '") + key + "' must be a number");
    }
    dst = *v;
  }
  else
  {
    auto v = node.value<std::int64_t>();
    if (!v || *v < 0)
    {
      throw ConfigError(std::string("config: '") + key + "' must be a non-negative integer");
    }
    dst = static_cast<T>(*v);
  }
}

}  // namespace detail

/// Applies a TOML document on top of `cfg`. Unknown keys are rejected.
inline void apply_toml(const toml::table &doc, RunConfig &cfg)
{
  using detail::read;
  detail::check_keys(doc, {"algo", "env", "episodes", "steps", "seed", "out", "window", "alpha",
                           "gamma", "tabular", "ddpg"},
                     "top level");
  if (auto algo = doc["algo"].value<std::string>())
  {
    cfg.algo = algo_from_string(*algo);
  }
  read(doc, "env", cfg.env_id);
  if (doc["episodes"])
  {
    int v = 0;
    read(doc, "episodes", v);
    cfg.episodes = v;
  }
  if (doc["steps"])
  {
    int v = 0;
    read(doc, "steps", v);
    cfg.steps = v;
  }
  read(doc, "seed", cfg.seed);
  read(doc, "out", cfg.out_dir);
  read(doc, "window", cfg.smoothing_window);
  if (doc["alpha"])
  {
    double a = 0;
    read(doc, "alpha", a);
    cfg.set_alpha(a);
  }
  if (doc["gamma"])
  {
    double g = 0;
    read(doc, "gamma", g);
    cfg.set_gamma(g);
  }

  if (const auto *t = doc["tabular"].as_table())
  {
    detail::check_keys(*t, {"alpha", "gamma", "epsilon0", "epsilon_min", "buckets", "action_buckets",
                            "obs_dim_cap", "range_samples", "clip_low", "clip_high", "init_value"},
                       "[tabular]");
    read(*t, "alpha", cfg.td.alpha);
    read(*t, "gamma", cfg.td.gamma);
    read(*t, "epsilon0", cfg.td.epsilon0);
    read(*t, "epsilon_min", cfg.td.epsilon_min);
    read(*t, "buckets", cfg.obs_buckets);
    read(*t, "action_buckets", cfg.td.action_buckets);
    read(*t, "obs_dim_cap", cfg.td.obs_dim_cap);
    read(*t, "range_samples", cfg.range_samples);
    read(*t, "clip_low", cfg.clip_low);
    read(*t, "clip_high", cfg.clip_high);
    read(*t, "init_value", cfg.td.init_value);
  }
  if (const auto *d = doc["ddpg"].as_table())
  {
    detail::check_keys(*d, {"gamma", "tau", "batch", "actor_batch", "actor_lr", "critic_lr", "warmup",
                            "buffer", "mask_terminal", "arch", "hidden_activation", "actor_head",
                            "dropout", "ou"},
                       "[ddpg]");
    read(*d, "gamma", cfg.ddpg.gamma);
    read(*d, "tau", cfg.ddpg.tau);
    read(*d, "batch", cfg.ddpg.batch_n);
    read(*d, "actor_batch", cfg.ddpg.actor_batch);
    read(*d, "actor_lr", cfg.ddpg.actor_lr);
    read(*d, "critic_lr", cfg.ddpg.critic_lr);
    read(*d, "warmup", cfg.ddpg.warmup_steps);
    read(*d, "buffer", cfg.ddpg.buffer_capacity);
    read(*d, "mask_terminal", cfg.ddpg.mask_terminal);
    read(*d, "dropout", cfg.ddpg.arch.dropout);
    std::string act;
    read(*d, "hidden_activation", act);
    if (!act.empty())
    {
      cfg.ddpg.arch.hidden_activation = activation_from_string(act);
    }
    act.clear();
    read(*d, "actor_head", act);
    if (!act.empty())
    {
      cfg.ddpg.arch.actor_head = activation_from_string(act);
    }
    if (const auto *arr = (*d)["arch"].as_array())
    {
      cfg.ddpg.arch.hidden.clear();
      for (const auto &n : *arr)
      {
        auto v = n.value<std::int64_t>();
        if (!v || *v < 1)
        {
          throw ConfigError("config: [ddpg].arch must be a list of positive integers");
        }
        cfg.ddpg.arch.hidden.push_back(static_cast<int>(*v));
      }
    }
    if (const auto *ou = (*d)["ou"].as_table())
    {
      detail::check_keys(*ou, {"theta", "mu", "sigma", "standard_form"}, "[ddpg.ou]");
      read(*ou, "theta", cfg.ddpg.ou.beta);
      read(*ou, "mu", cfg.ddpg.ou.mu);
      read(*ou, "sigma", cfg.ddpg.ou.sigma);
      read(*ou, "standard_form", cfg.ddpg.ou.standard_form);
    }
  }
}

inline void load_toml_file(const std::string &path, RunConfig &cfg)
{
  try
  {
    apply_toml(toml::parse_file(path), cfg);
  }
  catch (const toml::parse_error &e)
  {
    std::ostringstream msg;
    msg << "config: cannot parse " << path << ": " << e.description() << " at line "
        << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  catch (const InputError &e)
  {
    throw ConfigError(e.what());
  }
}

/// RLBENCH_SEED, when set, replaces the configured seed.
inline void apply_env_overrides(RunConfig &cfg)
{
  if (const char *s = std::getenv("RLBENCH_SEED"); s != nullptr && *s != '\0')
  {
    try
    {
      std::size_t used = 0;
      cfg.seed         = std::stoull(s, &used);
      if (s[used] != '\0')
      {
        throw ConfigError("");
      }
    }
    catch (const std::exception &)
    {
      throw ConfigError(std::string("RLBENCH_SEED is not an unsigned integer: ") + s);
    }
  }
}

/// Resolves an environment id: reacher, idp, toy, chain, bridge:<command>, or
/// bridge:tcp://host:port.
inline std::unique_ptr<Environment> make_environment(const std::string &id)
{
  if (id == "reacher")
  {
    return std::make_unique<ReacherEnv>();
  }
  if (id == "idp")
  {
    return std::make_unique<InvertedDoublePendulumEnv>();
  }
  if (id == "toy")
  {
    return std::make_unique<MoveToOriginEnv>();
  }
  if (id == "chain")
  {
    return std::make_unique<ChainWalkEnv>();
  }
  if (id.starts_with("bridge:"))
  {
    std::string const target = id.substr(7);
    if (target.empty())
    {
      throw ConfigError("bridge environment needs a command or tcp://host:port");
    }
    bridge::BridgeSpec spec;
    if (target.starts_with("tcp://"))
    {
      std::string const hp    = target.substr(6);
      auto const        colon = hp.rfind(':');
      if (colon == std::string::npos)
      {
        throw ConfigError("bridge tcp target must be tcp://host:port");
      }
      spec.transport = bridge::Transport::Tcp;
      spec.host      = hp.substr(0, colon);
      try
      {
        spec.port = std::stoi(hp.substr(colon + 1));
      }
      catch (const std::exception &)
      {
        throw ConfigError("bridge tcp target has an invalid port: " + hp);
      }
    }
    else
    {
      spec.command = target;
    }
    return bridge::BridgeEnv::connect(spec);
  }
  throw ConfigError("unknown environment '" + id + "' (expected reacher, idp, toy, chain or bridge:<cmd>)");
}

inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunArtifact
{
  std::filesystem::path   out_dir;
  std::vector<EpisodeLog> log;
  std::vector<double>     smoothed;
  bool                    ok{true};
  std::string             error;
  double                  alpha{0.0};
  std::uint64_t           seed{0};
};

inline void write_episodes_csv(const std::filesystem::path &path, const std::vector<EpisodeLog> &log,
                               const std::vector<double> &smoothed)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  out << "episode,return,smoothed_return,epsilon_or_noise_scale,steps\n";
  for (std::size_t i = 0; i < log.size(); ++i)
  {
    out << (i + 1) << ',' << format_double(log[i].episode_return) << ','
        << format_double(smoothed[i]) << ',' << format_double(log[i].epsilon) << ','
        << log[i].steps << '\n';
  }
}

inline void write_json(const std::filesystem::path &path, const nlohmann::json &j)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

/// Checks everything that can be checked without running: algorithm/env pairing and
/// sub-config ranges. Throws ConfigError.
inline void validate_run_config(const RunConfig &cfg)
{
  static const std::set<std::string> builtin{"reacher", "idp", "toy", "chain"};
  if (!builtin.contains(cfg.env_id) && !cfg.env_id.starts_with("bridge:"))
  {
    throw ConfigError("unknown environment '" + cfg.env_id + "'");
  }
  if (cfg.effective_episodes() < 0 || cfg.effective_steps() < 1 || cfg.smoothing_window < 1)
  {
    throw ConfigError("episodes must be >= 0, steps >= 1 and window >= 1");
  }
  if (cfg.algo == Algo::Ddpg)
  {
    cfg.ddpg.validate();
  }
  else
  {
    cfg.td.validate();
    if (cfg.obs_buckets < 1 || cfg.range_samples < 2 || !(cfg.clip_low < cfg.clip_high))
    {
      throw ConfigError("tabular: buckets >= 1, range_samples >= 2 and clip_low < clip_high required");
    }
  }
}

/// Runs one configured experiment and writes its artifacts into cfg.out_dir:
/// episodes.csv, config.json, status.json, and ranges.json + qtable.bin (tabular) or
/// agent.ckpt (ddpg). Configuration problems throw ConfigError; failures during the run
/// are recorded in status.json and returned with ok = false.
inline RunArtifact run_experiment(const RunConfig &cfg)
{
  validate_run_config(cfg);
  namespace fs = std::filesystem;
  RunArtifact art;
  art.out_dir = cfg.out_dir;
  art.alpha   = cfg.alpha();
  art.seed    = cfg.seed;
  std::error_code ec;
  fs::create_directories(art.out_dir, ec);
  if (ec)
  {
    throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
  }
  write_json(art.out_dir / "config.json", to_json(cfg));

  auto const started = std::chrono::steady_clock::now();
  try
  {
    auto      env = make_environment(cfg.env_id);
    SeededRng rng(cfg.seed);
    if (cfg.algo == Algo::Ddpg)
    {
      DdpgConfig dc        = cfg.ddpg;
      dc.episodes          = cfg.effective_episodes();
      dc.steps_per_episode = cfg.effective_steps();
      auto result          = ddpg_train(*env, dc, rng);
      art.log              = std::move(result.log);
      save_agent(result.agent, (art.out_dir / "agent.ckpt").string(),
                 {{"config", to_json(cfg)},
                  {"episode", art.log.size()},
                  {"rng_state", rng_state_to_json(rng.state())}});
    }
    else
    {
      TdConfig td          = cfg.td;
      td.episodes          = cfg.effective_episodes();
      td.steps_per_episode = cfg.effective_steps();
      auto const samples   = collect_random_observations(*env, cfg.range_samples, rng);
      RangeSpec const spec = fit_ranges(samples, cfg.obs_buckets, cfg.clip_low, cfg.clip_high);
      write_json(art.out_dir / "ranges.json", nlohmann::json(spec));
      auto const algo   = cfg.algo == Algo::Sarsa ? TdAlgorithm::Sarsa : TdAlgorithm::QLearning;
      auto       result = train_tabular(*env, algo, spec, td, rng);
      art.log           = std::move(result.log);
      save_qtable(result.table, (art.out_dir / "qtable.bin").string(),
                  {{"k", spec.k}, {"obs_dims", spec.prefix(td.obs_dim_cap).dim()},
                   {"action_buckets", td.action_buckets}});
    }
  }
  catch (const Error &e)
  {
    art.ok    = false;
    art.error = e.what();
  }
  catch (const std::exception &e)
  {
    art.ok    = false;
    art.error = e.what();
  }
  double const wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  std::vector<double> returns;
  for (const auto &e : art.log)
  {
    returns.push_back(e.episode_return);
  }
  art.smoothed = moving_average(returns, cfg.smoothing_window);
  write_episodes_csv(art.out_dir / "episodes.csv", art.log, art.smoothed);
  nlohmann::json status = {{"status", art.ok ? "ok" : "failed"},
                           {"episodes_completed", art.log.size()},
                           {"wall_clock_seconds", wall}};
  if (!art.ok)
  {
    status["error"] = art.error;
  }
  write_json(art.out_dir / "status.json", status);
  return art;
}

inline std::string sweep_run_name(double alpha, std::uint64_t seed)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "alpha_%g_seed_%llu", alpha, static_cast<unsigned long long>(seed));
  return buf;
}

/// Runs every (alpha, seed) pair as an isolated experiment under base.out_dir and writes
/// summary.csv there. Failed runs are reported in the summary, not thrown.
inline std::vector<RunArtifact> sweep(const RunConfig &base, const std::vector<double> &alphas,
                                      const std::vector<std::uint64_t> &seeds, unsigned jobs = 0)
{
  if (alphas.empty() || seeds.empty())
  {
    throw ConfigError("sweep: alphas and seeds must be non-empty");
  }
  validate_run_config(base);
  std::vector<RunConfig> configs;
  for (double a : alphas)
  {
    for (std::uint64_t s : seeds)
    {
      RunConfig c = base;
      c.set_alpha(a);
      c.seed    = s;
      c.out_dir = (std::filesystem::path(base.out_dir) / sweep_run_name(a, s)).string();
      configs.push_back(std::move(c));
    }
  }
  std::vector<RunArtifact> results(configs.size());
  if (jobs == 0)
  {
    jobs = std::max(1u, std::thread::hardware_concurrency());
  }
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(configs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++)
    {
      try
      {
        results[i] = run_experiment(configs[i]);
      }
      catch (const std::exception &e)
      {
        results[i].out_dir = configs[i].out_dir;
        results[i].ok      = false;
        results[i].error   = e.what();
      }
      results[i].alpha = configs[i].alpha();
      results[i].seed  = configs[i].seed;
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j)
    {
      pool.emplace_back(worker);
    }
    worker();
  }

  std::filesystem::create_directories(base.out_dir);
  std::ofstream out(std::filesystem::path(base.out_dir) / "summary.csv");
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  out << "alpha,seed,final_smoothed_return,mean_return,status\n";
  for (const auto &r : results)
  {
    double mean = 0.0;
    for (const auto &e : r.log)
    {
      mean += e.episode_return;
    }
    mean = r.log.empty() ? 0.0 : mean / static_cast<double>(r.log.size());
    double const final_smoothed = r.smoothed.empty() ? 0.0 : r.smoothed.back();
    out << format_double(r.alpha) << ',' << r.seed << ',' << format_double(final_smoothed) << ','
        << format_double(mean) << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
  return results;
}

struct CsvTable
{
  std::vector<std::string>              header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string &name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
    {
      if (header[i] == name)
      {
        return i;
      }
    }
    throw InputError("csv: no column '" + name + "'");
  }
};

/// Reads one of the harness CSV files, skipping '#' comment lines.
inline CsvTable read_csv(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot read " + path.string());
  }
  auto split = [](const std::string &line) {
    std::vector<std::string> cells;
    std::stringstream        ss(line);
    std::string              cell;
    while (std::getline(ss, cell, ','))
    {
      cells.push_back(cell);
    }
    return cells;
  };
  CsvTable    t;
  std::string line;
  while (std::getline(in, line))
  {
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    if (t.header.empty())
    {
      t.header = split(line);
    }
    else
    {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

/// Writes `episode smoothed_return` pairs for gnuplot next to the run's CSV.
inline std::filesystem::path write_plotdata(const std::filesystem::path &run_dir,
                                            std::optional<std::filesystem::path> out_path = {})
{
  CsvTable const    t   = read_csv(run_dir / "episodes.csv");
  std::size_t const ep  = t.column("episode");
  std::size_t const sm  = t.column("smoothed_return");
  auto const        dst = out_path.value_or(run_dir / "plotdata.dat");
  std::ofstream     out(dst);
  if (!out)
  {
    throw Error("cannot write " + dst.string());
  }
  out << "# episode smoothed_return\n";
  for (const auto &row : t.rows)
  {
    out << row.at(ep) << ' ' << row.at(sm) << '\n';
  }
  return dst;
}

}  // namespace rlbench
