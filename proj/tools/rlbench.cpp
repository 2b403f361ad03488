#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rlbench/harness.hpp"

namespace {

constexpr int kExitConfig  = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags
{
  std::string                  config;
  std::string                  algo;
  std::string                  env;
  std::optional<int>           episodes;
  std::optional<int>           steps;
  std::optional<std::uint64_t> seed;
  std::optional<double>        alpha;
  std::optional<double>        gamma;
  std::optional<double>        tau;
  std::optional<int>           buckets;
  std::optional<int>           window;
  std::string                  arch;
  std::string                  out;
};

void add_common(CLI::App *cmd, CommonFlags &f)
{
  cmd->add_option("--config", f.config, "TOML configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--algo", f.algo, "qlearning, sarsa or ddpg");
  cmd->add_option("--env", f.env, "reacher, idp, toy, chain, bridge:<cmd> or bridge:tcp://host:port");
  cmd->add_option("--episodes", f.episodes, "number of episodes");
  cmd->add_option("--steps", f.steps, "step cap per episode");
  cmd->add_option("--seed", f.seed, "master seed (overrides RLBENCH_SEED)");
  cmd->add_option("--alpha", f.alpha, "learning rate");
  cmd->add_option("--gamma", f.gamma, "discount factor");
  cmd->add_option("--tau", f.tau, "DDPG target update weight on the live network");
  cmd->add_option("--buckets", f.buckets, "observation buckets per dimension");
  cmd->add_option("--window", f.window, "moving-average window");
  cmd->add_option("--arch", f.arch, "DDPG hidden layers, e.g. 32,64,32,16, or 'small'");
  cmd->add_option("--out", f.out, "output directory");
}

// Precedence: defaults < config file < RLBENCH_SEED < command line.
rlbench::RunConfig resolve(const CommonFlags &f)
{
  rlbench::RunConfig cfg;
  if (!f.config.empty())
  {
    rlbench::load_toml_file(f.config, cfg);
  }
  rlbench::apply_env_overrides(cfg);
  if (!f.algo.empty())
  {
    cfg.algo = rlbench::algo_from_string(f.algo);
  }
  if (!f.env.empty())
  {
    cfg.env_id = f.env;
  }
  if (f.episodes)
  {
    cfg.episodes = *f.episodes;
  }
  if (f.steps)
  {
    cfg.steps = *f.steps;
  }
  if (f.seed)
  {
    cfg.seed = *f.seed;
  }
  if (f.alpha)
  {
    cfg.set_alpha(*f.alpha);
  }
  if (f.gamma)
  {
    cfg.set_gamma(*f.gamma);
  }
  if (f.tau)
  {
    cfg.ddpg.tau = *f.tau;
  }
  if (f.buckets)
  {
    cfg.obs_buckets = *f.buckets;
  }
  if (f.window)
  {
    cfg.smoothing_window = *f.window;
  }
  if (f.arch == "small")
  {
    cfg.ddpg.arch = rlbench::ArchSpec::small();
  }
  else if (!f.arch.empty())
  {
    cfg.ddpg.arch.hidden = rlbench::parse_int_list(f.arch);
  }
  if (!f.out.empty())
  {
    cfg.out_dir = f.out;
  }
  return cfg;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"rlbench: continuous-control reinforcement learning experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto       *train = app.add_subcommand("train", "run one experiment");
  add_common(train, train_flags);

  CommonFlags sweep_flags;
  std::string alphas_text;
  std::string seeds_text{"0"};
  unsigned    jobs = 0;
  auto       *sweep_cmd = app.add_subcommand("sweep", "run an alpha x seed grid");
  add_common(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--alphas", alphas_text, "comma-separated learning rates, or 'grid' / 'log'")
      ->required();
  sweep_cmd->add_option("--seeds", seeds_text, "comma-separated seeds");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs (0: hardware concurrency)");

  std::string plot_run;
  std::string plot_out;
  auto       *plot = app.add_subcommand("plotdata", "export a run's smoothed curve for plotting");
  plot->add_option("run_dir", plot_run, "run directory containing episodes.csv")->required();
  plot->add_option("--out", plot_out, "output file (default: <run_dir>/plotdata.dat)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    int const code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try
  {
    if (*train)
    {
      auto const cfg = resolve(train_flags);
      auto const art = rlbench::run_experiment(cfg);
      if (!art.ok)
      {
        std::cerr << "rlbench: run failed: " << art.error << '\n';
        return kExitRuntime;
      }
      std::cout << "wrote " << art.log.size() << " episodes to " << art.out_dir.string() << '\n';
      return 0;
    }
    if (*sweep_cmd)
    {
      auto const                 cfg = resolve(sweep_flags);
      std::vector<double> const  alphas =
          (alphas_text == "grid" || alphas_text == "log") ? rlbench::alpha_preset(alphas_text)
                                                           : rlbench::parse_double_list(alphas_text);
      std::vector<std::uint64_t> seeds;
      for (double s : rlbench::parse_double_list(seeds_text))
      {
        if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s)))
        {
          throw rlbench::ConfigError("seeds must be non-negative integers");
        }
        seeds.push_back(static_cast<std::uint64_t>(s));
      }
      auto const results = rlbench::sweep(cfg, alphas, seeds, jobs);
      int        failed  = 0;
      for (const auto &r : results)
      {
        if (!r.ok)
        {
          ++failed;
          std::cerr << "rlbench: " << r.out_dir.string() << " failed: " << r.error << '\n';
        }
      }
      std::cout << "wrote " << results.size() << " runs to " << cfg.out_dir << '\n';
      return failed == 0 ? 0 : kExitRuntime;
    }
    auto const dst = rlbench::write_plotdata(
        plot_run, plot_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(plot_out));
    std::cout << "wrote " << dst.string() << '\n';
    return 0;
  }
  catch (const rlbench::ConfigError &e)
  {
    std::cerr << "rlbench: " << e.what() << '\n';
    return kExitConfig;
  }
  catch (const std::exception &e)
  {
    std::cerr << "rlbench: " << e.what() << '\n';
    return kExitRuntime;
  }
}
