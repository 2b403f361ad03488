#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rlbench/harness.hpp"

using namespace rlbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string &name)
{
  fs::path const dir = fs::temp_directory_path() / ("rlbench_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path &p)
{
  std::ifstream      in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig toy_tabular(const fs::path &out, int episodes = 20)
{
  RunConfig cfg;
  cfg.algo          = Algo::QLearning;
  cfg.env_id        = "toy";
  cfg.episodes      = episodes;
  cfg.range_samples = 200;
  cfg.out_dir       = out.string();
  return cfg;
}

int run_cli(const std::string &args)
{
  std::string const cmd = std::string(RLBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int const         rc  = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(MovingAverage, Examples)
{
  std::vector<double> const xs{1, 2, 3, 4};
  EXPECT_EQ(moving_average(xs, 1), xs);
  EXPECT_EQ(moving_average(xs, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  std::vector<double> const c(7, 3.25);
  EXPECT_EQ(moving_average(c, 3), c);
  EXPECT_THROW(moving_average(xs, 0), InputError);
}

TEST(RunExperiment, OneEpisodeOneRow)
{
  auto const dir = fresh_dir("one_row");
  auto const art = run_experiment(toy_tabular(dir, 1));
  ASSERT_TRUE(art.ok) << art.error;
  auto const table = read_csv(dir / "episodes.csv");
  EXPECT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.header, (std::vector<std::string>{"episode", "return", "smoothed_return",
                                                    "epsilon_or_noise_scale", "steps"}));
  EXPECT_EQ(slurp(dir / "episodes.csv").rfind("# schema_version=1\n", 0), 0u);
  for (const char *f : {"config.json", "status.json", "ranges.json", "qtable.bin"})
  {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST(RunExperiment, RerunIsByteIdentical)
{
  auto const a = fresh_dir("rerun_a");
  auto const b = fresh_dir("rerun_b");
  for (Algo algo : {Algo::Sarsa, Algo::Ddpg})
  {
    RunConfig ca = toy_tabular(a, 5);
    ca.algo      = algo;
    ca.ddpg.arch = ArchSpec::small();
    RunConfig cb = ca;
    cb.out_dir   = b.string();
    ASSERT_TRUE(run_experiment(ca).ok);
    ASSERT_TRUE(run_experiment(cb).ok);
    EXPECT_EQ(slurp(a / "episodes.csv"), slurp(b / "episodes.csv"));
    EXPECT_EQ(slurp(a / "config.json"), slurp(b / "config.json"));
  }
  EXPECT_TRUE(fs::exists(a / "agent.ckpt"));
}

TEST(RunExperiment, SmoothedColumnIsMovingAverage)
{
  auto const dir = fresh_dir("smooth");
  RunConfig  cfg = toy_tabular(dir, 30);
  cfg.smoothing_window = 4;
  auto const art       = run_experiment(cfg);
  std::vector<double> returns;
  for (const auto &e : art.log)
  {
    returns.push_back(e.episode_return);
  }
  EXPECT_EQ(art.smoothed, moving_average(returns, 4));
  auto const t = read_csv(dir / "episodes.csv");
  EXPECT_EQ(std::stod(t.rows.back()[t.column("smoothed_return")]), art.smoothed.back());
}

TEST(RunExperiment, UnknownNamesAreConfigErrors)
{
  RunConfig cfg = toy_tabular(fresh_dir("unknown"));
  cfg.env_id    = "cartpole";
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  EXPECT_THROW(algo_from_string("ppo"), ConfigError);
}

TEST(RunExperiment, RuntimeFailureRecordedInStatus)
{
  auto const dir = fresh_dir("failure");
  RunConfig  cfg = toy_tabular(dir);
  cfg.env_id     = "bridge:/nonexistent/sidecar 2>/dev/null";
  auto const art = run_experiment(cfg);
  EXPECT_FALSE(art.ok);
  auto const status = nlohmann::json::parse(slurp(dir / "status.json"));
  EXPECT_EQ(status["status"], "failed");
  EXPECT_FALSE(status["error"].get<std::string>().empty());
}

TEST(RunExperiment, BridgeEnvironmentThroughHarness)
{
  auto const dir = fresh_dir("bridge_run");
  RunConfig  cfg = toy_tabular(dir, 3);
  cfg.env_id     = std::string("bridge:") + MOCK_SIDECAR_PATH + " --max-steps 20";
  auto const art = run_experiment(cfg);
  ASSERT_TRUE(art.ok) << art.error;
  EXPECT_EQ(art.log.size(), 3u);
  EXPECT_EQ(art.log[0].steps, 20);
}

TEST(Sweep, SingleRun)
{
  auto const dir = fresh_dir("sweep_single");
  auto const out = sweep(toy_tabular(dir, 5), {0.5}, {1}, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / sweep_run_name(0.5, 1) / "episodes.csv"));
}

TEST(Sweep, PresetGridAndSummary)
{
  auto const dir     = fresh_dir("sweep_log");
  auto const alphas  = alpha_preset("log");
  EXPECT_EQ(alphas, (std::vector<double>{0.01, 0.05, 0.1, 0.5, 1.0}));
  auto const results = sweep(toy_tabular(dir, 12), alphas, {3}, 3);
  ASSERT_EQ(results.size(), 5u);
  auto const summary = read_csv(dir / "summary.csv");
  ASSERT_EQ(summary.rows.size(), 5u);
  for (std::size_t i = 0; i < results.size(); ++i)
  {
    auto const run = read_csv(results[i].out_dir / "episodes.csv");
    EXPECT_EQ(summary.rows[i][summary.column("final_smoothed_return")],
              run.rows.back()[run.column("smoothed_return")]);
    EXPECT_EQ(summary.rows[i][summary.column("status")], "ok");
  }
}

TEST(Sweep, RepeatedSweepsMatch)
{
  auto const a = fresh_dir("sweep_rep_a");
  auto const b = fresh_dir("sweep_rep_b");
  sweep(toy_tabular(a, 8), {0.2, 0.9}, {1, 2}, 4);
  sweep(toy_tabular(b, 8), {0.2, 0.9}, {1, 2}, 1);
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Sweep, FailedRunReportedNotThrown)
{
  auto const dir = fresh_dir("sweep_fail");
  RunConfig  cfg = toy_tabular(dir);
  cfg.env_id     = "bridge:/nonexistent/sidecar 2>/dev/null";
  auto const out = sweep(cfg, {0.5}, {1}, 1);
  EXPECT_FALSE(out[0].ok);
  EXPECT_EQ(read_csv(dir / "summary.csv").rows[0].back(), "failed");
}

TEST(Config, TomlAppliedAndStrict)
{
  RunConfig cfg;
  apply_toml(toml::parse(R"(
algo = "ddpg"
env = "toy"
episodes = 7
seed = 99
[ddpg]
tau = 0.5
arch = [8, 4]
[ddpg.ou]
sigma = 0.1
)"),
             cfg);
  EXPECT_EQ(cfg.algo, Algo::Ddpg);
  EXPECT_EQ(cfg.effective_episodes(), 7);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.ddpg.tau, 0.5);
  EXPECT_EQ(cfg.ddpg.arch.hidden, (std::vector<int>{8, 4}));
  EXPECT_EQ(cfg.ddpg.ou.sigma, 0.1);

  RunConfig other;
  EXPECT_THROW(apply_toml(toml::parse("episods = 3"), other), ConfigError);
  EXPECT_THROW(apply_toml(toml::parse("[ddpg]\nbeta = 3"), other), ConfigError);
  EXPECT_THROW(apply_toml(toml::parse("episodes = \"many\""), other), ConfigError);
}

TEST(Config, DefaultEpisodesDependOnAlgorithm)
{
  RunConfig cfg;
  EXPECT_EQ(cfg.effective_episodes(), 500);
  cfg.algo = Algo::Ddpg;
  EXPECT_EQ(cfg.effective_episodes(), 10);
  EXPECT_EQ(cfg.ddpg.gamma, 0.4);
  EXPECT_EQ(cfg.ddpg.tau, 0.99);
  EXPECT_EQ(cfg.ddpg.batch_n, 100);
  EXPECT_EQ(cfg.ddpg.buffer_capacity, 10000u);
}

TEST(Config, SeedEnvironmentOverride)
{
  RunConfig cfg;
  cfg.seed = 1;
  ::setenv("RLBENCH_SEED", "1234", 1);
  apply_env_overrides(cfg);
  EXPECT_EQ(cfg.seed, 1234u);
  ::setenv("RLBENCH_SEED", "12x", 1);
  EXPECT_THROW(apply_env_overrides(cfg), ConfigError);
  ::unsetenv("RLBENCH_SEED");
}

TEST(Plotdata, TwoColumns)
{
  auto const dir = fresh_dir("plot");
  run_experiment(toy_tabular(dir, 4));
  auto const          dst = write_plotdata(dir);
  std::ifstream       in(dst);
  std::string         line;
  std::vector<std::string> lines;
  while (std::getline(in, line))
  {
    lines.push_back(line);
  }
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0][0], '#');
  EXPECT_EQ(lines[1].rfind("1 ", 0), 0u);
}

TEST(Cli, ExitCodes)
{
  auto const dir = fresh_dir("cli_codes");
  EXPECT_EQ(run_cli("train --env toy --episodes 2 --out " + dir.string()), 0);
  EXPECT_EQ(run_cli("train --env nowhere --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("train --algo ppo --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("train --bogus-flag"), 2);
  EXPECT_EQ(run_cli("train --env 'bridge:/nonexistent/sidecar' --episodes 1 --out " + dir.string()), 3);
  EXPECT_EQ(run_cli("plotdata " + dir.string()), 0);
}

TEST(Cli, ConfigFileAndOverrides)
{
  auto const dir  = fresh_dir("cli_config");
  fs::create_directories(dir);
  std::ofstream(dir / "run.toml") << "algo = \"sarsa\"\nenv = \"chain\"\nepisodes = 4\nseed = 5\n";
  auto const out = dir / "out";
  ASSERT_EQ(run_cli("train --config " + (dir / "run.toml").string() + " --episodes 6 --out " +
                    out.string()),
            0);
  auto const cfg = nlohmann::json::parse(slurp(out / "config.json"));
  EXPECT_EQ(cfg["algo"], "sarsa");
  EXPECT_EQ(cfg["env"], "chain");
  EXPECT_EQ(cfg["episodes"], 6);
  EXPECT_EQ(cfg["seed"], 5);
  std::ofstream(dir / "bad.toml") << "episodes = 4\nunknown = 1\n";
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.toml").string() + " --out " + out.string()), 2);
}

TEST(Cli, SweepWritesSummary)
{
  auto const dir = fresh_dir("cli_sweep");
  ASSERT_EQ(run_cli("sweep --env toy --episodes 3 --alphas 0.1,0.5 --seeds 1,2 --jobs 2 --out " +
                    dir.string()),
            0);
  EXPECT_EQ(read_csv(dir / "summary.csv").rows.size(), 4u);
}
