#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "rlbench/envs/toy.hpp"
#include "rlbench/tabular.hpp"

using namespace rlbench;

namespace {

// Q* of the chain corridor by value iteration over its transition table.
std::vector<std::array<double, 2>> chain_value_iteration(int length, double gamma)
{
  std::vector<std::array<double, 2>> q(static_cast<std::size_t>(length), {0.0, 0.0});
  for (int it = 0; it < 1000; ++it)
  {
    auto next = q;
    for (int s = 0; s < length - 1; ++s)
    {
      for (int a = 0; a < 2; ++a)
      {
        int const    s2       = a == 0 ? std::max(0, s - 1) : s + 1;
        bool const   terminal = s2 == length - 1;
        double const r        = terminal ? 1.0 : 0.0;
        double const v2 = terminal ? 0.0 : std::max(q[static_cast<std::size_t>(s2)][0],
                                                    q[static_cast<std::size_t>(s2)][1]);
        next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = r + gamma * v2;
      }
    }
    q = next;
  }
  return q;
}

RangeSpec chain_spec() { return {Vec::Zero(1), Vec::Constant(1, 4.0), 5}; }

TdConfig chain_config()
{
  TdConfig cfg;
  cfg.alpha             = 0.5;
  cfg.gamma             = 0.9;
  cfg.episodes          = 5000;
  cfg.steps_per_episode = 100;
  cfg.epsilon_min       = 0.1;
  return cfg;
}

}  // namespace

TEST(TdError, Examples)
{
  EXPECT_EQ(td_error(0.0, 0.9, 3.0, 2.7), 0.0 + 0.9 * 3.0 - 2.7);
  EXPECT_EQ(td_error(1.0, 0.99, 0.0, 0.0), 1.0);
  EXPECT_EQ(td_error(0.0, 1.0, 2.0, 5.0), -3.0);
}

TEST(QUpdate, Examples)
{
  QTable q(2, 2);
  q_update(q, 0, 1, 1.0, 1, 0.5, 0.99, false);
  EXPECT_EQ(q.at(0, 1), 0.5);

  QTable unchanged(2, 2, 0.3);
  QTable copy = unchanged;
  q_update(unchanged, 0, 0, 5.0, 1, 0.0, 0.9, false);
  EXPECT_EQ(unchanged, copy);

  QTable full(2, 2);
  full.at(0, 0) = 1.0;
  q_update(full, 0, 0, 1.0, 1, 1.0, 0.0, false);
  EXPECT_EQ(full.at(0, 0), 1.0);
}

TEST(QUpdate, TerminalDoesNotBootstrap)
{
  QTable q(2, 1);
  q.at(1, 0) = 100.0;
  q_update(q, 0, 0, 1.0, 1, 1.0, 0.9, true);
  EXPECT_EQ(q.at(0, 0), 1.0);
}

TEST(SarsaUpdate, Examples)
{
  QTable q(2, 2);
  sarsa_update(q, 0, 0, -1.0, 1, 1, 0.5, 0.9, false);
  EXPECT_EQ(q.at(0, 0), -0.5);

  QTable a(3, 2), b(3, 2);
  a.at(2, 1) = b.at(2, 1) = 0.7;
  a.at(2, 0) = b.at(2, 0) = 0.2;
  q_update(a, 1, 0, 0.3, 2, 0.4, 0.9, false);
  sarsa_update(b, 1, 0, 0.3, 2, b.argmax(2), 0.4, 0.9, false);
  EXPECT_EQ(a, b);
}

TEST(SarsaUpdate, GammaZeroMatchesQLearningForAnyNextAction)
{
  for (std::uint64_t a_next = 0; a_next < 3; ++a_next)
  {
    QTable a(2, 3), b(2, 3);
    a.at(1, 2) = b.at(1, 2) = 5.0;
    q_update(a, 0, 1, 0.25, 1, 0.6, 0.0, false);
    sarsa_update(b, 0, 1, 0.25, 1, a_next, 0.6, 0.0, false);
    EXPECT_EQ(a, b);
  }
}

TEST(Epsilon, DecayValues)
{
  double const raw = epsilon_decay_raw(0.99);
  EXPECT_NEAR(raw, std::log10((std::exp(0.99) + 1.0) / 25.0), 1e-15);
  EXPECT_NEAR(raw, -0.8308, 1e-3);
  EXPECT_EQ(epsilon_step(0.99, 0.01), 0.01);
  double x = 0.99;
  for (int i = 0; i < 200; ++i)
  {
    x = epsilon_decay_raw(x);
  }
  EXPECT_NEAR(epsilon_decay_raw(x), x, 1e-12);
  EXPECT_NEAR(x, -1.29258, 1e-5);
  EXPECT_NEAR(x, -1.2934, 1e-3);
  for (double e : {-5.0, 0.0, 0.5, 3.0})
  {
    EXPECT_GE(epsilon_step(e, 0.01), 0.01);
  }
}

TEST(EpsilonGreedy, ZeroEpsilonIsGreedyWithLowestTieBreak)
{
  QTable    q(1, 4);
  SeededRng rng(1);
  EXPECT_EQ(select_epsilon_greedy(q, 0, 0.0, rng), 0u);
  q.at(0, 2) = 1.0;
  for (int i = 0; i < 100; ++i)
  {
    EXPECT_EQ(select_epsilon_greedy(q, 0, 0.0, rng), 2u);
  }
}

TEST(EpsilonGreedy, UniformWhenEpsilonIsOne)
{
  QTable    q(1, 4);
  q.at(0, 3) = 10.0;
  SeededRng rng(2);
  int const n = 100000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i)
  {
    ++counts[select_epsilon_greedy(q, 0, 1.0, rng)];
  }
  double const sd = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts)
  {
    EXPECT_LT(std::abs(c - n * 0.25), 3.0 * sd);
  }
}

TEST(TrainTabular, ZeroEpisodes)
{
  ChainWalkEnv env;
  SeededRng    rng(0);
  TdConfig     cfg = chain_config();
  cfg.episodes     = 0;
  cfg.init_value   = 0.25;
  auto const r     = train_tabular(env, TdAlgorithm::QLearning, chain_spec(), cfg, rng);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.table, QTable(5, 2, 0.25));
}

TEST(TrainTabular, QLearningConvergesOnChain)
{
  ChainWalkEnv env;
  SeededRng    rng(11);
  auto const   r     = train_tabular(env, TdAlgorithm::QLearning, chain_spec(), chain_config(), rng);
  auto const   qstar = chain_value_iteration(5, 0.9);
  double       worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    for (std::uint64_t a = 0; a < 2; ++a)
    {
      worst = std::max(worst, std::abs(r.table.at(s, a) - qstar[s][a]));
    }
  }
  EXPECT_LT(worst, 0.05);
  EXPECT_NEAR(qstar[0][1], std::pow(0.9, 3), 1e-15);
}

TEST(TrainTabular, GammaZeroSarsaEqualsQLearningOnSameTrajectory)
{
  ChainWalkEnv        env;
  SeededRng           rng(4);
  TdConfig            cfg = chain_config();
  cfg.gamma             = 0.0;
  cfg.episodes          = 200;
  std::vector<TdStep> trace;
  auto const trained = train_tabular(env, TdAlgorithm::QLearning, chain_spec(), cfg, rng, &trace);
  ASSERT_FALSE(trace.empty());
  QTable q(5, 2), sarsa(5, 2);
  for (const auto &t : trace)
  {
    q_update(q, t.s, t.a, t.reward, t.s_next, cfg.alpha, 0.0, t.terminal);
    sarsa_update(sarsa, t.s, t.a, t.reward, t.s_next, t.a_next, cfg.alpha, 0.0, t.terminal);
  }
  EXPECT_EQ(q, sarsa);
  EXPECT_EQ(q, trained.table);
}

TEST(TrainTabular, SameSeedSameLog)
{
  for (auto algo : {TdAlgorithm::QLearning, TdAlgorithm::Sarsa})
  {
    ChainWalkEnv e1, e2;
    SeededRng    r1(8), r2(8);
    TdConfig     cfg = chain_config();
    cfg.episodes     = 50;
    auto const a     = train_tabular(e1, algo, chain_spec(), cfg, r1);
    auto const b     = train_tabular(e2, algo, chain_spec(), cfg, r2);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i)
    {
      EXPECT_EQ(a.log[i].episode_return, b.log[i].episode_return);
      EXPECT_EQ(a.log[i].steps, b.log[i].steps);
    }
    EXPECT_EQ(a.table, b.table);
  }
}

TEST(TrainTabular, EpsilonLoggedAndDecayed)
{
  ChainWalkEnv env;
  SeededRng    rng(1);
  TdConfig     cfg = chain_config();
  cfg.episodes     = 3;
  auto const r     = train_tabular(env, TdAlgorithm::Sarsa, chain_spec(), cfg, rng);
  EXPECT_EQ(r.log[0].epsilon, 0.99);
  EXPECT_EQ(r.log[1].epsilon, 0.1);
}

TEST(TrainTabular, TableCapEnforced)
{
  MoveToOriginEnv env;
  SeededRng       rng(0);
  TdConfig        cfg = chain_config();
  cfg.table_cap     = 8;
  RangeSpec const r{Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), 16};
  EXPECT_THROW(train_tabular(env, TdAlgorithm::QLearning, r, cfg, rng), CapacityError);
}

TEST(TrainTabular, ConfigValidation)
{
  TdConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(QTableFile, RoundTrip)
{
  QTable q(3, 2, 0.1);
  q.at(2, 1) = -4.5;
  auto const path = std::filesystem::temp_directory_path() / "rlbench_qtable_test.bin";
  save_qtable(q, path.string(), {{"k", 3}});
  nlohmann::json header;
  QTable const   back = load_qtable(path.string(), &header);
  EXPECT_EQ(back, q);
  EXPECT_EQ(header.at("k"), 3);
  std::filesystem::remove(path);
}
