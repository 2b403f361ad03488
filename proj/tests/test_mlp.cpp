#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rlbench/mlp.hpp"

using namespace rlbench;

TEST(LayerSpec, ParamCount)
{
  EXPECT_EQ((LayerSpec{17, 32, Activation::Relu, 0.0}.param_count()), 576u);
  EXPECT_EQ((LayerSpec{23, 32, Activation::Relu, 0.0}.param_count()), 768u);
}

TEST(Mlp, ActorAndCriticLayerCounts)
{
  SeededRng  rng(0);
  Mlp const  actor  = make_actor(17, 6, ArchSpec::deep(), rng);
  Mlp const  critic = make_critic(17, 6, ArchSpec::deep(), rng);
  EXPECT_EQ(actor.layer_param_counts(), (std::vector<std::size_t>{576, 2112, 2080, 528, 102}));
  EXPECT_EQ(critic.layer_param_counts().front(), 768u);
  EXPECT_EQ(critic.output_dim(), 1);
  EXPECT_EQ(actor.layers().back().activation, Activation::Tanh);
  EXPECT_EQ(critic.layers().back().activation, Activation::Linear);
}

TEST(Mlp, InvalidLayersRejected)
{
  EXPECT_THROW(Mlp({{2, 3, Activation::Relu, 0.0}, {4, 1, Activation::Linear, 0.0}}), InputError);
  EXPECT_THROW(Mlp({{2, 3, Activation::Relu, 1.0}}), InputError);
}

TEST(Mlp, ZeroNetGivesZeroOutput)
{
  for (auto head : {Activation::Linear, Activation::Tanh})
  {
    Mlp const net({{3, 4, Activation::Relu, 0.0}, {4, 2, head, 0.0}});
    Vec const x = Vec::Constant(3, 0.7);
    EXPECT_EQ(net.predict(x), Vec::Zero(2));
  }
}

TEST(Mlp, ScalarTanhLayer)
{
  Mlp net({{1, 1, Activation::Tanh, 0.0}});
  net.set_weight(0, Eigen::MatrixXd::Constant(1, 1, 2.0));
  net.set_bias(0, Vec::Constant(1, 1.0));
  EXPECT_DOUBLE_EQ(net.predict(Vec::Constant(1, 0.5))[0], std::tanh(2.0));
  EXPECT_NEAR(net.predict(Vec::Constant(1, 0.5))[0], 0.96403, 1e-5);
}

TEST(Mlp, InputDimensionMismatch)
{
  Mlp const net({{3, 2, Activation::Linear, 0.0}});
  EXPECT_THROW(net.predict(Vec::Zero(2)), InputError);
  EXPECT_THROW((void)net.forward(Vec::Zero(4)), InputError);
}

TEST(Mlp, InvertedDropoutPreservesMean)
{
  Mlp net({{1, 1, Activation::Linear, 0.2}});
  net.set_weight(0, Eigen::MatrixXd::Constant(1, 1, 1.0));
  net.set_bias(0, Vec::Constant(1, 0.5));
  net.set_mode(NetMode::Train);
  SeededRng rng(3);
  Vec const x = Vec::Constant(1, 1.0);
  double    sum = 0.0;
  int const n   = 100000;
  for (int i = 0; i < n; ++i)
  {
    sum += net.forward(x, &rng).output[0];
  }
  double const eval = net.predict(x)[0];
  EXPECT_NEAR(sum / n, eval, 0.01 * std::abs(eval));
  EXPECT_THROW((void)net.forward(x), InputError);
  net.set_mode(NetMode::Eval);
  EXPECT_EQ(net.forward(x).output[0], eval);
}

TEST(Mlp, BackwardZeroUpstream)
{
  SeededRng  rng(1);
  Mlp const  net({{3, 4, Activation::Tanh, 0.0}, {4, 2, Activation::Linear, 0.0}}, rng);
  auto const pass = net.forward_eval(Vec::Constant(3, 0.2));
  Vec const  g    = net.backward(pass.cache, Vec::Zero(2)).flat();
  EXPECT_EQ(g, Vec::Zero(g.size()));
}

TEST(Mlp, AffineWeightGradientIsOuterProduct)
{
  SeededRng  rng(2);
  Mlp const  net({{3, 2, Activation::Linear, 0.0}}, rng);
  Vec        x(3), u(2);
  x << 0.5, -1.0, 2.0;
  u << 3.0, -0.25;
  auto const g = net.backward(net.forward_eval(x).cache, u);
  EXPECT_EQ(g.weights[0], u * x.transpose());
  EXPECT_EQ(g.biases[0], u);
}

TEST(Mlp, GradientsMatchFiniteDifferences)
{
  SeededRng rng(17);
  for (int i = 0; i < 20; ++i)
  {
    Mlp const net = oracle::random_small_net(rng, i);
    ASSERT_LE(net.param_count(), 60u);
    EXPECT_LT(oracle::gradient_check_random(net, rng), 1e-4) << "network " << i;
  }
}

TEST(Mlp, GradientsWithDropoutMask)
{
  SeededRng rng(5);
  Mlp       net({{2, 6, Activation::Tanh, 0.3}, {6, 1, Activation::Linear, 0.0}}, rng);
  net.set_mode(NetMode::Train);
  Vec x(2);
  x << 0.3, -0.8;
  SeededRng  mask_rng(9);
  auto const pass  = net.forward(x, &mask_rng);
  auto const grads = net.backward(pass.cache, Vec::Ones(1));
  // With the mask frozen the network is the eval network with masked hidden units.
  Vec const  scale = pass.cache.dropout_scale[0];
  Mlp        masked({{2, 6, Activation::Tanh, 0.0}, {6, 1, Activation::Linear, 0.0}});
  masked.set_flat_params(net.flat_params());
  Eigen::MatrixXd w1 = net.weight(1);
  for (Eigen::Index j = 0; j < 6; ++j)
  {
    w1.col(j) *= scale[j];
  }
  masked.set_weight(1, w1);
  EXPECT_NEAR(masked.predict(x)[0], pass.output[0], 1e-14);
  auto const mg = masked.backward(masked.forward_eval(x).cache, Vec::Ones(1));
  EXPECT_TRUE(mg.weights[0].isApprox(grads.weights[0], 1e-12));
  EXPECT_TRUE(mg.input.isApprox(grads.input, 1e-12));
}

TEST(Mlp, StaleCacheRejected)
{
  SeededRng  rng(1);
  Mlp        net({{2, 2, Activation::Tanh, 0.0}}, rng);
  auto const pass = net.forward_eval(Vec::Zero(2));
  net.set_flat_params(net.flat_params());
  EXPECT_THROW((void)net.backward(pass.cache, Vec::Ones(2)), ProtocolError);
  Mlp const other = net;
  auto const p2   = net.forward_eval(Vec::Zero(2));
  EXPECT_THROW((void)other.backward(p2.cache, Vec::Ones(2)), ProtocolError);
}

TEST(Mse, Examples)
{
  Vec const a = Vec::Constant(2, 1.5);
  auto const same = mse_loss(a, a);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.grad, Vec::Zero(2));
  auto const one = mse_loss(Vec::Ones(1), Vec::Zero(1));
  EXPECT_EQ(one.loss, 1.0);
  EXPECT_EQ(one.grad[0], 2.0);
  Vec p(2), t(2);
  p << 1, 3;
  t << 0, 1;
  EXPECT_EQ(mse_loss(p, t).loss, 2.5);
  EXPECT_THROW(mse_loss(p, Vec::Zero(3)), InputError);
}

TEST(Adam, ZeroGradientLeavesParameters)
{
  Vec       p = Vec::Constant(3, 0.4);
  AdamState s;
  adam_step(p, Vec::Zero(3), s);
  EXPECT_EQ(p, Vec::Constant(3, 0.4));
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, FirstStepIsSignScaled)
{
  Vec p = Vec::Zero(2);
  Vec g(2);
  g << 0.5, -2.0;
  AdamState s;
  s.lr = 0.01;
  adam_step(p, g, s);
  // After bias correction m = g and v = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(p[0], -0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
}

TEST(Adam, Deterministic)
{
  SeededRng r1(4), r2(4);
  Mlp       a({{2, 3, Activation::Relu, 0.0}, {3, 1, Activation::Linear, 0.0}}, r1);
  Mlp       b({{2, 3, Activation::Relu, 0.0}, {3, 1, Activation::Linear, 0.0}}, r2);
  AdamState sa, sb;
  for (int i = 0; i < 50; ++i)
  {
    Vec x = Vec::Constant(2, 0.1 * i);
    adam_step(a, a.backward(a.forward_eval(x).cache, Vec::Ones(1)), sa);
    adam_step(b, b.backward(b.forward_eval(x).cache, Vec::Ones(1)), sb);
  }
  EXPECT_EQ(a.flat_params(), b.flat_params());
}

TEST(Adam, FitsLinearTarget)
{
  SeededRng rng(6);
  Mlp       net({{1, 8, Activation::Tanh, 0.0}, {8, 1, Activation::Linear, 0.0}}, rng);
  AdamState s;
  s.lr = 0.01;
  double last = 0.0;
  for (int it = 0; it < 2000; ++it)
  {
    Gradients g   = net.zero_gradients();
    double    sum = 0.0;
    for (int k = 0; k < 8; ++k)
    {
      double const x    = -1.0 + 2.0 * k / 7.0;
      auto const   pass = net.forward_eval(Vec::Constant(1, x));
      auto const   mse  = mse_loss(pass.output, Vec::Constant(1, 0.5 * x));
      sum += mse.loss;
      g += net.backward(pass.cache, mse.grad);
    }
    g *= 1.0 / 8.0;
    adam_step(net, g, s);
    last = sum / 8.0;
  }
  EXPECT_LT(last, 1e-4);
}

TEST(MlpFile, RoundTrip)
{
  SeededRng         rng(8);
  Mlp const         net = make_actor(4, 2, ArchSpec::small(), rng);
  std::stringstream buf;
  save_mlp(net, buf);
  Mlp const back = load_mlp(buf);
  EXPECT_TRUE(back.same_shape(net));
  EXPECT_EQ(back.flat_params(), net.flat_params());
}
