#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlbench/core.hpp"

namespace rlbench {

enum class Activation
{
  Linear,
  Tanh,
  Relu
};

inline const char *to_string(Activation a)
{
  switch (a)
  {
  case Activation::Tanh:
    return "tanh";
  case Activation::Relu:
    return "relu";
  default:
    return "linear";
  }
}

inline Activation activation_from_string(const std::string &s)
{
  if (s == "linear")
  {
    return Activation::Linear;
  }
  if (s == "tanh")
  {
    return Activation::Tanh;
  }
  if (s == "relu")
  {
    return Activation::Relu;
  }
  throw InputError("unknown activation '" + s + "'");
}

/// Dense layer: affine map, then activation, then (train mode only) dropout.
struct LayerSpec
{
  int        in_dim{1};
  int        out_dim{1};
  Activation activation{Activation::Linear};
  double     dropout_p{0.0};

  [[nodiscard]] std::size_t param_count() const
  {
    return static_cast<std::size_t>(in_dim + 1) * static_cast<std::size_t>(out_dim);
  }

  bool operator==(const LayerSpec &) const = default;
};

enum class NetMode
{
  Train,
  Eval
};

/// Parameter gradients of one backward pass plus the gradient w.r.t. the network input.
struct Gradients
{
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Vec>             biases;
  Vec                          input;

  Gradients &operator+=(const Gradients &o)
  {
    for (std::size_t l = 0; l < weights.size(); ++l)
    {
      weights[l] += o.weights[l];
      biases[l] += o.biases[l];
    }
    input += o.input;
    return *this;
  }

  Gradients &operator*=(double s)
  {
    for (std::size_t l = 0; l < weights.size(); ++l)
    {
      weights[l] *= s;
      biases[l] *= s;
    }
    input *= s;
    return *this;
  }

  // Same ordering as Mlp::flat_params.
  [[nodiscard]] Vec flat() const
  {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
    {
      n += weights[l].size() + biases[l].size();
    }
    Vec out(n);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
    {
      out.segment(k, weights[l].size()) = weights[l].reshaped();
      k += weights[l].size();
      out.segment(k, biases[l].size()) = biases[l];
      k += biases[l].size();
    }
    return out;
  }
};

/// Intermediate values of one forward pass, consumed by Mlp::backward.
struct ForwardCache
{
  std::vector<Vec> inputs;       // input to each layer
  std::vector<Vec> pre;          // pre-activation of each layer
  std::vector<Vec> activated;    // post-activation, pre-dropout
  std::vector<Vec> dropout_scale;  // per-unit mask * 1/(1-p); empty when dropout inactive
  std::uint64_t    net_id{0};
  std::uint64_t    version{0};
};

struct ForwardPass
{
  Vec          output;
  ForwardCache cache;
};

/// Multi-layer perceptron with per-example forward and reverse-mode backward passes.
class Mlp
{
public:
  Mlp() = default;

  /// Zero-initialised parameters.
  explicit Mlp(std::vector<LayerSpec> layers)
    : layers_(std::move(layers))
  {
    validate_layers();
    for (const auto &l : layers_)
    {
      weights_.push_back(Eigen::MatrixXd::Zero(l.out_dim, l.in_dim));
      biases_.push_back(Vec::Zero(l.out_dim));
    }
  }

  /// Weights and biases uniform in +/- 1/sqrt(in_dim) per layer.
  Mlp(std::vector<LayerSpec> layers, SeededRng &rng)
    : Mlp(std::move(layers))
  {
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      double const bound = 1.0 / std::sqrt(static_cast<double>(layers_[l].in_dim));
      for (Eigen::Index j = 0; j < weights_[l].cols(); ++j)
      {
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
        {
          weights_[l](i, j) = rng.uniform(-bound, bound);
        }
      }
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i)
      {
        biases_[l][i] = rng.uniform(-bound, bound);
      }
    }
  }

  Mlp(const Mlp &o)
    : layers_(o.layers_)
    , weights_(o.weights_)
    , biases_(o.biases_)
    , mode_(o.mode_)
  {
  }

  Mlp &operator=(const Mlp &o)
  {
    if (this != &o)
    {
      layers_  = o.layers_;
      weights_ = o.weights_;
      biases_  = o.biases_;
      mode_    = o.mode_;
      ++version_;
    }
    return *this;
  }

  Mlp(Mlp &&) noexcept            = default;
  Mlp &operator=(Mlp &&) noexcept = default;

  [[nodiscard]] const std::vector<LayerSpec> &layers() const { return layers_; }
  [[nodiscard]] int input_dim() const { return layers_.front().in_dim; }
  [[nodiscard]] int output_dim() const { return layers_.back().out_dim; }

  [[nodiscard]] NetMode mode() const { return mode_; }
  void                  set_mode(NetMode m) { mode_ = m; }

  [[nodiscard]] const Eigen::MatrixXd &weight(std::size_t l) const { return weights_.at(l); }
  [[nodiscard]] const Vec             &bias(std::size_t l) const { return biases_.at(l); }

  void set_weight(std::size_t l, const Eigen::MatrixXd &w)
  {
    if (w.rows() != weights_.at(l).rows() || w.cols() != weights_.at(l).cols())
    {
      throw InputError("Mlp::set_weight: shape mismatch");
    }
    weights_[l] = w;
    ++version_;
  }

  void set_bias(std::size_t l, const Vec &b)
  {
    if (b.size() != biases_.at(l).size())
    {
      throw InputError("Mlp::set_bias: shape mismatch");
    }
    biases_[l] = b;
    ++version_;
  }

  [[nodiscard]] std::vector<std::size_t> layer_param_counts() const
  {
    std::vector<std::size_t> out;
    for (const auto &l : layers_)
    {
      out.push_back(l.param_count());
    }
    return out;
  }

  [[nodiscard]] std::size_t param_count() const
  {
    std::size_t n = 0;
    for (const auto &l : layers_)
    {
      n += l.param_count();
    }
    return n;
  }

  /// Per layer: weights (column-major), then biases.
  [[nodiscard]] Vec flat_params() const
  {
    Vec out(static_cast<Eigen::Index>(param_count()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      out.segment(k, weights_[l].size()) = weights_[l].reshaped();
      k += weights_[l].size();
      out.segment(k, biases_[l].size()) = biases_[l];
      k += biases_[l].size();
    }
    return out;
  }

  void set_flat_params(const Vec &flat)
  {
    if (flat.size() != static_cast<Eigen::Index>(param_count()))
    {
      throw InputError(dim_mismatch("Mlp::set_flat_params", static_cast<Eigen::Index>(param_count()),
                                    flat.size()));
    }
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      weights_[l].reshaped() = flat.segment(k, weights_[l].size());
      k += weights_[l].size();
      biases_[l] = flat.segment(k, biases_[l].size());
      k += biases_[l].size();
    }
    ++version_;
  }

  /// In train mode a layer with dropout_p > 0 needs `rng` to draw its mask.
  [[nodiscard]] ForwardPass forward(const Vec &input, SeededRng *rng = nullptr) const
  {
    return forward_impl(input, rng, mode_ == NetMode::Train);
  }

  /// Forward pass with a backward cache but no dropout, whatever the mode.
  [[nodiscard]] ForwardPass forward_eval(const Vec &input) const
  {
    return forward_impl(input, nullptr, false);
  }

  /// Forward with dropout disabled, regardless of mode.
  [[nodiscard]] Vec predict(const Vec &input) const
  {
    if (input.size() != input_dim())
    {
      throw InputError(dim_mismatch("Mlp::predict", input_dim(), input.size()));
    }
    Vec x = input;
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      x = activate(layers_[l].activation, weights_[l] * x + biases_[l]);
    }
    return x;
  }

private:
  [[nodiscard]] ForwardPass forward_impl(const Vec &input, SeededRng *rng, bool dropout) const
  {
    if (input.size() != input_dim())
    {
      throw InputError(dim_mismatch("Mlp::forward", input_dim(), input.size()));
    }
    ForwardPass pass;
    auto       &c = pass.cache;
    c.net_id      = id_;
    c.version     = version_;
    Vec x         = input;
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      c.inputs.push_back(x);
      Vec z = weights_[l] * x + biases_[l];
      Vec h = activate(layers_[l].activation, z);
      c.pre.push_back(std::move(z));
      c.activated.push_back(h);
      double const p = layers_[l].dropout_p;
      if (dropout && p > 0.0)
      {
        if (rng == nullptr)
        {
          throw InputError("Mlp::forward: train-mode dropout requires an rng");
        }
        Vec scale(h.size());
        for (Eigen::Index i = 0; i < h.size(); ++i)
        {
          scale[i] = rng->uniform() < p ? 0.0 : 1.0 / (1.0 - p);
        }
        h = h.cwiseProduct(scale);
        c.dropout_scale.push_back(std::move(scale));
      }
      else
      {
        c.dropout_scale.emplace_back();
      }
      x = std::move(h);
    }
    pass.output = std::move(x);
    return pass;
  }

public:

  /// Gradients of dot(upstream, output) w.r.t. parameters and input.
  [[nodiscard]] Gradients backward(const ForwardCache &cache, const Vec &upstream) const
  {
    if (cache.net_id != id_ || cache.version != version_ || cache.inputs.size() != layers_.size())
    {
      throw ProtocolError("Mlp::backward: cache does not come from the current parameters");
    }
    if (upstream.size() != output_dim())
    {
      throw InputError(dim_mismatch("Mlp::backward upstream", output_dim(), upstream.size()));
    }
    Gradients g;
    g.weights.resize(layers_.size());
    g.biases.resize(layers_.size());
    Vec delta = upstream;
    for (std::size_t l = layers_.size(); l-- > 0;)
    {
      if (cache.dropout_scale[l].size() > 0)
      {
        delta = delta.cwiseProduct(cache.dropout_scale[l]);
      }
      delta = delta.cwiseProduct(
          activation_derivative(layers_[l].activation, cache.pre[l], cache.activated[l]));
      g.weights[l] = delta * cache.inputs[l].transpose();
      g.biases[l]  = delta;
      delta        = weights_[l].transpose() * delta;
    }
    g.input = std::move(delta);
    return g;
  }

  /// Gradients of zero with the network's shapes, for accumulation.
  [[nodiscard]] Gradients zero_gradients() const
  {
    Gradients g;
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vec::Zero(biases_[l].size()));
    }
    g.input = Vec::Zero(input_dim());
    return g;
  }

  [[nodiscard]] bool same_shape(const Mlp &o) const { return layers_ == o.layers_; }

private:
  static std::uint64_t next_id()
  {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  static Vec activate(Activation a, const Vec &z)
  {
    switch (a)
    {
    case Activation::Tanh:
      return z.array().tanh();
    case Activation::Relu:
      return z.cwiseMax(0.0);
    default:
      return z;
    }
  }

  static Vec activation_derivative(Activation a, const Vec &z, const Vec &h)
  {
    switch (a)
    {
    case Activation::Tanh:
      return (1.0 - h.array().square()).matrix();
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    default:
      return Vec::Ones(z.size());
    }
  }

  void validate_layers() const
  {
    if (layers_.empty())
    {
      throw InputError("Mlp: at least one layer required");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l)
    {
      const auto &s = layers_[l];
      if (s.in_dim < 1 || s.out_dim < 1)
      {
        throw InputError("Mlp: layer dimensions must be >= 1");
      }
      if (!(s.dropout_p >= 0.0 && s.dropout_p < 1.0))
      {
        throw InputError("Mlp: dropout probability must lie in [0, 1)");
      }
      if (l > 0 && layers_[l - 1].out_dim != s.in_dim)
      {
        throw InputError("Mlp: layer " + std::to_string(l) + " input does not match previous output");
      }
    }
  }

  std::vector<LayerSpec>       layers_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Vec>             biases_;
  NetMode                      mode_{NetMode::Eval};
  std::uint64_t                id_{next_id()};
  std::uint64_t                version_{0};
};

struct MseResult
{
  double loss{0.0};
  Vec    grad;
};

inline MseResult mse_loss(const Vec &pred, const Vec &target)
{
  if (pred.size() != target.size() || pred.size() == 0)
  {
    throw InputError(dim_mismatch("mse_loss", pred.size(), target.size()));
  }
  Vec const    diff = pred - target;
  double const n    = static_cast<double>(pred.size());
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

struct AdamState
{
  Vec          m;
  Vec          v;
  std::int64_t t{0};
  double       lr{1e-3};
  double       beta1{0.9};
  double       beta2{0.999};
  double       eps{1e-8};
};

/// Bias-corrected Adam descent step on a flat parameter vector.
inline void adam_step(Vec &params, const Vec &grad, AdamState &s)
{
  if (grad.size() != params.size())
  {
    throw InputError(dim_mismatch("adam_step", params.size(), grad.size()));
  }
  if (s.m.size() == 0 && s.v.size() == 0)
  {
    s.m = Vec::Zero(params.size());
    s.v = Vec::Zero(params.size());
  }
  if (s.m.size() != params.size() || s.v.size() != params.size())
  {
    throw InputError("adam_step: optimizer state does not match parameter shape");
  }
  ++s.t;
  s.m                   = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v                   = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  double const m_scale  = 1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.t)));
  double const v_scale  = 1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.t)));
  params.array() -= s.lr * (s.m.array() * m_scale) / ((s.v.array() * v_scale).sqrt() + s.eps);
}

inline void adam_step(Mlp &net, const Gradients &grads, AdamState &s)
{
  Vec p = net.flat_params();
  adam_step(p, grads.flat(), s);
  net.set_flat_params(p);
}

/// Hidden-layer sizes and activations shared by actor and critic builders.
struct ArchSpec
{
  std::vector<int> hidden{32, 64, 32, 16};
  Activation       hidden_activation{Activation::Relu};
  Activation       actor_head{Activation::Tanh};
  double           dropout{0.2};

  // Two hidden layers (32, 16) with an unsquashed actor head.
  static ArchSpec small()
  {
    return {{32, 16}, Activation::Relu, Activation::Linear, 0.0};
  }

  // Four hidden layers (32, 64, 32, 16), tanh actor head, dropout 0.2.
  static ArchSpec deep() { return {}; }
};

inline std::vector<LayerSpec> stack_layers(int in_dim, const ArchSpec &arch, int out_dim,
                                           Activation head)
{
  std::vector<LayerSpec> layers;
  int                    prev = in_dim;
  for (int h : arch.hidden)
  {
    layers.push_back({prev, h, arch.hidden_activation, arch.dropout});
    prev = h;
  }
  layers.push_back({prev, out_dim, head, 0.0});
  return layers;
}

inline Mlp make_actor(int obs_dim, int act_dim, const ArchSpec &arch, SeededRng &rng)
{
  return Mlp(stack_layers(obs_dim, arch, act_dim, arch.actor_head), rng);
}

/// Critic input is the concatenation [observation, action].
inline Mlp make_critic(int obs_dim, int act_dim, const ArchSpec &arch, SeededRng &rng)
{
  return Mlp(stack_layers(obs_dim + act_dim, arch, 1, Activation::Linear), rng);
}

// Checkpoint layout: "RLMP", u32 header length, JSON header, then flat parameters
// as host-order doubles.
inline void save_mlp(const Mlp &net, std::ostream &out, const nlohmann::json &extra = {})
{
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &l : net.layers())
  {
    layers.push_back({{"in", l.in_dim},
                      {"out", l.out_dim},
                      {"activation", to_string(l.activation)},
                      {"dropout", l.dropout_p}});
  }
  nlohmann::json header = {{"layers", layers}, {"param_count", net.param_count()}};
  if (extra.is_object())
  {
    header.update(extra);
  }
  std::string const h   = header.dump();
  auto const        len = static_cast<std::uint32_t>(h.size());
  Vec const         p   = net.flat_params();
  out.write("RLMP", 4);
  out.write(reinterpret_cast<const char *>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char *>(p.data()),
            static_cast<std::streamsize>(p.size() * static_cast<Eigen::Index>(sizeof(double))));
}

inline Mlp load_mlp(std::istream &in, nlohmann::json *header_out = nullptr)
{
  char          magic[4];
  std::uint32_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, "RLMP", 4) != 0 ||
      !in.read(reinterpret_cast<char *>(&len), sizeof(len)))
  {
    throw Error("load_mlp: not a network checkpoint");
  }
  std::string h(len, '\0');
  in.read(h.data(), len);
  auto const             header = nlohmann::json::parse(h);
  std::vector<LayerSpec> layers;
  for (const auto &l : header.at("layers"))
  {
    layers.push_back({l.at("in").get<int>(), l.at("out").get<int>(),
                      activation_from_string(l.at("activation").get<std::string>()),
                      l.at("dropout").get<double>()});
  }
  Mlp net(layers);
  Vec p(static_cast<Eigen::Index>(net.param_count()));
  if (!in.read(reinterpret_cast<char *>(p.data()),
               static_cast<std::streamsize>(p.size() * static_cast<Eigen::Index>(sizeof(double)))))
  {
    throw Error("load_mlp: truncated checkpoint");
  }
  net.set_flat_params(p);
  if (header_out != nullptr)
  {
    *header_out = header;
  }
  return net;
}

}  // namespace rlbench
