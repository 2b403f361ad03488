#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rlbench/error.hpp"

namespace rlbench {

using Vec = Eigen::VectorXd;

inline std::string dim_mismatch(const char *what, Eigen::Index expected, Eigen::Index got)
{
  return std::string(what) + ": expected dimension " + std::to_string(expected) + ", got " +
         std::to_string(got);
}

/// Rectangular continuous space. Bounds may be infinite (observation spaces usually are).
class BoxSpace
{
public:
  BoxSpace() = default;

  BoxSpace(Vec low, Vec high)
    : low_(std::move(low))
    , high_(std::move(high))
  {
    if (low_.size() != high_.size())
    {
      throw InputError(dim_mismatch("BoxSpace bounds", low_.size(), high_.size()));
    }
    if (low_.size() < 1)
    {
      throw InputError("BoxSpace: dimension must be positive");
    }
    for (Eigen::Index i = 0; i < low_.size(); ++i)
    {
      if (std::isnan(low_[i]) || std::isnan(high_[i]) || low_[i] > high_[i])
      {
        throw InputError("BoxSpace: low > high in dimension " + std::to_string(i));
      }
    }
  }

  static BoxSpace uniform(Eigen::Index dim, double low, double high)
  {
    return BoxSpace(Vec::Constant(dim, low), Vec::Constant(dim, high));
  }

  static BoxSpace unbounded(Eigen::Index dim)
  {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return uniform(dim, -inf, inf);
  }

  [[nodiscard]] Eigen::Index dim() const { return low_.size(); }
  [[nodiscard]] const Vec &low() const { return low_; }
  [[nodiscard]] const Vec &high() const { return high_; }

  [[nodiscard]] bool is_finite() const { return low_.allFinite() && high_.allFinite(); }

  [[nodiscard]] bool contains(const Vec &x) const
  {
    return x.size() == dim() && (x.array() >= low_.array()).all() &&
           (x.array() <= high_.array()).all();
  }

  bool operator==(const BoxSpace &other) const
  {
    return low_.size() == other.low_.size() && low_ == other.low_ && high_ == other.high_;
  }

private:
  Vec low_;
  Vec high_;
};

/// One (s, a, r, s', done) tuple. `done` means the successor is terminal, so
/// bootstrapping from it is masked; time-limit truncation does not set it.
struct Transition
{
  Vec    state;
  Vec    action;
  double reward{0.0};
  Vec    next_state;
  bool   done{false};
};

using InfoMap = std::map<std::string, double>;

struct StepResult
{
  Vec     observation;
  double  reward{0.0};
  bool    done{false};
  // True when the episode ended because the environment's own termination
  // rule fired (as opposed to hitting max_steps).
  bool    terminated{false};
  InfoMap info;
};

/// Deterministic generator: xoshiro256** seeded through splitmix64. Normal draws use
/// the Box-Muller transform of two uniform draws, so a seed fixes every sequence on
/// every platform.
class SeededRng
{
public:
  using result_type = std::uint64_t;

  struct State
  {
    std::array<std::uint64_t, 4> words{};
    bool                         has_spare{false};
    double                       spare{0.0};
  };

  explicit SeededRng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed)
  {
    std::uint64_t x = seed;
    for (auto &w : state_.words)
    {
      w = splitmix64(x);
    }
    state_.has_spare = false;
    state_.spare     = 0.0;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64()
  {
    auto &s            = state_.words;
    std::uint64_t const result = rotl(s[1] * 5, 7) * 9;
    std::uint64_t const t      = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n)
  {
    if (n == 0)
    {
      throw InputError("uniform_int: empty range");
    }
    std::uint64_t const limit = max() - max() % n;
    std::uint64_t       x     = next_u64();
    while (x >= limit)
    {
      x = next_u64();
    }
    return x % n;
  }

  double normal()
  {
    if (state_.has_spare)
    {
      state_.has_spare = false;
      return state_.spare;
    }
    double const u1    = 1.0 - uniform();  // (0, 1]
    double const u2    = uniform();
    double const r     = std::sqrt(-2.0 * std::log(u1));
    double const theta = 2.0 * std::numbers::pi * u2;
    state_.spare       = r * std::sin(theta);
    state_.has_spare   = true;
    return r * std::cos(theta);
  }

  [[nodiscard]] const State &state() const { return state_; }
  void                       set_state(const State &s) { state_ = s; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t &x)
  {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z               = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z               = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  State state_;
};

inline Vec clip_to_space(const BoxSpace &space, const Vec &x)
{
  if (x.size() != space.dim())
  {
    throw InputError(dim_mismatch("clip_to_space", space.dim(), x.size()));
  }
  return x.cwiseMax(space.low()).cwiseMin(space.high());
}

inline bool box_contains(const BoxSpace &space, const Vec &x) { return space.contains(x); }

inline Vec sample_uniform(const BoxSpace &space, SeededRng &rng)
{
  if (!space.is_finite())
  {
    throw UnsupportedSpaceError("sample_uniform: space has infinite bounds");
  }
  Vec out(space.dim());
  for (Eigen::Index i = 0; i < space.dim(); ++i)
  {
    out[i] = rng.uniform(space.low()[i], space.high()[i]);
  }
  return out;
}

}  // namespace rlbench
