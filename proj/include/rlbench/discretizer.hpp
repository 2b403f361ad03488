#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlbench/core.hpp"

namespace rlbench {

inline constexpr double kDefaultClipLow  = -25.0;
inline constexpr double kDefaultClipHigh = 25.0;

/// Per-dimension bucketing ranges plus the bucket count K shared by every dimension.
struct RangeSpec
{
  Vec low;
  Vec high;
  int k{2};

  [[nodiscard]] Eigen::Index dim() const { return low.size(); }

  // Keeps only the leading `n` dimensions.
  [[nodiscard]] RangeSpec prefix(Eigen::Index n) const
  {
    n = std::min(n, dim());
    return {low.head(n), high.head(n), k};
  }

  bool operator==(const RangeSpec &o) const
  {
    return k == o.k && low.size() == o.low.size() && low == o.low && high == o.high;
  }
};

inline void to_json(nlohmann::json &j, const RangeSpec &spec)
{
  nlohmann::json dims = nlohmann::json::array();
  for (Eigen::Index i = 0; i < spec.dim(); ++i)
  {
    dims.push_back({{"lo", spec.low[i]}, {"hi", spec.high[i]}});
  }
  j = {{"dims", dims}, {"k", spec.k}};
}

inline void from_json(const nlohmann::json &j, RangeSpec &spec)
{
  auto const &dims = j.at("dims");
  spec.low.resize(static_cast<Eigen::Index>(dims.size()));
  spec.high.resize(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i)
  {
    spec.low[static_cast<Eigen::Index>(i)]  = dims[i].at("lo").get<double>();
    spec.high[static_cast<Eigen::Index>(i)] = dims[i].at("hi").get<double>();
  }
  spec.k = j.at("k").get<int>();
}

/// Fits bucketing ranges from sampled observations. Sample extremes are clamped into
/// [clip_low, clip_high]; a dimension with zero width is widened by 0.5 each side.
inline RangeSpec fit_ranges(std::span<const Vec> samples, int k = 2,
                            double clip_low = kDefaultClipLow, double clip_high = kDefaultClipHigh)
{
  if (samples.size() < 2)
  {
    throw InputError("fit_ranges: need at least two samples");
  }
  if (k < 1)
  {
    throw InputError("fit_ranges: bucket count must be >= 1");
  }
  if (!(clip_low < clip_high))
  {
    throw InputError("fit_ranges: clip interval is empty");
  }
  Eigen::Index const dim = samples.front().size();
  Vec lo = Vec::Constant(dim, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(dim, -std::numeric_limits<double>::infinity());
  for (const auto &s : samples)
  {
    if (s.size() != dim)
    {
      throw InputError(dim_mismatch("fit_ranges sample", dim, s.size()));
    }
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  for (Eigen::Index i = 0; i < dim; ++i)
  {
    if (std::isnan(lo[i]) || std::isnan(hi[i]))
    {
      throw InputError("fit_ranges: NaN in samples");
    }
    lo[i] = std::clamp(lo[i], clip_low, clip_high);
    hi[i] = std::clamp(hi[i], clip_low, clip_high);
    if (lo[i] == hi[i])
    {
      lo[i] = std::max(lo[i] - 0.5, clip_low);
      hi[i] = std::min(hi[i] + 0.5, clip_high);
    }
  }
  return {lo, hi, k};
}

struct EncodedObs
{
  std::vector<int> indices;
  std::uint64_t    flat{0};
};

/// Bucket j covers [edge_j, edge_{j+1}); the last bucket also holds `high`.
/// The flat index is base-K with the last dimension varying fastest.
inline EncodedObs encode_obs(const RangeSpec &spec, const Vec &obs)
{
  if (obs.size() != spec.dim())
  {
    throw InputError(dim_mismatch("encode_obs", spec.dim(), obs.size()));
  }
  EncodedObs out;
  out.indices.resize(static_cast<std::size_t>(spec.dim()));
  for (Eigen::Index i = 0; i < spec.dim(); ++i)
  {
    if (std::isnan(obs[i]))
    {
      throw InputError("encode_obs: NaN observation");
    }
    double const v    = std::clamp(obs[i], spec.low[i], spec.high[i]);
    double const frac = (v - spec.low[i]) / (spec.high[i] - spec.low[i]);
    int          idx  = static_cast<int>(std::floor(spec.k * frac));
    idx               = std::clamp(idx, 0, spec.k - 1);
    out.indices[static_cast<std::size_t>(i)] = idx;
    out.flat = out.flat * static_cast<std::uint64_t>(spec.k) + static_cast<std::uint64_t>(idx);
  }
  return out;
}

/// Maps per-dimension bucket indices to bucket-center actions.
inline Vec decode_action(const BoxSpace &space, int k, std::span<const int> indices)
{
  if (!space.is_finite())
  {
    throw UnsupportedSpaceError("decode_action: action space must be bounded");
  }
  if (k < 1)
  {
    throw InputError("decode_action: bucket count must be >= 1");
  }
  if (static_cast<Eigen::Index>(indices.size()) != space.dim())
  {
    throw InputError(dim_mismatch("decode_action", space.dim(),
                                  static_cast<Eigen::Index>(indices.size())));
  }
  Vec action(space.dim());
  for (Eigen::Index i = 0; i < space.dim(); ++i)
  {
    int const j = indices[static_cast<std::size_t>(i)];
    if (j < 0 || j >= k)
    {
      throw InputError("decode_action: index " + std::to_string(j) + " outside [0, " +
                       std::to_string(k - 1) + "]");
    }
    double const width = (space.high()[i] - space.low()[i]) / k;
    action[i]          = space.low()[i] + (j + 0.5) * width;
  }
  return action;
}

/// K^dim, refusing tables larger than `cap` entries.
inline std::uint64_t joint_action_count(int action_dim, int k,
                                        std::uint64_t cap = std::uint64_t{1} << 24)
{
  if (action_dim < 1 || k < 1)
  {
    throw InputError("joint_action_count: dimension and bucket count must be >= 1");
  }
  std::uint64_t count = 1;
  for (int i = 0; i < action_dim; ++i)
  {
    if (count > cap / static_cast<std::uint64_t>(k))
    {
      throw CapacityError("joint_action_count: " + std::to_string(k) + "^" +
                          std::to_string(action_dim) + " exceeds the table cap of " +
                          std::to_string(cap) + "; reduce the bucket count or action dimension");
    }
    count *= static_cast<std::uint64_t>(k);
  }
  if (count > cap)
  {
    throw CapacityError("joint_action_count: exceeds the table cap of " + std::to_string(cap));
  }
  return count;
}

/// Inverse of the flat encoding: last dimension varies fastest.
inline std::vector<int> unflatten_index(std::uint64_t flat, int dim, int k)
{
  std::vector<int> idx(static_cast<std::size_t>(dim));
  for (int i = dim - 1; i >= 0; --i)
  {
    idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % static_cast<std::uint64_t>(k));
    flat /= static_cast<std::uint64_t>(k);
  }
  return idx;
}

/// Collects observations under a uniform-random policy, as input to fit_ranges.
template <typename Env>
std::vector<Vec> collect_random_observations(Env &env, std::size_t count, SeededRng &rng)
{
  std::vector<Vec> out;
  out.reserve(count);
  out.push_back(env.reset(rng.next_u64()));
  while (out.size() < count)
  {
    auto const r = env.step(sample_uniform(env.spec().action_space, rng));
    out.push_back(r.observation);
    if (r.done && out.size() < count)
    {
      out.push_back(env.reset(rng.next_u64()));
    }
  }
  return out;
}

}  // namespace rlbench
