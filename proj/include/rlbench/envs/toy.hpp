#pragma once

#include "rlbench/env.hpp"

namespace rlbench {

/// One-dimensional point that must be driven to the origin: s' = s + gain * a,
/// r = -s'^2 - ctrl_weight * a^2. Episodes start at +/- start_magnitude.
struct MoveToOriginParams
{
  double gain{0.1};
  double ctrl_weight{0.01};
  double start_magnitude{5.0};
  int    max_steps{50};
};

class MoveToOriginEnv : public Environment
{
public:
  explicit MoveToOriginEnv(MoveToOriginParams params = {})
    : Environment(EnvSpec{BoxSpace::unbounded(1), BoxSpace::uniform(1, -1.0, 1.0),
                          params.max_steps, 1.0})
    , params_(params)
  {
  }

  [[nodiscard]] std::string name() const override { return "toy"; }
  [[nodiscard]] double      position() const { return position_; }

protected:
  Vec do_reset(std::uint64_t seed) override
  {
    SeededRng rng(seed);
    position_ = rng.uniform() < 0.5 ? -params_.start_magnitude : params_.start_magnitude;
    return Vec::Constant(1, position_);
  }

  StepResult do_step(const Vec &action) override
  {
    double const a = action[0];
    position_ += params_.gain * a;
    double const state_cost = position_ * position_;
    double const ctrl_cost  = params_.ctrl_weight * a * a;
    StepResult out;
    out.observation = Vec::Constant(1, position_);
    out.reward      = -state_cost - ctrl_cost;
    out.info        = {{"state_cost", state_cost}, {"ctrl_cost", ctrl_cost}};
    return out;
  }

private:
  MoveToOriginParams params_;
  double             position_{0.0};
};

/// Deterministic corridor of `length` cells. The observation is the cell index; an action
/// below zero steps left (clamped at cell 0), otherwise right. Entering the last cell
/// pays 1 and ends the episode.
struct ChainWalkParams
{
  int length{5};
  int max_steps{100};
};

class ChainWalkEnv : public Environment
{
public:
  explicit ChainWalkEnv(ChainWalkParams params = {})
    : Environment(EnvSpec{BoxSpace::uniform(1, 0.0, params.length - 1),
                          BoxSpace::uniform(1, -1.0, 1.0), params.max_steps, 1.0})
    , params_(params)
  {
    if (params_.length < 2)
    {
      throw InputError("ChainWalkEnv: length must be >= 2");
    }
  }

  [[nodiscard]] std::string name() const override { return "chain"; }
  [[nodiscard]] int         cell() const { return cell_; }

protected:
  Vec do_reset(std::uint64_t /*seed*/) override
  {
    cell_ = 0;
    return Vec::Constant(1, 0.0);
  }

  StepResult do_step(const Vec &action) override
  {
    cell_ = action[0] < 0.0 ? std::max(0, cell_ - 1) : cell_ + 1;
    StepResult out;
    out.terminated  = cell_ == params_.length - 1;
    out.reward      = out.terminated ? 1.0 : 0.0;
    out.observation = Vec::Constant(1, static_cast<double>(cell_));
    return out;
  }

private:
  ChainWalkParams params_;
  int             cell_{0};
};

}  // namespace rlbench
