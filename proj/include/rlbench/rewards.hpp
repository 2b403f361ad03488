#pragma once

#include <cmath>
#include <string>

#include "rlbench/core.hpp"

// Reward composers for the benchmark locomotion and manipulation tasks. They are pure
// functions of already-extracted physical quantities so they can be checked without a
// simulator. Each returns the scalar reward together with every named term it used.

namespace rlbench::rewards {

namespace keys {
inline constexpr const char *forward_reward = "forward_reward";
inline constexpr const char *ctrl_cost      = "ctrl_cost";
inline constexpr const char *contact_cost   = "contact_cost";
inline constexpr const char *healthy_reward = "healthy_reward";
inline constexpr const char *dist_penalty   = "dist_penalty";
inline constexpr const char *vel_penalty    = "vel_penalty";
inline constexpr const char *alive_bonus    = "alive_bonus";
inline constexpr const char *reward_dist    = "reward_dist";
inline constexpr const char *reward_ctrl    = "reward_ctrl";
}  // namespace keys

struct RewardWeights
{
  double ctrl_cost_weight{0.1};
  double forward_reward_weight{1.0};
  double contact_cost_weight{5e-4};
  double healthy_reward{1.0};
  double alive_bonus{10.0};

  void validate() const
  {
    for (double v : {ctrl_cost_weight, forward_reward_weight, contact_cost_weight, healthy_reward,
                     alive_bonus})
    {
      if (!std::isfinite(v) || v < 0.0)
      {
        throw InputError("RewardWeights: weights must be finite and non-negative");
      }
    }
  }

  // Swimmer-style tasks use a much lighter control penalty.
  static RewardWeights swimmer()
  {
    RewardWeights w;
    w.ctrl_cost_weight = 1e-4;
    return w;
  }
};

struct Reward
{
  double  value{0.0};
  InfoMap components;
};

inline double ctrl_cost(const Vec &action, double weight)
{
  if (weight < 0.0)
  {
    throw InputError("ctrl_cost: weight must be non-negative");
  }
  return weight * action.squaredNorm();
}

/// HalfCheetah / Swimmer form: weighted forward velocity minus control cost.
inline Reward forward_minus_ctrl(double x_velocity, const Vec &action, const RewardWeights &w)
{
  double const forward = w.forward_reward_weight * x_velocity;
  double const ctrl    = ctrl_cost(action, w.ctrl_cost_weight);
  return {forward - ctrl, {{keys::forward_reward, forward}, {keys::ctrl_cost, ctrl}}};
}

/// Ant form (Humanoid shares it). `contact_forces` must already be clipped to [-1, 1].
inline Reward ant(double x_velocity, const Vec &action, const Vec &contact_forces,
                  const RewardWeights &w)
{
  double const forward = x_velocity;
  double const healthy = w.healthy_reward;
  double const ctrl    = ctrl_cost(action, w.ctrl_cost_weight);
  double const contact = w.contact_cost_weight * contact_forces.squaredNorm();
  return {(forward + healthy) - (ctrl + contact),
          {{keys::forward_reward, forward},
           {keys::healthy_reward, healthy},
           {keys::ctrl_cost, ctrl},
           {keys::contact_cost, contact}}};
}

inline Reward humanoid(double x_velocity, const Vec &action, const Vec &contact_forces,
                       const RewardWeights &w)
{
  return ant(x_velocity, action, contact_forces, w);
}

/// Hopper form: forward velocity is the finite difference of the root x position.
inline Reward hopper(double x_before, double x_after, double dt, const Vec &action,
                     const RewardWeights &w)
{
  if (!(dt > 0.0))
  {
    throw InputError("hopper reward: dt must be positive");
  }
  double const forward = w.forward_reward_weight * ((x_after - x_before) / dt);
  double const healthy = w.healthy_reward;
  double const ctrl    = ctrl_cost(action, w.ctrl_cost_weight);
  return {(forward + healthy) - ctrl,
          {{keys::forward_reward, forward},
           {keys::healthy_reward, healthy},
           {keys::ctrl_cost, ctrl}}};
}

/// Double pendulum on a cart. `y` is the tip height, `v1`/`v2` the pole angular velocities.
inline Reward inverted_double_pendulum(double x, double y, double v1, double v2,
                                       const RewardWeights &w = {})
{
  double const dist  = 0.01 * x * x + (y - 2.0) * (y - 2.0);
  double const vel   = 1e-3 * v1 * v1 + 5e-3 * v2 * v2;
  double const alive = w.alive_bonus;
  return {alive - dist - vel,
          {{keys::alive_bonus, alive}, {keys::dist_penalty, dist}, {keys::vel_penalty, vel}}};
}

inline Reward reacher(const Eigen::Vector3d &fingertip, const Eigen::Vector3d &target,
                      const Vec &action)
{
  double const dist = -(fingertip - target).norm();
  double const ctrl = -action.squaredNorm();
  return {dist + ctrl, {{keys::reward_dist, dist}, {keys::reward_ctrl, ctrl}}};
}

}  // namespace rlbench::rewards
