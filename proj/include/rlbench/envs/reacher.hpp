#pragma once

#include <cmath>
#include <numbers>

#include "rlbench/env.hpp"
#include "rlbench/rewards.hpp"

namespace rlbench {

/// Planar two-link arm driven by joint torques; links are uniform rods, the elbow
/// angle is relative to the first link, and there is no gravity in the plane.
struct ReacherParams
{
  double link1_length{0.1};
  double link2_length{0.1};
  double link1_mass{0.05};
  double link2_mass{0.05};
  double damping{0.01};
  double torque_gear{1.0};
  double dt{0.01};
  int    max_steps{50};
  // RK4 substeps per control step. The smallest eigenvalue of the mass matrix is tiny
  // for the default links, which makes joint damping stiff.
  int    substeps{4};
  double target_radius_fraction{0.9};
};

struct ReacherState
{
  double          theta1{0.0};
  double          theta2{0.0};
  double          omega1{0.0};
  double          omega2{0.0};
  Eigen::Vector2d target{Eigen::Vector2d::Zero()};
  int             step_count{0};
};

namespace reacher {

inline Eigen::Matrix2d mass_matrix(const ReacherParams &p, double theta2)
{
  double const lc1 = 0.5 * p.link1_length;
  double const lc2 = 0.5 * p.link2_length;
  double const i1  = p.link1_mass * p.link1_length * p.link1_length / 12.0;
  double const i2  = p.link2_mass * p.link2_length * p.link2_length / 12.0;
  double const c2  = std::cos(theta2);
  double const m11 = p.link1_mass * lc1 * lc1 + i1 +
                     p.link2_mass * (p.link1_length * p.link1_length + lc2 * lc2 +
                                     2.0 * p.link1_length * lc2 * c2) +
                     i2;
  double const m12 = p.link2_mass * (lc2 * lc2 + p.link1_length * lc2 * c2) + i2;
  double const m22 = p.link2_mass * lc2 * lc2 + i2;
  Eigen::Matrix2d m;
  m << m11, m12, m12, m22;
  return m;
}

inline Eigen::Vector2d fingertip(const ReacherParams &p, double theta1, double theta2)
{
  return {p.link1_length * std::cos(theta1) + p.link2_length * std::cos(theta1 + theta2),
          p.link1_length * std::sin(theta1) + p.link2_length * std::sin(theta1 + theta2)};
}

inline double kinetic_energy(const ReacherParams &p, const ReacherState &s)
{
  Eigen::Vector2d const w(s.omega1, s.omega2);
  return 0.5 * w.dot(mass_matrix(p, s.theta2) * w);
}

/// Layout: cos(theta), sin(theta), target xy, joint velocities, fingertip - target
/// (z is always zero in the planar model).
inline Vec observe(const ReacherParams &p, const ReacherState &s)
{
  Eigen::Vector2d const delta = fingertip(p, s.theta1, s.theta2) - s.target;
  Vec obs(11);
  obs << std::cos(s.theta1), std::cos(s.theta2), std::sin(s.theta1), std::sin(s.theta2),
      s.target.x(), s.target.y(), s.omega1, s.omega2, delta.x(), delta.y(), 0.0;
  return obs;
}

/// Advances the arm by one control interval under constant joint torques (already geared).
inline ReacherState dynamics_step(const ReacherParams &p, const ReacherState &s,
                                  const Eigen::Vector2d &torque, double dt)
{
  auto accel = [&](const Vec &q, const Vec &qd) -> Vec {
    Eigen::Matrix2d const m = mass_matrix(p, q[1]);
    double const h = p.link2_mass * p.link1_length * 0.5 * p.link2_length * std::sin(q[1]);
    Eigen::Vector2d const coriolis(-h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]), h * qd[0] * qd[0]);
    Eigen::Vector2d const rhs = torque - p.damping * Eigen::Vector2d(qd[0], qd[1]) - coriolis;
    return m.ldlt().solve(rhs);
  };

  Vec q(2), qd(2);
  q << s.theta1, s.theta2;
  qd << s.omega1, s.omega2;
  int const    n = std::max(1, p.substeps);
  double const h = dt / n;
  for (int i = 0; i < n; ++i)
  {
    detail::rk4_step(q, qd, h, accel);
  }
  if (!q.allFinite() || !qd.allFinite())
  {
    throw NumericalDivergenceError("reacher: non-finite state after dynamics step");
  }
  ReacherState next = s;
  next.theta1       = detail::wrap_angle(q[0]);
  next.theta2       = detail::wrap_angle(q[1]);
  next.omega1       = qd[0];
  next.omega2       = qd[1];
  return next;
}

}  // namespace reacher

class ReacherEnv : public Environment
{
public:
  explicit ReacherEnv(ReacherParams params = {})
    : Environment(make_spec(params))
    , params_(params)
  {
  }

  [[nodiscard]] std::string         name() const override { return "reacher"; }
  [[nodiscard]] const ReacherParams &params() const { return params_; }
  [[nodiscard]] const ReacherState  &state() const { return state_; }

  // Test hook: overrides the current state in place of a reset.
  void set_state(const ReacherState &s)
  {
    reset(0);
    state_ = s;
  }

  [[nodiscard]] Vec observation() const { return reacher::observe(params_, state_); }

protected:
  Vec do_reset(std::uint64_t seed) override
  {
    SeededRng rng(seed);
    state_        = ReacherState{};
    state_.theta1 = detail::wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
    state_.theta2 = detail::wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
    double const radius = params_.target_radius_fraction *
                          (params_.link1_length + params_.link2_length) *
                          std::sqrt(rng.uniform());
    double const angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    state_.target      = {radius * std::cos(angle), radius * std::sin(angle)};
    return observation();
  }

  StepResult do_step(const Vec &action) override
  {
    Eigen::Vector2d const torque = params_.torque_gear * Eigen::Vector2d(action[0], action[1]);
    state_            = reacher::dynamics_step(params_, state_, torque, params_.dt);
    state_.step_count = step_count() + 1;

    Eigen::Vector2d const tip = reacher::fingertip(params_, state_.theta1, state_.theta2);
    auto const r = rewards::reacher({tip.x(), tip.y(), 0.0},
                                    {state_.target.x(), state_.target.y(), 0.0}, action);
    StepResult out;
    out.observation = observation();
    out.reward      = r.value;
    out.info        = r.components;
    return out;
  }

private:
  static EnvSpec make_spec(const ReacherParams &p)
  {
    return EnvSpec{BoxSpace::unbounded(11), BoxSpace::uniform(2, -1.0, 1.0), p.max_steps, p.dt};
  }

  ReacherParams params_;
  ReacherState  state_;
};

}  // namespace rlbench
