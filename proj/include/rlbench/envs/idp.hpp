#pragma once

#include <algorithm>
#include <cmath>

#include "rlbench/env.hpp"
#include "rlbench/rewards.hpp"

namespace rlbench {

/// Cart on a frictionless rail carrying two uniform rods in series. Pole angles are
/// absolute, measured from the upward vertical.
struct IdpParams
{
  double cart_mass{1.0};
  double pole1_mass{0.1};
  double pole2_mass{0.1};
  double pole1_length{0.6};
  double pole2_length{0.6};
  double gravity{9.81};
  double force_gear{500.0};
  double cart_friction{0.0};
  double joint_damping{0.0};
  double dt{0.005};
  int    max_steps{1000};
  int    substeps{1};
  double init_noise{0.01};
  double fall_height{1.0};
  rewards::RewardWeights weights{};
};

struct IdpState
{
  double x{0.0};
  double x_dot{0.0};
  double phi1{0.0};
  double phi2{0.0};
  double phi1_dot{0.0};
  double phi2_dot{0.0};
  int    step_count{0};
};

namespace idp {

inline Eigen::Matrix3d mass_matrix(const IdpParams &p, double phi1, double phi2)
{
  double const a1 = 0.5 * p.pole1_length;
  double const a2 = 0.5 * p.pole2_length;
  double const i1 = p.pole1_mass * p.pole1_length * p.pole1_length / 12.0;
  double const i2 = p.pole2_mass * p.pole2_length * p.pole2_length / 12.0;
  double const k1 = p.pole1_mass * a1 + p.pole2_mass * p.pole1_length;
  double const k2 = p.pole2_mass * a2;
  double const k3 = p.pole2_mass * p.pole1_length * a2;

  Eigen::Matrix3d m;
  m(0, 0) = p.cart_mass + p.pole1_mass + p.pole2_mass;
  m(0, 1) = m(1, 0) = k1 * std::cos(phi1);
  m(0, 2) = m(2, 0) = k2 * std::cos(phi2);
  m(1, 1) = p.pole1_mass * a1 * a1 + i1 + p.pole2_mass * p.pole1_length * p.pole1_length;
  m(1, 2) = m(2, 1) = k3 * std::cos(phi1 - phi2);
  m(2, 2) = p.pole2_mass * a2 * a2 + i2;
  return m;
}

inline double tip_height(const IdpParams &p, const IdpState &s)
{
  return p.pole1_length * std::cos(s.phi1) + p.pole2_length * std::cos(s.phi2);
}

inline double tip_x(const IdpParams &p, const IdpState &s)
{
  return s.x + p.pole1_length * std::sin(s.phi1) + p.pole2_length * std::sin(s.phi2);
}

// Kinetic plus gravitational potential energy, with the rail as the zero of height.
inline double energy(const IdpParams &p, const IdpState &s)
{
  Eigen::Vector3d const qd(s.x_dot, s.phi1_dot, s.phi2_dot);
  double const kinetic = 0.5 * qd.dot(mass_matrix(p, s.phi1, s.phi2) * qd);
  double const k1 = p.pole1_mass * 0.5 * p.pole1_length + p.pole2_mass * p.pole1_length;
  double const k2 = p.pole2_mass * 0.5 * p.pole2_length;
  return kinetic + p.gravity * (k1 * std::cos(s.phi1) + k2 * std::cos(s.phi2));
}

/// Layout: cart x, sin of pole angles, cos of pole angles, clipped velocities, and three
/// constraint-force slots which are always zero in the generalized-coordinate model.
inline Vec observe(const IdpState &s)
{
  auto clip10 = [](double v) { return std::clamp(v, -10.0, 10.0); };
  Vec obs(11);
  obs << s.x, std::sin(s.phi1), std::sin(s.phi2), std::cos(s.phi1), std::cos(s.phi2),
      clip10(s.x_dot), clip10(s.phi1_dot), clip10(s.phi2_dot), 0.0, 0.0, 0.0;
  return obs;
}

/// Advances by `dt` under a constant horizontal cart force (already geared).
inline IdpState dynamics_step(const IdpParams &p, const IdpState &s, double force, double dt)
{
  double const k1 = p.pole1_mass * 0.5 * p.pole1_length + p.pole2_mass * p.pole1_length;
  double const k2 = p.pole2_mass * 0.5 * p.pole2_length;
  double const k3 = p.pole2_mass * p.pole1_length * 0.5 * p.pole2_length;

  auto accel = [&](const Vec &q, const Vec &qd) -> Vec {
    double const s1  = std::sin(q[1]);
    double const s2  = std::sin(q[2]);
    double const s12 = std::sin(q[1] - q[2]);
    Eigen::Vector3d const velocity_terms(-k1 * s1 * qd[1] * qd[1] - k2 * s2 * qd[2] * qd[2],
                                         k3 * s12 * qd[2] * qd[2], -k3 * s12 * qd[1] * qd[1]);
    Eigen::Vector3d const generalized(force - p.cart_friction * qd[0],
                                      p.gravity * k1 * s1 - p.joint_damping * qd[1],
                                      p.gravity * k2 * s2 - p.joint_damping * qd[2]);
    return mass_matrix(p, q[1], q[2]).ldlt().solve(generalized - velocity_terms);
  };

  Vec q(3), qd(3);
  q << s.x, s.phi1, s.phi2;
  qd << s.x_dot, s.phi1_dot, s.phi2_dot;
  int const    n = std::max(1, p.substeps);
  double const h = dt / n;
  for (int i = 0; i < n; ++i)
  {
    detail::rk4_step(q, qd, h, accel);
  }
  if (!q.allFinite() || !qd.allFinite())
  {
    throw NumericalDivergenceError("inverted double pendulum: non-finite state after step");
  }
  IdpState next = s;
  next.x        = q[0];
  next.phi1     = detail::wrap_angle(q[1]);
  next.phi2     = detail::wrap_angle(q[2]);
  next.x_dot    = qd[0];
  next.phi1_dot = qd[1];
  next.phi2_dot = qd[2];
  return next;
}

}  // namespace idp

class InvertedDoublePendulumEnv : public Environment
{
public:
  explicit InvertedDoublePendulumEnv(IdpParams params = {})
    : Environment(EnvSpec{BoxSpace::unbounded(11), BoxSpace::uniform(1, -1.0, 1.0),
                          params.max_steps, params.dt})
    , params_(params)
  {
    params_.weights.validate();
  }

  [[nodiscard]] std::string     name() const override { return "idp"; }
  [[nodiscard]] const IdpParams &params() const { return params_; }
  [[nodiscard]] const IdpState  &state() const { return state_; }

  void set_state(const IdpState &s)
  {
    reset(0);
    state_ = s;
  }

  [[nodiscard]] Vec observation() const { return idp::observe(state_); }

protected:
  Vec do_reset(std::uint64_t seed) override
  {
    SeededRng rng(seed);
    state_      = IdpState{};
    state_.phi1 = rng.uniform(-params_.init_noise, params_.init_noise);
    state_.phi2 = rng.uniform(-params_.init_noise, params_.init_noise);
    return observation();
  }

  StepResult do_step(const Vec &action) override
  {
    state_ = idp::dynamics_step(params_, state_, params_.force_gear * action[0], params_.dt);
    state_.step_count = step_count() + 1;

    double const y = idp::tip_height(params_, state_);
    auto const   r = rewards::inverted_double_pendulum(idp::tip_x(params_, state_), y,
                                                       state_.phi1_dot, state_.phi2_dot,
                                                       params_.weights);
    StepResult out;
    out.observation = observation();
    out.reward      = r.value;
    out.info        = r.components;
    out.terminated  = y <= params_.fall_height;
    return out;
  }

private:
  IdpParams params_;
  IdpState  state_;
};

}  // namespace rlbench
