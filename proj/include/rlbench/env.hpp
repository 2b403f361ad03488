#pragma once

#include <cstdint>
#include <string>

#include "rlbench/core.hpp"

namespace rlbench {

struct EnvSpec
{
  BoxSpace observation_space;
  BoxSpace action_space;
  int      max_steps{1000};
  double   dt{0.01};

  void validate() const
  {
    if (!action_space.is_finite())
    {
      throw UnsupportedSpaceError("EnvSpec: action space bounds must be finite");
    }
    if (max_steps < 1)
    {
      throw InputError("EnvSpec: max_steps must be >= 1");
    }
    if (!(dt > 0.0))
    {
      throw InputError("EnvSpec: dt must be positive");
    }
  }
};

/// Episodic environment contract shared by the built-in tasks and the bridge.
///
/// The base class owns the episode bookkeeping: dimension checks, clipping the action
/// into the action space, the step counter, the time limit, and sticky `done`.
/// Subclasses only implement the reset rule and one dynamics step.
class Environment
{
public:
  virtual ~Environment() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] const EnvSpec      &spec() const { return spec_; }

  Vec reset(std::uint64_t seed)
  {
    step_count_ = 0;
    done_       = false;
    started_    = true;
    Vec obs     = do_reset(seed);
    check_observation(obs);
    return obs;
  }

  StepResult step(const Vec &action)
  {
    if (!started_)
    {
      throw ProtocolError(name() + ": step before reset");
    }
    if (done_)
    {
      throw ProtocolError(name() + ": step after episode end");
    }
    if (action.size() != spec_.action_space.dim())
    {
      throw InputError(dim_mismatch("step action", spec_.action_space.dim(), action.size()));
    }
    Vec const clipped = clip_to_space(spec_.action_space, action);
    StepResult result;
    try
    {
      result = do_step(clipped);
    }
    catch (const NumericalDivergenceError &)
    {
      done_ = true;
      throw;
    }
    ++step_count_;
    check_observation(result.observation);
    result.done = result.done || result.terminated || step_count_ >= spec_.max_steps;
    done_       = result.done;
    return result;
  }

  [[nodiscard]] int  step_count() const { return step_count_; }
  [[nodiscard]] bool done() const { return done_; }

protected:
  explicit Environment(EnvSpec spec)
    : spec_(std::move(spec))
  {
    spec_.validate();
  }

  // A subclass may set `done` itself (e.g. a remote time limit); the base adds the
  // termination rule and max_steps on top.
  virtual Vec        do_reset(std::uint64_t seed) = 0;
  virtual StepResult do_step(const Vec &clipped_action) = 0;

  void set_spec(EnvSpec spec)
  {
    spec.validate();
    spec_ = std::move(spec);
  }

private:
  void check_observation(const Vec &obs) const
  {
    if (obs.size() != spec_.observation_space.dim())
    {
      throw ProtocolError(
          dim_mismatch((name() + " observation").c_str(), spec_.observation_space.dim(),
                       obs.size()));
    }
  }

  EnvSpec spec_;
  int     step_count_{0};
  bool    done_{false};
  bool    started_{false};
};

namespace detail {

// Classical fourth-order Runge-Kutta step for q'' = acc(q, q').
template <typename Accel>
void rk4_step(Vec &q, Vec &qd, double h, Accel &&acc)
{
  Vec const a1 = acc(q, qd);
  Vec const q2 = q + 0.5 * h * qd;
  Vec const v2 = qd + 0.5 * h * a1;
  Vec const a2 = acc(q2, v2);
  Vec const q3 = q + 0.5 * h * v2;
  Vec const v3 = qd + 0.5 * h * a2;
  Vec const a3 = acc(q3, v3);
  Vec const q4 = q + h * v3;
  Vec const v4 = qd + h * a3;
  Vec const a4 = acc(q4, v4);
  q += (h / 6.0) * (qd + 2.0 * v2 + 2.0 * v3 + v4);
  qd += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
}

// Wraps into (-pi, pi].
inline double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w                = std::remainder(a, two_pi);
  if (w <= -std::numbers::pi)
  {
    w += two_pi;
  }
  return w;
}

}  // namespace detail

}  // namespace rlbench
