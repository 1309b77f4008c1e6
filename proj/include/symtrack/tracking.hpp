#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "symtrack/dynamics.hpp"
#include "symtrack/references.hpp"
#include "symtrack/rng.hpp"

namespace symtrack {

struct CostParams {
  double c_r = 1.0;
  double a_r = 5.0;
  double c_v = 0.5;
  double c_u = 0.1;
  double c_R = 0.5;
  double c_xi = 0.25;
};

// alpha(y) = c_r ||y|| + tanh(a_r ||y||) - 1; alpha(0) = -1.
double alpha(const Vec3& y, double c_r, double a_r);

// Particle: alpha(r - rd) + c_v ||v - vd||.
double tracking_cost(const ParticleState& x, const ParticleState& x_ref,
                     const CostParams& c);
// Rigid body: alpha(r - rd) + c_R ||log(R^T Rd)|| + c_xi ||xi - xid||.
double tracking_cost(const RigidState& x, const RigidState& x_ref,
                     const CostParams& c);

// c_u ||u - ud||.
template <class Action>
double effort_cost(const Action& u, const Action& u_ref, double c_u) {
  return c_u * (u - u_ref).norm();
}

struct ResetSpec {
  double pos_range = 1.0;      // uniform cube half-width [m]
  double vel_range = 0.5;      // uniform cube half-width [m/s] (and [rad/s])
  double rot_angle_max = 0.5;  // uniform axis-angle magnitude cap [rad]
};

struct EnvConfig {
  double gamma = 0.99;
  int episode_length = 250;
  ResetSpec reset;
  CostParams cost;
  RefActionDist ref_dist;
};

// System traits binding state/action/parameter types to the step function.
struct ParticleSystem {
  static constexpr SystemKind kKind = SystemKind::kParticle;
  static constexpr int kActionDim = 3;
  using State = ParticleState;
  using Action = Vec3;
  using Params = ParticleParams;
  static State step(const State& x, const Action& u, const Params& p) {
    return particle_step(x, u, p);
  }
  static double dt(const Params& p) { return p.dt; }
};

struct AstrobeeSystem {
  static constexpr SystemKind kKind = SystemKind::kAstrobee;
  static constexpr int kActionDim = 6;
  using State = RigidState;
  using Action = Vec6;
  using Params = RigidParams;
  static State step(const State& x, const Action& u, const Params& p) {
    return rigid_step(x, vec_to_wrench(u), p);
  }
  static double dt(const Params& p) { return p.dt; }
};

struct QuadrotorSystem {
  static constexpr SystemKind kKind = SystemKind::kQuadrotor;
  static constexpr int kActionDim = 4;
  using State = RigidState;
  using Action = Vec4;
  using Params = QuadrotorParams;
  static State step(const State& x, const Action& u, const Params& p) {
    return quad_step(x, u, p);
  }
  static double dt(const Params& p) { return p.rigid.dt; }
};

// MDP state s = (x, x_ref, u_ref).
template <class S>
struct TrackingState {
  typename S::State actual;
  typename S::State reference;
  typename S::Action ref_action;
};

template <class S>
double reward(const TrackingState<S>& s, const typename S::Action& a,
              const CostParams& c) {
  return -tracking_cost(s.actual, s.reference, c) -
         effort_cost(a, s.ref_action, c.c_u);
}

// Deterministic part of the transition: both channels advance under the
// shared dynamics; the reference action carries over (resampling is the
// environment's job).
template <class S>
TrackingState<S> advance(const TrackingState<S>& s, const typename S::Action& a,
                         const typename S::Params& p) {
  TrackingState<S> out;
  out.actual = S::step(s.actual, a, p);
  out.reference = S::step(s.reference, s.ref_action, p);
  out.ref_action = s.ref_action;
  return out;
}

ParticleState offset_state(const ParticleState& ref, const ResetSpec& spec,
                           RngStream& rng);
RigidState offset_state(const RigidState& ref, const ResetSpec& spec,
                        RngStream& rng);

bool state_finite(const ParticleState& x);
bool state_finite(const RigidState& x);

// One tracking environment instance: owns its RNG stream and step counter.
// In plan mode the reference channel is injected from a ReferencePlan instead
// of being simulated, and episodes end when the plan is exhausted.
template <class S>
class TrackingEnv {
 public:
  using State = TrackingState<S>;
  using Action = typename S::Action;

  TrackingEnv(typename S::Params params, EnvConfig cfg, std::uint64_t rng_key)
      : params_(std::move(params)), cfg_(std::move(cfg)), rng_(rng_key) {}

  void set_plan(const ReferencePlan* plan) { plan_ = plan; }

  const State& state() const { return s_; }
  State& mutable_state() { return s_; }
  const typename S::Params& params() const { return params_; }
  const EnvConfig& config() const { return cfg_; }
  int step_count() const { return step_count_; }

  const State& reset() {
    step_count_ = 0;
    if (plan_ != nullptr) {
      s_.reference = decode_state(plan_->states.at(0));
      s_.ref_action = Action(plan_->actions.at(0));
    } else {
      s_.reference = typename S::State{};
      s_.ref_action = Action(cfg_.ref_dist.sample(rng_));
    }
    s_.actual = offset_state(s_.reference, cfg_.reset, rng_);
    return s_;
  }

  struct StepOut {
    double reward = 0.0;
    bool done = false;
    bool diverged = false;
  };

  StepOut step(const Action& a) {
    StepOut out;
    out.reward = symtrack::reward(s_, a, cfg_.cost);
    s_.actual = S::step(s_.actual, a, params_);
    ++step_count_;
    if (plan_ != nullptr) {
      if (step_count_ >= plan_->size()) {
        out.done = true;
        return out;
      }
      s_.reference = decode_state(plan_->states[step_count_]);
      s_.ref_action = Action(plan_->actions[step_count_]);
    } else {
      s_.reference = S::step(s_.reference, s_.ref_action, params_);
      s_.ref_action = Action(cfg_.ref_dist.sample(rng_));
      if (step_count_ >= cfg_.episode_length) out.done = true;
    }
    if (!state_finite(s_.actual) || !state_finite(s_.reference)) {
      out.done = true;
      out.diverged = true;
    }
    return out;
  }

 private:
  static typename S::State decode_state(const Eigen::VectorXd& z) {
    if constexpr (S::kKind == SystemKind::kParticle) {
      return unflatten_particle(z);
    } else {
      return unflatten_rigid(z);
    }
  }

  typename S::Params params_;
  EnvConfig cfg_;
  RngStream rng_;
  State s_;
  int step_count_ = 0;
  const ReferencePlan* plan_ = nullptr;
};

}  // namespace symtrack
