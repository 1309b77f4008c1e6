#pragma once

#include <memory>

#include "symtrack/symmetry.hpp"
#include "symtrack/tracking.hpp"

namespace symtrack {

// Policy-facing environment: observes the reduced state for the configured
// reduction and lifts incoming reduced actions before stepping the physical
// system. In training mode it auto-resets on episode end; in plan mode the
// reference channel is injected from a ReferencePlan and the rollout stops
// when the plan runs out.
class ReducedTrackingEnv {
 public:
  virtual ~ReducedTrackingEnv() = default;

  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual double dt() const = 0;

  struct StepOut {
    Eigen::VectorXd obs;
    double reward = 0.0;
    bool done = false;
    bool diverged = false;
    Eigen::VectorXd final_obs;  // pre-reset observation, set when done
  };

  virtual Eigen::VectorXd reset() = 0;
  virtual StepOut step(const Eigen::VectorXd& reduced_action) = 0;

  virtual void set_plan(const ReferencePlan* plan) = 0;

  // Flat physical states for evaluation records.
  virtual Eigen::VectorXd actual_state_flat() const = 0;
  virtual Eigen::VectorXd reference_state_flat() const = 0;
  virtual Eigen::VectorXd current_action_lifted(
      const Eigen::VectorXd& reduced_action) const = 0;
};

std::unique_ptr<ReducedTrackingEnv> make_env(SystemKind system,
                                             ReductionKind kind,
                                             const SystemParams& params,
                                             const EnvConfig& cfg,
                                             std::uint64_t rng_key);

}  // namespace symtrack
