#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "symtrack/dynamics.hpp"
#include "symtrack/rng.hpp"

namespace symtrack {

// Multivariate Gaussian over actions; covariance factored once at
// construction. Throws std::invalid_argument if the covariance is not SPD.
class RefActionDist {
 public:
  RefActionDist() = default;
  RefActionDist(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  static RefActionDist diagonal(Eigen::VectorXd mean, Eigen::VectorXd variances);

  Eigen::VectorXd sample(RngStream& rng) const;
  const Eigen::VectorXd& mean() const { return mean_; }
  // Per-dimension standard deviations, sqrt(diag(covariance)).
  Eigen::VectorXd sigma_diagonal() const { return chol_.rowwise().norm(); }
  int dim() const { return static_cast<int>(mean_.size()); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;  // lower-triangular factor of the covariance
};

inline Eigen::VectorXd sample_ref_action(const RefActionDist& dist,
                                         RngStream& rng) {
  return dist.sample(rng);
}

struct PlanningError : std::runtime_error {
  PlanningError(const std::string& what, double t_fail)
      : std::runtime_error(what), t(t_fail) {}
  double t;  // time of failure [s]
};

// Time-indexed reference: states[t], actions[t] for t = 0..size-1, stored in
// the flat per-system layout from dynamics.hpp. Replaying actions[0..T-2]
// through the system's step function from states[0] reproduces states[1..T-1]
// exactly for the particle and astrobee, and within a bounded drift for the
// quadrotor.
struct ReferencePlan {
  SystemKind system = SystemKind::kParticle;
  double dt = 0.02;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;

  int size() const { return static_cast<int>(states.size()); }
};

struct LissajousSpec {
  Vec3 amplitude = Vec3(1.0, 1.0, 1.0);  // [m]
  Vec3 freq = Vec3(0.5, 0.5, 0.5);       // [rad/s]
  Vec3 phase = Vec3::Zero();             // [rad]
  double yaw_amplitude = 0.0;            // [rad]
  double yaw_freq = 0.0;                 // [rad/s]
  double yaw_phase = 0.0;                // [rad]
  double duration = 10.0;                // [s]
};

// Finite-difference inversion of the particle dynamics; needs >= 3 samples.
ReferencePlan plan_particle(const std::vector<Vec3>& positions, double dt,
                            double mass);

// Twists from pose logs, wrench from the discrete Newton/Euler inverse.
// Consecutive poses must be within rotation angle pi of each other.
ReferencePlan plan_rigid(const std::vector<Pose>& poses, const RigidParams& p);

// Differential-flatness plan through the Lissajous curve. The attitude comes
// from the thrust direction plus yaw; an optional fixed-point refinement
// re-aims the thrust axis so the planned rotor forces reproduce the planned
// body-frame velocities under the discrete model (see QuadPlanOptions).
struct QuadPlanOptions {
  int attitude_refinements = 40;  // 0 recovers the textbook flatness attitude
};
ReferencePlan plan_quadrotor_lissajous(const LissajousSpec& spec,
                                       const QuadrotorParams& p,
                                       const QuadPlanOptions& opts = {});

struct ReplayReport {
  double max_pos_error = 0.0;   // [m]
  double max_vel_error = 0.0;   // [m/s] (body frame for rigid systems)
  double max_rot_error = 0.0;   // [rad]
  double max_omega_error = 0.0; // [rad/s]
  double drift_per_dt = 0.0;    // max_pos_error / dt
};

// Open-loop replay of the plan's actions from states[0]; the independent
// feasibility check for every planner.
ReplayReport replay_plan(const ReferencePlan& plan, const ParticleParams& p);
ReplayReport replay_plan(const ReferencePlan& plan, const RigidParams& p);
ReplayReport replay_plan(const ReferencePlan& plan, const QuadrotorParams& p);

void write_plan_csv(const ReferencePlan& plan, const std::string& path);
ReferencePlan read_plan_csv(const std::string& path);

// Seeded evaluation trajectory sets (documented parameter ranges; see README).
std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const ParticleParams& p);
std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const RigidParams& p);
std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const QuadrotorParams& p);

}  // namespace symtrack
