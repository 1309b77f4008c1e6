#pragma once

#include <Eigen/Core>

#include "symtrack/geometry.hpp"

namespace symtrack {

enum class SystemKind { kParticle, kAstrobee, kQuadrotor };

const char* system_name(SystemKind kind);
SystemKind system_from_name(const std::string& name);

struct ParticleState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct RigidState {
  Pose q;
  Twist xi;
};

struct ParticleParams {
  double m = 1.0;    // [kg]
  double dt = 0.02;  // [s]
};

struct RigidParams {
  double m = 9.58;                                           // [kg]
  Mat3 inertia = Vec3(0.153, 0.143, 0.162).asDiagonal();     // [kg m^2]
  double dt = 0.02;                                          // [s]
};

struct QuadrotorParams {
  RigidParams rigid{0.5, Vec3(2.3e-3, 2.3e-3, 4.0e-3).asDiagonal(), 0.02};
  double arm = 0.17;          // rotor arm length [m]
  double drag_coeff = 0.016;  // yaw moment per unit thrust [m]
  double gravity = 9.81;      // [m/s^2]
};

// Explicit Euler double integrator: r' = r + v dt, v' = v + u dt / m.
ParticleState particle_step(const ParticleState& x, const Vec3& u,
                            const ParticleParams& p);

// Lie-Euler pose update q' = q exp(hat(xi) dt) followed by the twist update
// with all right-hand sides evaluated at time t:
//   v' = v + f dt / m,   w' = w + J^{-1} (mu - w x J w) dt.
RigidState rigid_step(const RigidState& x, const Wrench& u,
                      const RigidParams& p);

// Rotor thrusts -> body wrench:
//   f  = (0, 0, u1+u2+u3+u4)
//   mu = (l (u1-u3), l (u2-u4), c (u1-u2+u3-u4))
Wrench quad_mix(const Vec4& u, const QuadrotorParams& p);

// Inverse of quad_mix given the total thrust f_z and torque mu.
Vec4 quad_mix_inverse(double thrust, const Vec3& torque,
                      const QuadrotorParams& p);

// As rigid_step with (mu, f) = quad_mix(u) and body-frame gravity:
//   v' = v + (f / m - R^T (g e3)) dt.
RigidState quad_step(const RigidState& x, const Vec4& u,
                     const QuadrotorParams& p);

// Flat encodings used by observations, plans, and CSV files.
// Particle: (r, v) -> 6.  Rigid: (R row-major, p, omega, v) -> 18.
Eigen::VectorXd flatten_state(const ParticleState& x);
Eigen::VectorXd flatten_state(const RigidState& x);
ParticleState unflatten_particle(const Eigen::VectorXd& z);
RigidState unflatten_rigid(const Eigen::VectorXd& z);

Vec6 wrench_to_vec(const Wrench& w);   // (mu, f)
Wrench vec_to_wrench(const Vec6& z);
Vec6 twist_to_vec(const Twist& t);     // (omega, v)
Twist vec_to_twist(const Vec6& z);

int state_dim(SystemKind kind);
int action_dim(SystemKind kind);

}  // namespace symtrack
