#include "symtrack/dynamics.hpp"

#include <stdexcept>
#include <string>

namespace symtrack {

const char* system_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::kParticle:
      return "particle";
    case SystemKind::kAstrobee:
      return "astrobee";
    case SystemKind::kQuadrotor:
      return "quadrotor";
  }
  return "?";
}

SystemKind system_from_name(const std::string& name) {
  if (name == "particle") return SystemKind::kParticle;
  if (name == "astrobee") return SystemKind::kAstrobee;
  if (name == "quadrotor") return SystemKind::kQuadrotor;
  throw std::invalid_argument("unknown system: " + name);
}

ParticleState particle_step(const ParticleState& x, const Vec3& u,
                            const ParticleParams& p) {
  ParticleState out;
  out.r = x.r + x.v * p.dt;
  out.v = x.v + u * (p.dt / p.m);
  return out;
}

RigidState rigid_step(const RigidState& x, const Wrench& u,
                      const RigidParams& p) {
  RigidState out;
  out.q = pose_compose(x.q, exp_se3(x.xi, p.dt));
  out.xi.vel = x.xi.vel + u.force * (p.dt / p.m);
  Vec3 gyro = x.xi.omega.cross(p.inertia * x.xi.omega);
  out.xi.omega = x.xi.omega + p.inertia.inverse() * (u.torque - gyro) * p.dt;
  return out;
}

Wrench quad_mix(const Vec4& u, const QuadrotorParams& p) {
  Wrench w;
  w.force = Vec3(0.0, 0.0, u.sum());
  w.torque = Vec3(p.arm * (u[0] - u[2]), p.arm * (u[1] - u[3]),
                  p.drag_coeff * (u[0] - u[1] + u[2] - u[3]));
  return w;
}

Vec4 quad_mix_inverse(double thrust, const Vec3& torque,
                      const QuadrotorParams& p) {
  double a = torque.x() / (2.0 * p.arm);
  double b = torque.y() / (2.0 * p.arm);
  double c = torque.z() / (4.0 * p.drag_coeff);
  double t4 = thrust / 4.0;
  return Vec4(t4 + a + c, t4 + b - c, t4 - a + c, t4 - b - c);
}

RigidState quad_step(const RigidState& x, const Vec4& u,
                     const QuadrotorParams& p) {
  const RigidParams& rp = p.rigid;
  Wrench w = quad_mix(u, p);
  RigidState out;
  out.q = pose_compose(x.q, exp_se3(x.xi, rp.dt));
  Vec3 gravity_body = x.q.R.transpose() * Vec3(0.0, 0.0, p.gravity);
  out.xi.vel = x.xi.vel + (w.force / rp.m - gravity_body) * rp.dt;
  Vec3 gyro = x.xi.omega.cross(rp.inertia * x.xi.omega);
  out.xi.omega = x.xi.omega + rp.inertia.inverse() * (w.torque - gyro) * rp.dt;
  return out;
}

Eigen::VectorXd flatten_state(const ParticleState& x) {
  Eigen::VectorXd z(6);
  z << x.r, x.v;
  return z;
}

Eigen::VectorXd flatten_state(const RigidState& x) {
  Eigen::VectorXd z(18);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) z[3 * i + j] = x.q.R(i, j);
  z.segment<3>(9) = x.q.p;
  z.segment<3>(12) = x.xi.omega;
  z.segment<3>(15) = x.xi.vel;
  return z;
}

ParticleState unflatten_particle(const Eigen::VectorXd& z) {
  ParticleState x;
  x.r = z.segment<3>(0);
  x.v = z.segment<3>(3);
  return x;
}

RigidState unflatten_rigid(const Eigen::VectorXd& z) {
  RigidState x;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) x.q.R(i, j) = z[3 * i + j];
  x.q.p = z.segment<3>(9);
  x.xi.omega = z.segment<3>(12);
  x.xi.vel = z.segment<3>(15);
  return x;
}

Vec6 wrench_to_vec(const Wrench& w) {
  Vec6 z;
  z << w.torque, w.force;
  return z;
}

Wrench vec_to_wrench(const Vec6& z) {
  Wrench w;
  w.torque = z.head<3>();
  w.force = z.tail<3>();
  return w;
}

Vec6 twist_to_vec(const Twist& t) {
  Vec6 z;
  z << t.omega, t.vel;
  return z;
}

Twist vec_to_twist(const Vec6& z) {
  Twist t;
  t.omega = z.head<3>();
  t.vel = z.tail<3>();
  return t;
}

int state_dim(SystemKind kind) {
  return kind == SystemKind::kParticle ? 6 : 18;
}

int action_dim(SystemKind kind) {
  switch (kind) {
    case SystemKind::kParticle:
      return 3;
    case SystemKind::kAstrobee:
      return 6;
    case SystemKind::kQuadrotor:
      return 4;
  }
  return 0;
}

}  // namespace symtrack
