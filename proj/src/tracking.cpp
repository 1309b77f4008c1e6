#include "symtrack/tracking.hpp"

#include <cmath>

namespace symtrack {

double alpha(const Vec3& y, double c_r, double a_r) {
  double n = y.norm();
  return c_r * n + std::tanh(a_r * n) - 1.0;
}

double tracking_cost(const ParticleState& x, const ParticleState& x_ref,
                     const CostParams& c) {
  return alpha(x.r - x_ref.r, c.c_r, c.a_r) + c.c_v * (x.v - x_ref.v).norm();
}

double tracking_cost(const RigidState& x, const RigidState& x_ref,
                     const CostParams& c) {
  Vec6 xi_err = twist_to_vec(x.xi) - twist_to_vec(x_ref.xi);
  return alpha(x.q.p - x_ref.q.p, c.c_r, c.a_r) +
         c.c_R * rot_distance(x.q.R, x_ref.q.R) + c.c_xi * xi_err.norm();
}

ParticleState offset_state(const ParticleState& ref, const ResetSpec& spec,
                           RngStream& rng) {
  ParticleState x;
  x.r = ref.r + rng.uniform_box(spec.pos_range);
  x.v = ref.v + rng.uniform_box(spec.vel_range);
  return x;
}

RigidState offset_state(const RigidState& ref, const ResetSpec& spec,
                        RngStream& rng) {
  RigidState x;
  x.q.p = ref.q.p + rng.uniform_box(spec.pos_range);
  Vec3 axis = rng.unit_vector();
  double angle = rng.uniform(0.0, spec.rot_angle_max);
  x.q.R = ref.q.R * exp_so3(axis * angle);
  x.xi.omega = ref.xi.omega + rng.uniform_box(spec.vel_range);
  x.xi.vel = ref.xi.vel + rng.uniform_box(spec.vel_range);
  return x;
}

bool state_finite(const ParticleState& x) {
  return x.r.allFinite() && x.v.allFinite();
}

bool state_finite(const RigidState& x) {
  return x.q.R.allFinite() && x.q.p.allFinite() && x.xi.omega.allFinite() &&
         x.xi.vel.allFinite();
}

}  // namespace symtrack
