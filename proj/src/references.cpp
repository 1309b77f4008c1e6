#include "symtrack/references.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace symtrack {

RefActionDist::RefActionDist(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)) {
  if (covariance.rows() != mean_.size() || covariance.cols() != mean_.size()) {
    throw std::invalid_argument("RefActionDist: covariance shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("RefActionDist: covariance is not SPD");
  }
  chol_ = llt.matrixL();
}

RefActionDist RefActionDist::diagonal(Eigen::VectorXd mean,
                                      Eigen::VectorXd variances) {
  return RefActionDist(std::move(mean),
                       Eigen::MatrixXd(variances.asDiagonal()));
}

Eigen::VectorXd RefActionDist::sample(RngStream& rng) const {
  return mean_ + chol_ * rng.normal_vec(dim());
}

ReferencePlan plan_particle(const std::vector<Vec3>& positions, double dt,
                            double mass) {
  const int n = static_cast<int>(positions.size());
  if (n < 3) throw PlanningError("plan_particle: need at least 3 samples", 0.0);
  std::vector<Vec3> vel(n - 1);
  for (int t = 0; t + 1 < n; ++t) vel[t] = (positions[t + 1] - positions[t]) / dt;

  ReferencePlan plan;
  plan.system = SystemKind::kParticle;
  plan.dt = dt;
  const int steps = n - 2;
  plan.states.reserve(steps);
  plan.actions.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    ParticleState x{positions[t], vel[t]};
    plan.states.push_back(flatten_state(x));
    plan.actions.push_back(mass * (vel[t + 1] - vel[t]) / dt);
  }
  return plan;
}

ReferencePlan plan_rigid(const std::vector<Pose>& poses, const RigidParams& p) {
  const int n = static_cast<int>(poses.size());
  if (n < 3) throw PlanningError("plan_rigid: need at least 3 samples", 0.0);

  std::vector<Twist> xi(n - 1);
  for (int t = 0; t + 1 < n; ++t) {
    if (rot_distance(poses[t].R, poses[t + 1].R) > M_PI - 1e-6) {
      throw PlanningError("plan_rigid: rotation jump >= pi between samples",
                          t * p.dt);
    }
    Twist rel = log_se3(pose_compose(pose_inverse(poses[t]), poses[t + 1]));
    xi[t].omega = rel.omega / p.dt;
    xi[t].vel = rel.vel / p.dt;
  }

  ReferencePlan plan;
  plan.system = SystemKind::kAstrobee;
  plan.dt = p.dt;
  const int steps = n - 2;
  for (int t = 0; t < steps; ++t) {
    RigidState x{poses[t], xi[t]};
    plan.states.push_back(flatten_state(x));
    Wrench u;
    u.force = p.m * (xi[t + 1].vel - xi[t].vel) / p.dt;
    u.torque = p.inertia * (xi[t + 1].omega - xi[t].omega) / p.dt +
               xi[t].omega.cross(p.inertia * xi[t].omega);
    plan.actions.push_back(wrench_to_vec(u));
  }
  return plan;
}

namespace {

// n-th derivative of A sin(w t + phi) componentwise.
Vec3 lissajous_deriv(const LissajousSpec& s, double t, int order) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    double w = s.freq[i];
    out[i] = s.amplitude[i] * std::pow(w, order) *
             std::sin(w * t + s.phase[i] + order * M_PI_2);
  }
  return out;
}

double lissajous_yaw(const LissajousSpec& s, double t) {
  return s.yaw_amplitude * std::sin(s.yaw_freq * t + s.yaw_phase);
}

// Attitude with body z along dir and heading given by yaw.
Mat3 attitude_from_thrust(const Vec3& dir, double yaw, double t_sample) {
  double norm = dir.norm();
  if (norm < 1e-6) {
    throw PlanningError(
        "quadrotor plan: required acceleration cancels gravity (free fall)",
        t_sample);
  }
  Vec3 zb = dir / norm;
  Vec3 xc(std::cos(yaw), std::sin(yaw), 0.0);
  Vec3 yb = zb.cross(xc);
  double yb_norm = yb.norm();
  if (yb_norm < 1e-6) {
    throw PlanningError("quadrotor plan: thrust direction degenerate with heading",
                        t_sample);
  }
  yb /= yb_norm;
  Mat3 r;
  r.col(0) = yb.cross(zb);
  r.col(1) = yb;
  r.col(2) = zb;
  return r;
}

}  // namespace

ReferencePlan plan_quadrotor_lissajous(const LissajousSpec& spec,
                                       const QuadrotorParams& p,
                                       const QuadPlanOptions& opts) {
  const double dt = p.rigid.dt;
  const double m = p.rigid.m;
  const Vec3 ge3(0.0, 0.0, p.gravity);
  const int steps = static_cast<int>(std::llround(spec.duration / dt));
  if (steps < 2) throw PlanningError("quadrotor plan: duration too short", 0.0);
  const int n = steps + 2;  // extra tail samples so every emitted action is
                            // backed by real successor data

  std::vector<Vec3> pos(n), acc(n);
  std::vector<double> yaw(n);
  for (int k = 0; k < n; ++k) {
    double t = k * dt;
    pos[k] = lissajous_deriv(spec, t, 0);
    acc[k] = lissajous_deriv(spec, t, 2);
    yaw[k] = lissajous_yaw(spec, t);
  }

  // Textbook flatness attitude: body z along the required acceleration.
  std::vector<Mat3> rot(n);
  for (int k = 0; k < n; ++k) {
    rot[k] = attitude_from_thrust(acc[k] + ge3, yaw[k], k * dt);
  }

  // Body twists from pose logs, so the pose sequence replays exactly under
  // q' = q exp(hat(xi) dt).
  std::vector<Twist> xi(n);
  std::vector<Vec3> f_req(n);
  auto recompute = [&]() {
    for (int k = 0; k + 1 < n; ++k) {
      Pose rel = pose_compose(pose_inverse(Pose{rot[k], pos[k]}),
                              Pose{rot[k + 1], pos[k + 1]});
      Twist l = log_se3(rel);
      xi[k] = Twist{l.omega / dt, l.vel / dt};
    }
    xi[n - 1] = xi[n - 2];
    for (int k = 0; k + 2 < n; ++k) {
      f_req[k] = m * ((xi[k + 1].vel - xi[k].vel) / dt +
                      rot[k].transpose() * ge3);
    }
    f_req[n - 2] = f_req[n - 3];
    f_req[n - 1] = f_req[n - 3];
  };
  recompute();

  // Fixed point: re-aim body z along the required world force so the
  // velocity recursion v' = v + (f/m - R^T g e3) dt is met by a thrust along
  // body z alone. The xy re-aim is damped (neighbor coupling through the pose
  // logs makes the undamped sweep oscillate) and the best iterate wins.
  auto max_residual = [&]() {
    double worst = 0.0;
    for (int k = 0; k + 2 < n; ++k) {
      worst = std::max(worst, f_req[k].head<2>().norm());
    }
    return worst;
  };
  std::vector<Mat3> best_rot = rot;
  double best = max_residual();
  for (int it = 0; it < opts.attitude_refinements; ++it) {
    for (int k = 0; k < n; ++k) {
      Vec3 damped(0.5 * f_req[k].x(), 0.5 * f_req[k].y(), f_req[k].z());
      rot[k] = attitude_from_thrust(rot[k] * damped, yaw[k], k * dt);
    }
    recompute();
    double res = max_residual();
    if (res < best) {
      best = res;
      best_rot = rot;
    }
  }
  rot = best_rot;
  recompute();

  ReferencePlan plan;
  plan.system = SystemKind::kQuadrotor;
  plan.dt = dt;
  for (int k = 0; k < steps; ++k) {
    RigidState x{Pose{rot[k], pos[k]}, xi[k]};
    plan.states.push_back(flatten_state(x));

    double thrust = f_req[k].z();
    if (thrust <= 0.0) {
      throw PlanningError("quadrotor plan: required thrust not positive", k * dt);
    }
    Vec3 mu = p.rigid.inertia * (xi[k + 1].omega - xi[k].omega) / dt +
              xi[k].omega.cross(p.rigid.inertia * xi[k].omega);
    plan.actions.push_back(Eigen::VectorXd(quad_mix_inverse(thrust, mu, p)));
  }
  return plan;
}

namespace {

template <class State, class Step>
ReplayReport replay_generic(const ReferencePlan& plan, State x, Step step,
                            bool rigid) {
  ReplayReport rep;
  for (int t = 0; t < plan.size(); ++t) {
    Eigen::VectorXd ref = plan.states[t];
    Eigen::VectorXd cur = flatten_state(x);
    if (rigid) {
      RigidState a = unflatten_rigid(cur), b = unflatten_rigid(ref);
      rep.max_pos_error = std::max(rep.max_pos_error, (a.q.p - b.q.p).norm());
      rep.max_vel_error =
          std::max(rep.max_vel_error, (a.xi.vel - b.xi.vel).norm());
      rep.max_rot_error =
          std::max(rep.max_rot_error, rot_distance(a.q.R, b.q.R));
      rep.max_omega_error =
          std::max(rep.max_omega_error, (a.xi.omega - b.xi.omega).norm());
    } else {
      ParticleState a = unflatten_particle(cur), b = unflatten_particle(ref);
      rep.max_pos_error = std::max(rep.max_pos_error, (a.r - b.r).norm());
      rep.max_vel_error = std::max(rep.max_vel_error, (a.v - b.v).norm());
    }
    if (t + 1 < plan.size()) x = step(x, plan.actions[t]);
  }
  rep.drift_per_dt = rep.max_pos_error / plan.dt;
  return rep;
}

}  // namespace

ReplayReport replay_plan(const ReferencePlan& plan, const ParticleParams& p) {
  ParticleState x0 = unflatten_particle(plan.states.at(0));
  return replay_generic(
      plan, x0,
      [&](const ParticleState& x, const Eigen::VectorXd& u) {
        return particle_step(x, Vec3(u), p);
      },
      false);
}

ReplayReport replay_plan(const ReferencePlan& plan, const RigidParams& p) {
  RigidState x0 = unflatten_rigid(plan.states.at(0));
  return replay_generic(
      plan, x0,
      [&](const RigidState& x, const Eigen::VectorXd& u) {
        return rigid_step(x, vec_to_wrench(Vec6(u)), p);
      },
      true);
}

ReplayReport replay_plan(const ReferencePlan& plan, const QuadrotorParams& p) {
  RigidState x0 = unflatten_rigid(plan.states.at(0));
  return replay_generic(
      plan, x0,
      [&](const RigidState& x, const Eigen::VectorXd& u) {
        return quad_step(x, Vec4(u), p);
      },
      true);
}

namespace {

std::vector<std::string> state_columns(SystemKind kind) {
  if (kind == SystemKind::kParticle)
    return {"rx", "ry", "rz", "vx", "vy", "vz"};
  return {"R00", "R01", "R02", "R10", "R11", "R12", "R20", "R21", "R22",
          "px",  "py",  "pz",  "wx",  "wy",  "wz",  "vx",  "vy",  "vz"};
}

std::vector<std::string> action_columns(SystemKind kind) {
  switch (kind) {
    case SystemKind::kParticle:
      return {"ux", "uy", "uz"};
    case SystemKind::kAstrobee:
      return {"mu_x", "mu_y", "mu_z", "fx", "fy", "fz"};
    case SystemKind::kQuadrotor:
      return {"u1", "u2", "u3", "u4"};
  }
  return {};
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_plan_csv(const ReferencePlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# symtrack-plan system=" << system_name(plan.system)
      << " dt=" << fmt17(plan.dt) << "\n";
  out << "t";
  for (const auto& c : state_columns(plan.system)) out << "," << c;
  for (const auto& c : action_columns(plan.system)) out << "," << c;
  out << "\n";
  for (int t = 0; t < plan.size(); ++t) {
    out << t;
    for (int i = 0; i < plan.states[t].size(); ++i)
      out << "," << fmt17(plan.states[t][i]);
    for (int i = 0; i < plan.actions[t].size(); ++i)
      out << "," << fmt17(plan.actions[t][i]);
    out << "\n";
  }
}

ReferencePlan read_plan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# symtrack-plan", 0) != 0) {
    throw std::runtime_error(path + ": not a plan file");
  }
  ReferencePlan plan;
  {
    std::istringstream meta(line);
    std::string tok;
    while (meta >> tok) {
      if (tok.rfind("system=", 0) == 0) plan.system = system_from_name(tok.substr(7));
      if (tok.rfind("dt=", 0) == 0) plan.dt = std::stod(tok.substr(3));
    }
  }
  std::getline(in, line);  // header
  const int sdim = state_dim(plan.system);
  const int adim = action_dim(plan.system);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // t
    Eigen::VectorXd s(sdim), a(adim);
    for (int i = 0; i < sdim; ++i) {
      std::getline(row, cell, ',');
      s[i] = std::stod(cell);
    }
    for (int i = 0; i < adim; ++i) {
      std::getline(row, cell, ',');
      a[i] = std::stod(cell);
    }
    plan.states.push_back(std::move(s));
    plan.actions.push_back(std::move(a));
  }
  return plan;
}

namespace {

LissajousSpec random_lissajous(RngStream& rng, double duration) {
  LissajousSpec s;
  for (int i = 0; i < 3; ++i) {
    s.amplitude[i] = rng.uniform(0.5, 1.5);
    s.freq[i] = rng.uniform(0.2, 0.6);
    s.phase[i] = rng.uniform(0.0, 2.0 * M_PI);
  }
  s.duration = duration;
  return s;
}

std::vector<Vec3> sample_lissajous_positions(const LissajousSpec& s, double dt,
                                             int count) {
  std::vector<Vec3> out(count);
  for (int k = 0; k < count; ++k) out[k] = lissajous_deriv(s, k * dt, 0);
  return out;
}

}  // namespace

std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const ParticleParams& p) {
  (void)kind;
  std::vector<ReferencePlan> plans;
  for (int i = 0; i < count; ++i) {
    RngStream rng(derive_key(seed, "eval-plan", i));
    LissajousSpec s = random_lissajous(rng, duration);
    int n = static_cast<int>(std::llround(duration / p.dt)) + 2;
    plans.push_back(plan_particle(sample_lissajous_positions(s, p.dt, n), p.dt, p.m));
  }
  return plans;
}

std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const RigidParams& p) {
  (void)kind;
  std::vector<ReferencePlan> plans;
  for (int i = 0; i < count; ++i) {
    RngStream rng(derive_key(seed, "eval-plan", i));
    LissajousSpec s = random_lissajous(rng, duration);
    Vec3 axis = rng.unit_vector();
    double angle_amp = rng.uniform(0.2, 0.8);
    double angle_freq = rng.uniform(0.2, 0.6);
    double angle_phase = rng.uniform(0.0, 2.0 * M_PI);
    int n = static_cast<int>(std::llround(duration / p.dt)) + 2;
    std::vector<Pose> poses(n);
    for (int k = 0; k < n; ++k) {
      double t = k * p.dt;
      poses[k].p = lissajous_deriv(s, t, 0);
      poses[k].R = exp_so3(axis * (angle_amp * std::sin(angle_freq * t + angle_phase)));
    }
    plans.push_back(plan_rigid(poses, p));
  }
  return plans;
}

std::vector<ReferencePlan> make_eval_plans(SystemKind kind, int count,
                                           std::uint64_t seed, double duration,
                                           const QuadrotorParams& p) {
  (void)kind;
  std::vector<ReferencePlan> plans;
  for (int i = 0; i < count; ++i) {
    RngStream rng(derive_key(seed, "eval-plan", i));
    LissajousSpec s = random_lissajous(rng, duration);
    plans.push_back(plan_quadrotor_lissajous(s, p));
  }
  return plans;
}

}  // namespace symtrack
