#include "symtrack/references.hpp"

#include <cmath>
#include <cstdio>

#include "doctest.h"

using namespace symtrack;

TEST_CASE("reference action distribution sampling") {
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;

  // near-degenerate covariance collapses to the mean
  RefActionDist tight =
      RefActionDist::diagonal(mean, Eigen::VectorXd::Constant(2, 1e-30));
  RngStream rng(51);
  CHECK((tight.sample(rng) - mean).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(RefActionDist(mean, bad), std::invalid_argument);

  // reproducibility under a fixed stream
  Eigen::VectorXd var(2);
  var << 0.25, 4.0;
  RefActionDist dist = RefActionDist::diagonal(mean, var);
  RngStream a(52), b(52);
  for (int i = 0; i < 10; ++i) {
    CHECK((dist.sample(a) - dist.sample(b)).norm() == 0.0);
  }

  // moments over 1e5 draws
  const int n = 100000;
  Eigen::MatrixXd draws(n, 2);
  RngStream c(53);
  for (int i = 0; i < n; ++i) draws.row(i) = sample_ref_action(dist, c);
  for (int j = 0; j < 2; ++j) {
    double m = draws.col(j).mean();
    CHECK(std::abs(m - mean[j]) < 3.0 * std::sqrt(var[j] / n));
    double v = (draws.col(j).array() - m).square().sum() / (n - 1);
    CHECK(std::abs(v - var[j]) < 3.0 * var[j] * std::sqrt(2.0 / (n - 1)));
  }
}

TEST_CASE("particle plans invert the dynamics exactly") {
  const double dt = 0.02;
  const double mass = 1.4;

  std::vector<Vec3> constant(10, Vec3(1, 2, 3));
  ReferencePlan plan = plan_particle(constant, dt, mass);
  for (int t = 0; t < plan.size(); ++t) {
    CHECK(plan.states[t].tail<3>().norm() == 0.0);
    CHECK(plan.actions[t].norm() == 0.0);
  }

  std::vector<Vec3> line(10);
  for (int k = 0; k < 10; ++k) line[k] = k * dt * Vec3(1, 0, 0);
  plan = plan_particle(line, dt, mass);
  for (int t = 0; t < plan.size(); ++t) {
    CHECK((plan.states[t].tail<3>() - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
    CHECK(plan.actions[t].norm() < 1e-12);
  }

  // replay residual on a 500-step curve
  std::vector<Vec3> curve(502);
  for (int k = 0; k < 502; ++k) {
    double t = k * dt;
    curve[k] = Vec3(std::sin(0.7 * t), 0.8 * std::cos(0.4 * t), 0.3 * t * t);
  }
  plan = plan_particle(curve, dt, mass);
  CHECK(plan.size() == 500);
  ReplayReport rep = replay_plan(plan, ParticleParams{mass, dt});
  CHECK(rep.max_pos_error < 1e-10);

  CHECK_THROWS_AS(plan_particle({Vec3::Zero(), Vec3::Zero()}, dt, mass),
                  PlanningError);
}

TEST_CASE("rigid plans recover twists and wrenches") {
  RigidParams p;
  p.dt = 0.02;

  std::vector<Pose> constant(10);
  ReferencePlan plan = plan_rigid(constant, p);
  for (int t = 0; t < plan.size(); ++t) {
    CHECK(plan.states[t].segment<6>(12).norm() == 0.0);
    CHECK(plan.actions[t].norm() == 0.0);
  }

  // principal-axis spin: no torque needed after startup
  const double rate = 0.8;
  std::vector<Pose> spin(10);
  for (int k = 0; k < 10; ++k) spin[k].R = rot_z(rate * k * p.dt);
  plan = plan_rigid(spin, p);
  for (int t = 0; t < plan.size(); ++t) {
    CHECK((plan.states[t].segment<3>(12) - Vec3(0, 0, rate)).norm() < 1e-10);
    CHECK(plan.actions[t].head<3>().norm() < 1e-9);
  }

  // replay a wobbling 500-step pose curve
  std::vector<Pose> curve(502);
  for (int k = 0; k < 502; ++k) {
    double t = k * p.dt;
    curve[k].p = Vec3(std::sin(0.5 * t), std::cos(0.3 * t), 0.2 * t);
    curve[k].R = exp_so3(Vec3(0.4 * std::sin(0.6 * t), 0.3 * std::cos(0.5 * t),
                              0.5 * std::sin(0.2 * t)));
  }
  plan = plan_rigid(curve, p);
  CHECK(plan.size() == 500);
  ReplayReport rep = replay_plan(plan, p);
  CHECK(rep.max_pos_error < 1e-9);
  CHECK(rep.max_rot_error < 1e-9);
  CHECK(rep.max_vel_error < 1e-9);
  CHECK(rep.max_omega_error < 1e-9);
}

TEST_CASE("quadrotor hover plan is the static equilibrium") {
  QuadrotorParams p;
  LissajousSpec spec;
  spec.amplitude.setZero();
  spec.duration = 2.0;
  ReferencePlan plan = plan_quadrotor_lissajous(spec, p);
  double hover = p.rigid.m * p.gravity / 4.0;
  for (int t = 0; t < plan.size(); ++t) {
    RigidState x = unflatten_rigid(plan.states[t]);
    CHECK((x.q.R - Mat3::Identity()).norm() < 1e-12);
    CHECK(twist_to_vec(x.xi).norm() < 1e-12);
    CHECK((plan.actions[t] - Eigen::VectorXd::Constant(4, hover))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
  ReplayReport rep = replay_plan(plan, p);
  CHECK(rep.max_pos_error < 1e-9);
}

TEST_CASE("quadrotor flatness plan: planned forces are model-consistent") {
  QuadrotorParams p;
  LissajousSpec spec;
  spec.amplitude = Vec3(1.0, 1.0, 1.0);
  spec.freq = Vec3(0.5, 0.5, 0.5);
  spec.phase = Vec3(0.0, M_PI_2, 0.0);
  spec.duration = 10.0;

  ReferencePlan plan = plan_quadrotor_lissajous(spec, p);
  CHECK(plan.size() == 500);

  // the rotor forces must reproduce the planned body-frame velocity sequence
  // under v' = v + (f/m - R^T g e3) dt, up to the non-actuated xy residual
  double worst = 0.0;
  for (int t = 0; t + 1 < plan.size(); ++t) {
    RigidState a = unflatten_rigid(plan.states[t]);
    RigidState b = unflatten_rigid(plan.states[t + 1]);
    Wrench w = quad_mix(Vec4(plan.actions[t]), p);
    Vec3 v_next = a.xi.vel + (w.force / p.rigid.m -
                              a.q.R.transpose() * Vec3(0, 0, p.gravity)) *
                                 p.rigid.dt;
    worst = std::max(worst, (v_next - b.xi.vel).norm());
  }
  CHECK(worst < 1e-6);

  ReplayReport rep = replay_plan(plan, p);
  CHECK(rep.max_pos_error <= 0.05);  // drift budget over 10 s
  MESSAGE("quadrotor replay drift [m]: ", rep.max_pos_error);
}

TEST_CASE("quadrotor planner detects the free-fall singularity") {
  QuadrotorParams p;
  LissajousSpec spec;
  // vertical acceleration amplitude exceeding g crosses the singularity
  spec.amplitude = Vec3(0.0, 0.0, 2.5 * p.gravity);
  spec.freq = Vec3(0.0, 0.0, 1.0);
  spec.duration = 10.0;
  CHECK_THROWS_AS(plan_quadrotor_lissajous(spec, p), PlanningError);
}

TEST_CASE("plans are deterministic and round trip through CSV") {
  QuadrotorParams p;
  LissajousSpec spec;
  spec.duration = 2.0;
  ReferencePlan a = plan_quadrotor_lissajous(spec, p);
  ReferencePlan b = plan_quadrotor_lissajous(spec, p);
  REQUIRE(a.size() == b.size());
  for (int t = 0; t < a.size(); ++t) {
    CHECK((a.states[t] - b.states[t]).norm() == 0.0);
    CHECK((a.actions[t] - b.actions[t]).norm() == 0.0);
  }

  write_plan_csv(a, "plan_roundtrip_test.csv");
  ReferencePlan c = read_plan_csv("plan_roundtrip_test.csv");
  CHECK(c.system == a.system);
  CHECK(c.dt == a.dt);
  REQUIRE(c.size() == a.size());
  double worst = 0.0;
  for (int t = 0; t < a.size(); ++t) {
    worst = std::max(worst, (a.states[t] - c.states[t]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.actions[t] - c.actions[t]).cwiseAbs().maxCoeff());
  }
  CHECK(worst == 0.0);  // %.17g round trip is lossless
  std::remove("plan_roundtrip_test.csv");
}

TEST_CASE("seeded evaluation sets replay within their feasibility budgets") {
  ParticleParams pp;
  auto particle_plans =
      make_eval_plans(SystemKind::kParticle, 5, 900, 10.0, pp);
  CHECK(particle_plans.size() == 5);
  for (const auto& plan : particle_plans) {
    CHECK(replay_plan(plan, pp).max_pos_error < 1e-9);
  }

  RigidParams rp;
  for (const auto& plan :
       make_eval_plans(SystemKind::kAstrobee, 5, 901, 10.0, rp)) {
    CHECK(replay_plan(plan, rp).max_pos_error < 1e-9);
  }

  QuadrotorParams qp;
  for (const auto& plan :
       make_eval_plans(SystemKind::kQuadrotor, 5, 902, 10.0, qp)) {
    CHECK(replay_plan(plan, qp).max_pos_error <= 0.05);
  }
}
