#include "symtrack/symmetry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace symtrack {

SystemParams default_params(SystemKind kind) {
  switch (kind) {
    case SystemKind::kParticle:
      return ParticleParams{};
    case SystemKind::kAstrobee:
      return RigidParams{};
    case SystemKind::kQuadrotor:
      return QuadrotorParams{};
  }
  throw std::invalid_argument("bad system kind");
}

const char* reduction_name(ReductionKind kind) {
  switch (kind) {
    case ReductionKind::kBaseline:
      return "baseline";
    case ReductionKind::kTranslation:
      return "translation";
    case ReductionKind::kTranslationVelocity:
      return "translation-velocity";
    case ReductionKind::kFull:
      return "full";
    case ReductionKind::kSe3:
      return "se3";
    case ReductionKind::kSe2xR:
      return "se2xr";
  }
  return "?";
}

ReductionKind reduction_from_name(const std::string& name) {
  if (name == "baseline") return ReductionKind::kBaseline;
  if (name == "translation") return ReductionKind::kTranslation;
  if (name == "translation-velocity") return ReductionKind::kTranslationVelocity;
  if (name == "full") return ReductionKind::kFull;
  if (name == "se3") return ReductionKind::kSe3;
  if (name == "se2xr") return ReductionKind::kSe2xR;
  throw std::invalid_argument("unknown reduction: " + name);
}

bool reduction_valid(SystemKind system, ReductionKind kind) {
  if (kind == ReductionKind::kBaseline) return true;
  switch (system) {
    case SystemKind::kParticle:
      return kind == ReductionKind::kTranslation ||
             kind == ReductionKind::kTranslationVelocity ||
             kind == ReductionKind::kFull;
    case SystemKind::kAstrobee:
      return kind == ReductionKind::kSe3;
    case SystemKind::kQuadrotor:
      return kind == ReductionKind::kSe2xR;
  }
  return false;
}

bool reduction_valid_for_verify(SystemKind system, ReductionKind kind) {
  if (reduction_valid(system, kind)) return true;
  return system == SystemKind::kQuadrotor && kind == ReductionKind::kSe3;
}

int observation_dim(SystemKind system, ReductionKind kind) {
  const int adim = action_dim(system);
  const int sdim = state_dim(system);
  switch (kind) {
    case ReductionKind::kBaseline:
      return 2 * sdim + adim;  // 15 / 42 / 40
    case ReductionKind::kTranslation:
      return 12;
    case ReductionKind::kTranslationVelocity:
      return 9;
    case ReductionKind::kFull:
      return 6;
    case ReductionKind::kSe3:
      return 12 + 6 + 6 + adim;  // 30 astrobee, 28 quadrotor (verify only)
    case ReductionKind::kSe2xR:
      return 12 + 3 + 6 + 6 + adim;  // 31
  }
  return 0;
}

ParticleGroupElement group_compose(const ParticleGroupElement& a,
                                   const ParticleGroupElement& b) {
  return {a.k1 + b.k1, a.k2 + b.k2, a.h + b.h};
}

PoseGroupElement group_compose(const PoseGroupElement& a,
                               const PoseGroupElement& b) {
  return {pose_compose(a.k, b.k)};
}

TrackingState<ParticleSystem> act_state(const ParticleGroupElement& g,
                                        const TrackingState<ParticleSystem>& s) {
  TrackingState<ParticleSystem> out = s;
  out.actual.r += g.k1;
  out.actual.v += g.k2;
  out.reference.r += g.k1;
  out.reference.v += g.k2;
  out.ref_action += g.h;
  return out;
}

namespace {

template <class S>
TrackingState<S> act_rigid(const PoseGroupElement& g, const TrackingState<S>& s) {
  TrackingState<S> out = s;
  out.actual.q = pose_compose(g.k, s.actual.q);
  out.reference.q = pose_compose(g.k, s.reference.q);
  return out;
}

}  // namespace

TrackingState<AstrobeeSystem> act_state(const PoseGroupElement& g,
                                        const TrackingState<AstrobeeSystem>& s) {
  return act_rigid(g, s);
}

TrackingState<QuadrotorSystem> act_state(const PoseGroupElement& g,
                                         const TrackingState<QuadrotorSystem>& s) {
  return act_rigid(g, s);
}

Vec3 act_action(const ParticleGroupElement& g, const Vec3& a) { return a + g.h; }
Vec6 act_action(const PoseGroupElement&, const Vec6& a) { return a; }
Vec4 act_action(const PoseGroupElement&, const Vec4& a) { return a; }

namespace {

void put_rotation(Eigen::VectorXd& obs, int offset, const Mat3& r) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) obs[offset + 3 * i + j] = r(i, j);
}

Mat3 get_rotation(const Eigen::VectorXd& obs, int offset) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = obs[offset + 3 * i + j];
  return r;
}

[[noreturn]] void bad_reduction(SystemKind system, ReductionKind kind) {
  throw std::invalid_argument(std::string("reduction '") + reduction_name(kind) +
                              "' not defined for system '" +
                              system_name(system) + "'");
}

}  // namespace

Eigen::VectorXd reduce(const TrackingState<ParticleSystem>& s,
                       ReductionKind kind, LiftContext* ctx) {
  if (ctx != nullptr) {
    ctx->kind = kind;
    ctx->ref_action = s.ref_action;
  }
  Eigen::VectorXd obs(observation_dim(SystemKind::kParticle, kind));
  switch (kind) {
    case ReductionKind::kBaseline:
      obs << s.actual.r, s.actual.v, s.reference.r, s.reference.v, s.ref_action;
      return obs;
    case ReductionKind::kTranslation:
      obs << s.actual.r - s.reference.r, s.actual.v, s.reference.v,
          s.ref_action;
      return obs;
    case ReductionKind::kTranslationVelocity:
      obs << s.actual.r - s.reference.r, s.actual.v - s.reference.v,
          s.ref_action;
      return obs;
    case ReductionKind::kFull:
      obs << s.actual.r - s.reference.r, s.actual.v - s.reference.v;
      return obs;
    default:
      bad_reduction(SystemKind::kParticle, kind);
  }
}

namespace {

// Shared rigid-body layouts; `gravity_dir` toggles the body-frame gravity
// block of the se2xr observation.
template <class S>
Eigen::VectorXd reduce_rigid(const TrackingState<S>& s, ReductionKind kind,
                             LiftContext* ctx) {
  if (ctx != nullptr) {
    ctx->kind = kind;
    ctx->ref_action = s.ref_action;
  }
  Eigen::VectorXd obs(observation_dim(S::kKind, kind));
  if (kind == ReductionKind::kBaseline) {
    obs << flatten_state(s.actual), flatten_state(s.reference), s.ref_action;
    return obs;
  }
  if (kind != ReductionKind::kSe3 && kind != ReductionKind::kSe2xR) {
    bad_reduction(S::kKind, kind);
  }
  Pose q_err = pose_compose(pose_inverse(s.actual.q), s.reference.q);
  put_rotation(obs, 0, q_err.R);
  obs.segment<3>(9) = q_err.p;
  int at = 12;
  if (kind == ReductionKind::kSe2xR) {
    obs.segment<3>(at) = s.actual.q.R.transpose() * Vec3::UnitZ();
    at += 3;
  }
  obs.segment<3>(at) = s.actual.xi.omega;
  obs.segment<3>(at + 3) = s.actual.xi.vel;
  obs.segment<3>(at + 6) = s.reference.xi.omega;
  obs.segment<3>(at + 9) = s.reference.xi.vel;
  obs.tail(s.ref_action.size()) = s.ref_action;
  return obs;
}

}  // namespace

Eigen::VectorXd reduce(const TrackingState<AstrobeeSystem>& s,
                       ReductionKind kind, LiftContext* ctx) {
  if (kind == ReductionKind::kSe2xR) bad_reduction(SystemKind::kAstrobee, kind);
  return reduce_rigid(s, kind, ctx);
}

Eigen::VectorXd reduce(const TrackingState<QuadrotorSystem>& s,
                       ReductionKind kind, LiftContext* ctx) {
  return reduce_rigid(s, kind, ctx);
}

Eigen::VectorXd lift_action(const Eigen::VectorXd& a_reduced,
                            const LiftContext& ctx) {
  if (ctx.kind == ReductionKind::kFull ||
      ctx.kind == ReductionKind::kTranslationVelocity) {
    if (ctx.ref_action.size() != a_reduced.size()) {
      throw std::invalid_argument("lift_action: missing or mismatched context");
    }
    return a_reduced + ctx.ref_action;
  }
  return a_reduced;
}

Vec6 quotient_step_particle(const Vec6& obs, const Vec3& a_reduced,
                            const ParticleParams& p) {
  Vec6 out;
  out.head<3>() = obs.head<3>() + obs.tail<3>() * p.dt;
  out.tail<3>() = obs.tail<3>() + a_reduced * (p.dt / p.m);
  return out;
}

TrackingState<ParticleSystem> representative_particle(
    const Eigen::VectorXd& obs, ReductionKind kind) {
  TrackingState<ParticleSystem> s;
  switch (kind) {
    case ReductionKind::kBaseline:
      s.actual.r = obs.segment<3>(0);
      s.actual.v = obs.segment<3>(3);
      s.reference.r = obs.segment<3>(6);
      s.reference.v = obs.segment<3>(9);
      s.ref_action = obs.segment<3>(12);
      return s;
    case ReductionKind::kTranslation:
      s.actual.r = obs.segment<3>(0);
      s.actual.v = obs.segment<3>(3);
      s.reference.r = Vec3::Zero();
      s.reference.v = obs.segment<3>(6);
      s.ref_action = obs.segment<3>(9);
      return s;
    case ReductionKind::kTranslationVelocity:
      s.actual.r = obs.segment<3>(0);
      s.actual.v = obs.segment<3>(3);
      s.reference = ParticleState{};
      s.ref_action = obs.segment<3>(6);
      return s;
    case ReductionKind::kFull:
      s.actual.r = obs.segment<3>(0);
      s.actual.v = obs.segment<3>(3);
      s.reference = ParticleState{};
      s.ref_action = Vec3::Zero();
      return s;
    default:
      bad_reduction(SystemKind::kParticle, kind);
  }
}

namespace {

template <class S>
TrackingState<S> representative_rigid(const Eigen::VectorXd& obs,
                                      ReductionKind kind) {
  TrackingState<S> s;
  const int adim = S::kActionDim;
  if (kind == ReductionKind::kBaseline) {
    s.actual = unflatten_rigid(obs.segment(0, 18));
    s.reference = unflatten_rigid(obs.segment(18, 18));
    s.ref_action = typename S::Action(obs.tail(adim));
    return s;
  }
  Pose q_err;
  q_err.R = get_rotation(obs, 0);
  q_err.p = obs.segment<3>(9);
  int at = 12;
  if (kind == ReductionKind::kSe2xR) {
    // Any pose with body z-axis mapped to the stored gravity direction is a
    // valid orbit representative; pick the tilt-only one at the origin.
    Vec3 b = obs.segment<3>(at).normalized();
    at += 3;
    Vec3 ax = b.cross(Vec3::UnitZ());
    double sin_a = ax.norm();
    double cos_a = b.z();
    if (sin_a < 1e-12) {
      s.actual.q.R = cos_a > 0.0 ? Mat3::Identity() : rot_x(M_PI);
    } else {
      s.actual.q.R = exp_so3((ax / sin_a) * std::atan2(sin_a, cos_a));
    }
  } else if (kind == ReductionKind::kSe3) {
    s.actual.q.R = Mat3::Identity();
  } else {
    bad_reduction(S::kKind, kind);
  }
  s.actual.q.p = Vec3::Zero();
  s.actual.xi.omega = obs.segment<3>(at);
  s.actual.xi.vel = obs.segment<3>(at + 3);
  s.reference.q = pose_compose(s.actual.q, q_err);
  s.reference.xi.omega = obs.segment<3>(at + 6);
  s.reference.xi.vel = obs.segment<3>(at + 9);
  s.ref_action = typename S::Action(obs.tail(adim));
  return s;
}

}  // namespace

TrackingState<AstrobeeSystem> representative_astrobee(
    const Eigen::VectorXd& obs, ReductionKind kind) {
  return representative_rigid<AstrobeeSystem>(obs, kind);
}

TrackingState<QuadrotorSystem> representative_quadrotor(
    const Eigen::VectorXd& obs, ReductionKind kind) {
  return representative_rigid<QuadrotorSystem>(obs, kind);
}

namespace {

template <class S>
TrackingState<S> representative(const Eigen::VectorXd& obs, ReductionKind kind) {
  if constexpr (S::kKind == SystemKind::kParticle) {
    return representative_particle(obs, kind);
  } else if constexpr (S::kKind == SystemKind::kAstrobee) {
    return representative_astrobee(obs, kind);
  } else {
    return representative_quadrotor(obs, kind);
  }
}

template <class S>
Eigen::VectorXd quotient_step_impl(const Eigen::VectorXd& obs,
                                   const Eigen::VectorXd& a_reduced,
                                   ReductionKind kind,
                                   const typename S::Params& params) {
  TrackingState<S> rep = representative<S>(obs, kind);
  LiftContext ctx;
  reduce(rep, kind, &ctx);
  typename S::Action u(lift_action(a_reduced, ctx));
  return reduce(advance(rep, u, params), kind);
}

}  // namespace

Eigen::VectorXd quotient_step(SystemKind system, const Eigen::VectorXd& obs,
                              const Eigen::VectorXd& a_reduced,
                              ReductionKind kind, const SystemParams& params) {
  switch (system) {
    case SystemKind::kParticle:
      return quotient_step_impl<ParticleSystem>(
          obs, a_reduced, kind, std::get<ParticleParams>(params));
    case SystemKind::kAstrobee:
      return quotient_step_impl<AstrobeeSystem>(obs, a_reduced, kind,
                                                std::get<RigidParams>(params));
    case SystemKind::kQuadrotor:
      return quotient_step_impl<QuadrotorSystem>(
          obs, a_reduced, kind, std::get<QuadrotorParams>(params));
  }
  throw std::invalid_argument("bad system kind");
}

// ---------------------------------------------------------------------------
// Randomized verification
// ---------------------------------------------------------------------------

namespace {

Mat3 random_rotation(RngStream& rng, double max_angle) {
  return exp_so3(rng.unit_vector() * rng.uniform(0.0, max_angle));
}

TrackingState<ParticleSystem> sample_state(RngStream& rng,
                                           const ParticleParams&) {
  TrackingState<ParticleSystem> s;
  s.actual.r = rng.uniform_box(3.0);
  s.actual.v = rng.uniform_box(2.0);
  s.reference.r = rng.uniform_box(3.0);
  s.reference.v = rng.uniform_box(2.0);
  s.ref_action = rng.uniform_box(2.0);
  return s;
}

// Reference sampled as a bounded perturbation of the actual pose so that the
// relative rotation stays away from the log-map branch at pi.
template <class S>
TrackingState<S> sample_rigid_tracking(RngStream& rng) {
  TrackingState<S> s;
  s.actual.q.p = rng.uniform_box(3.0);
  s.actual.q.R = random_rotation(rng, M_PI - 0.3);
  s.actual.xi.omega = rng.uniform_box(1.5);
  s.actual.xi.vel = rng.uniform_box(2.0);
  Pose delta;
  delta.R = random_rotation(rng, 2.5);
  delta.p = rng.uniform_box(2.0);
  s.reference.q = pose_compose(s.actual.q, delta);
  s.reference.xi.omega = rng.uniform_box(1.5);
  s.reference.xi.vel = rng.uniform_box(2.0);
  for (int i = 0; i < s.ref_action.size(); ++i)
    s.ref_action[i] = rng.uniform(-2.0, 2.0);
  return s;
}

TrackingState<AstrobeeSystem> sample_state(RngStream& rng, const RigidParams&) {
  return sample_rigid_tracking<AstrobeeSystem>(rng);
}

TrackingState<QuadrotorSystem> sample_state(RngStream& rng,
                                            const QuadrotorParams&) {
  return sample_rigid_tracking<QuadrotorSystem>(rng);
}

template <class S>
typename S::Action sample_action(RngStream& rng) {
  typename S::Action a;
  for (int i = 0; i < a.size(); ++i) a[i] = rng.uniform(-2.0, 2.0);
  return a;
}

// Group samplers. `claimed` selects the subgroup the reduction quotients by
// (identity for the baseline); otherwise the group the reward/transition
// checks run against (the system's symmetry group, or full SE(3) for the
// deliberately broken quadrotor/se3 combination).
template <class S>
struct VerifyTraits;

template <>
struct VerifyTraits<ParticleSystem> {
  using Group = ParticleGroupElement;
  static Group sample(RngStream& rng, ReductionKind kind, bool claimed) {
    if (claimed && kind == ReductionKind::kBaseline) return {};
    Group g;
    g.k1 = rng.uniform_box(2.0);
    if (kind != ReductionKind::kTranslation) g.k2 = rng.uniform_box(2.0);
    if (kind == ReductionKind::kFull || kind == ReductionKind::kBaseline)
      g.h = rng.uniform_box(2.0);
    return g;
  }
  // The transformed next state differs by the time-advanced group element:
  // positions pick up k2 dt and velocities h dt / m.
  static Group advanced(const Group& g, const ParticleParams& p) {
    return {g.k1 + g.k2 * p.dt, g.k2 + g.h * (p.dt / p.m), g.h};
  }
};

template <>
struct VerifyTraits<AstrobeeSystem> {
  using Group = PoseGroupElement;
  static Group sample(RngStream& rng, ReductionKind kind, bool claimed) {
    if (claimed && kind == ReductionKind::kBaseline) return {};
    Group g;
    g.k.R = random_rotation(rng, M_PI - 0.3);
    g.k.p = rng.uniform_box(2.0);
    return g;
  }
  static Group advanced(const Group& g, const RigidParams&) { return g; }
};

template <>
struct VerifyTraits<QuadrotorSystem> {
  using Group = PoseGroupElement;
  static Group sample(RngStream& rng, ReductionKind kind, bool claimed) {
    if (claimed && kind == ReductionKind::kBaseline) return {};
    Group g;
    if (kind == ReductionKind::kSe3) {
      g.k.R = random_rotation(rng, M_PI - 0.3);
    } else {
      g.k.R = rot_z(rng.uniform(-M_PI, M_PI));
    }
    g.k.p = rng.uniform_box(2.0);
    return g;
  }
  static Group advanced(const Group& g, const QuadrotorParams&) { return g; }
};

template <class S>
double state_distance(const TrackingState<S>& a, const TrackingState<S>& b) {
  double d = (flatten_state(a.actual) - flatten_state(b.actual))
                 .cwiseAbs()
                 .maxCoeff();
  d = std::max(d, (flatten_state(a.reference) - flatten_state(b.reference))
                      .cwiseAbs()
                      .maxCoeff());
  d = std::max(d, (a.ref_action - b.ref_action).cwiseAbs().maxCoeff());
  return d;
}

template <class S>
SymmetryReport verify_impl(ReductionKind kind, int n_samples,
                           std::uint64_t seed, const typename S::Params& params,
                           const CostParams& cost) {
  constexpr double kTol = 1e-9;
  SymmetryReport report;
  report.system = S::kKind;
  report.kind = kind;

  {
    RngStream rng(derive_key(seed, "verify-reward"));
    double dev = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      auto s = sample_state(rng, params);
      auto a = sample_action<S>(rng);
      auto g = VerifyTraits<S>::sample(rng, kind, false);
      double r0 = reward(s, a, cost);
      double r1 = reward(act_state(g, s), act_action(g, a), cost);
      dev = std::max(dev, std::abs(r0 - r1));
    }
    report.checks.push_back({"reward_invariance", n_samples, dev, kTol, dev < kTol});
  }
  {
    RngStream rng(derive_key(seed, "verify-equivariance"));
    double dev = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      auto s = sample_state(rng, params);
      auto a = sample_action<S>(rng);
      auto g = VerifyTraits<S>::sample(rng, kind, false);
      auto lhs = advance(act_state(g, s), act_action(g, a), params);
      auto rhs = act_state(VerifyTraits<S>::advanced(g, params),
                           advance(s, a, params));
      dev = std::max(dev, state_distance(lhs, rhs));
    }
    report.checks.push_back(
        {"transition_equivariance", n_samples, dev, kTol, dev < kTol});
  }
  {
    RngStream rng(derive_key(seed, "verify-orbit"));
    double dev = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      auto s = sample_state(rng, params);
      auto g = VerifyTraits<S>::sample(rng, kind, true);
      Eigen::VectorXd o0 = reduce(s, kind);
      Eigen::VectorXd o1 = reduce(act_state(g, s), kind);
      dev = std::max(dev, (o0 - o1).cwiseAbs().maxCoeff());
    }
    report.checks.push_back({"orbit_invariance", n_samples, dev, kTol, dev < kTol});
  }
  {
    RngStream rng(derive_key(seed, "verify-commutation"));
    double dev = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      auto s = sample_state(rng, params);
      auto a_red = sample_action<S>(rng);
      LiftContext ctx;
      Eigen::VectorXd obs = reduce(s, kind, &ctx);
      typename S::Action u(lift_action(Eigen::VectorXd(a_red), ctx));
      Eigen::VectorXd through_env = reduce(advance(s, u, params), kind);
      Eigen::VectorXd through_quotient = quotient_step_impl<S>(
          obs, Eigen::VectorXd(a_red), kind, params);
      dev = std::max(dev, (through_env - through_quotient).cwiseAbs().maxCoeff());
    }
    report.checks.push_back(
        {"reduce_step_commutation", n_samples, dev, kTol, dev < kTol});
  }
  return report;
}

}  // namespace

bool SymmetryReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

double SymmetryReport::max_deviation(const std::string& check_name) const {
  for (const auto& c : checks)
    if (c.name == check_name) return c.max_deviation;
  throw std::invalid_argument("no such check: " + check_name);
}

SymmetryReport verify_symmetry(SystemKind system, ReductionKind kind,
                               int n_samples, std::uint64_t seed,
                               const SystemParams& params,
                               const CostParams& cost) {
  if (!reduction_valid_for_verify(system, kind)) {
    throw std::invalid_argument(
        std::string("reduction '") + reduction_name(kind) +
        "' cannot be verified for system '" + system_name(system) + "'");
  }
  switch (system) {
    case SystemKind::kParticle:
      return verify_impl<ParticleSystem>(kind, n_samples, seed,
                                         std::get<ParticleParams>(params), cost);
    case SystemKind::kAstrobee:
      return verify_impl<AstrobeeSystem>(kind, n_samples, seed,
                                         std::get<RigidParams>(params), cost);
    case SystemKind::kQuadrotor:
      return verify_impl<QuadrotorSystem>(
          kind, n_samples, seed, std::get<QuadrotorParams>(params), cost);
  }
  throw std::invalid_argument("bad system kind");
}

std::string format_verify_report(const SymmetryReport& report) {
  std::ostringstream out;
  out << "symmetry verification: system=" << system_name(report.system)
      << " reduction=" << reduction_name(report.kind) << "\n";
  char line[160];
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof(line), "  %-26s samples=%-6d max_dev=%-12.3e %s\n",
                  c.name.c_str(), c.samples, c.max_deviation,
                  c.pass ? "PASS" : "FAIL");
    out << line;
  }
  out << (report.pass() ? "RESULT: PASS" : "RESULT: FAIL") << "\n";
  return out.str();
}

void write_verify_report_csv(const SymmetryReport& report,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "system,reduction,check,samples,max_deviation,tolerance,pass\n";
  char buf[64];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof(buf), "%.17g", c.max_deviation);
    out << system_name(report.system) << "," << reduction_name(report.kind)
        << "," << c.name << "," << c.samples << "," << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", c.tolerance);
    out << buf << "," << (c.pass ? "1" : "0") << "\n";
  }
}

}  // namespace symtrack
