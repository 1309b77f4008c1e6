#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

#include "symtrack/tracking.hpp"

namespace symtrack {

using SystemParams = std::variant<ParticleParams, RigidParams, QuadrotorParams>;
SystemParams default_params(SystemKind kind);

enum class ReductionKind {
  kBaseline,             // full-state observation (x, x_ref, u_ref)
  kTranslation,          // particle: (r - rd, v, vd, ud)
  kTranslationVelocity,  // particle: (r - rd, v - vd, ud), lifted actions
  kFull,                 // particle: (r - rd, v - vd), lifted actions
  kSe3,                  // rigid: (q^{-1} qd, xi, xid, ud)
  kSe2xR,                // quadrotor: (q^{-1} qd, R^T e3, xi, xid, ud)
};

const char* reduction_name(ReductionKind kind);
ReductionKind reduction_from_name(const std::string& name);

// Pairing used by training and evaluation. verify additionally admits the
// quadrotor/se3 combination, whose failure demonstrates that gravity breaks
// the full SE(3) symmetry.
bool reduction_valid(SystemKind system, ReductionKind kind);
bool reduction_valid_for_verify(SystemKind system, ReductionKind kind);

int observation_dim(SystemKind system, ReductionKind kind);

// Translation group T R^3 x R^3 acting on the particle tracking MDP:
// (k1, k2) shifts positions/velocities of both channels, h shifts actions.
struct ParticleGroupElement {
  Vec3 k1 = Vec3::Zero();
  Vec3 k2 = Vec3::Zero();
  Vec3 h = Vec3::Zero();
};

// Left SE(3) action on rigid-body tracking states; SE(2) x R elements carry a
// rot_z rotation block by construction. The action on wrenches/thrusts is
// trivial.
struct PoseGroupElement {
  Pose k;
};

ParticleGroupElement group_compose(const ParticleGroupElement& a,
                                   const ParticleGroupElement& b);
PoseGroupElement group_compose(const PoseGroupElement& a,
                               const PoseGroupElement& b);

TrackingState<ParticleSystem> act_state(const ParticleGroupElement& g,
                                        const TrackingState<ParticleSystem>& s);
TrackingState<AstrobeeSystem> act_state(const PoseGroupElement& g,
                                        const TrackingState<AstrobeeSystem>& s);
TrackingState<QuadrotorSystem> act_state(const PoseGroupElement& g,
                                         const TrackingState<QuadrotorSystem>& s);

Vec3 act_action(const ParticleGroupElement& g, const Vec3& a);
Vec6 act_action(const PoseGroupElement& g, const Vec6& a);
Vec4 act_action(const PoseGroupElement& g, const Vec4& a);

// Group traits per system.
template <class S>
struct GroupOf {
  using type = PoseGroupElement;
};
template <>
struct GroupOf<ParticleSystem> {
  using type = ParticleGroupElement;
};

// Everything a lifted policy needs besides the reduced action: the reduction
// kind and, for the particle action-symmetry reductions, the current
// reference action.
struct LiftContext {
  ReductionKind kind = ReductionKind::kBaseline;
  Eigen::VectorXd ref_action;
};

// Quotient-space observation; fixed layouts per kind (see observation_dim).
// ctx, when non-null, receives the matching lift context.
Eigen::VectorXd reduce(const TrackingState<ParticleSystem>& s,
                       ReductionKind kind, LiftContext* ctx = nullptr);
Eigen::VectorXd reduce(const TrackingState<AstrobeeSystem>& s,
                       ReductionKind kind, LiftContext* ctx = nullptr);
Eigen::VectorXd reduce(const TrackingState<QuadrotorSystem>& s,
                       ReductionKind kind, LiftContext* ctx = nullptr);

// Inverse of the action map: adds the reference action back for the particle
// reductions whose action space is quotiented, identity otherwise.
Eigen::VectorXd lift_action(const Eigen::VectorXd& a_reduced,
                            const LiftContext& ctx);

// Error dynamics of the fully reduced particle MDP:
//   r_e' = r_e + v_e dt,  v_e' = v_e + u_e dt / m.
Vec6 quotient_step_particle(const Vec6& obs, const Vec3& a_reduced,
                            const ParticleParams& p);

// Canonical orbit representative of a reduced observation.
TrackingState<ParticleSystem> representative_particle(
    const Eigen::VectorXd& obs, ReductionKind kind);
TrackingState<AstrobeeSystem> representative_astrobee(
    const Eigen::VectorXd& obs, ReductionKind kind);
TrackingState<QuadrotorSystem> representative_quadrotor(
    const Eigen::VectorXd& obs, ReductionKind kind);

// Deterministic quotient transition: advance the canonical representative and
// reduce again. Well-defined exactly when (reduce, lift) is a homomorphism,
// which is what the commutation check probes.
Eigen::VectorXd quotient_step(SystemKind system, const Eigen::VectorXd& obs,
                              const Eigen::VectorXd& a_reduced,
                              ReductionKind kind, const SystemParams& params);

struct SymmetryCheck {
  std::string name;
  int samples = 0;
  double max_deviation = 0.0;
  double tolerance = 1e-9;
  bool pass = false;
};

struct SymmetryReport {
  SystemKind system = SystemKind::kParticle;
  ReductionKind kind = ReductionKind::kBaseline;
  std::vector<SymmetryCheck> checks;
  bool pass() const;
  double max_deviation(const std::string& check_name) const;
};

// Randomized verification of (i) reward invariance, (ii) deterministic
// transition equivariance, (iii) observation orbit-invariance and (iv)
// reduce/step commutation, each over n_samples draws.
SymmetryReport verify_symmetry(SystemKind system, ReductionKind kind,
                               int n_samples, std::uint64_t seed,
                               const SystemParams& params,
                               const CostParams& cost);

std::string format_verify_report(const SymmetryReport& report);
void write_verify_report_csv(const SymmetryReport& report,
                             const std::string& path);

}  // namespace symtrack
