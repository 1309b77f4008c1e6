#include "symtrack/env.hpp"

#include <stdexcept>

namespace symtrack {

namespace {

template <class S>
class ReducedTrackingEnvT final : public ReducedTrackingEnv {
 public:
  ReducedTrackingEnvT(typename S::Params params, EnvConfig cfg,
                      ReductionKind kind, std::uint64_t rng_key)
      : env_(std::move(params), std::move(cfg), rng_key), kind_(kind) {}

  int obs_dim() const override { return observation_dim(S::kKind, kind_); }
  int act_dim() const override { return S::kActionDim; }
  double dt() const override { return S::dt(env_.params()); }

  Eigen::VectorXd reset() override {
    env_.reset();
    return observe();
  }

  StepOut step(const Eigen::VectorXd& reduced_action) override {
    typename S::Action u(lift_action(reduced_action, ctx_));
    auto phys = env_.step(u);
    StepOut out;
    out.reward = phys.reward;
    out.done = phys.done;
    out.diverged = phys.diverged;
    if (phys.done) {
      out.final_obs = observe();
      if (plan_mode_) {
        out.obs = out.final_obs;
      } else {
        env_.reset();
        out.obs = observe();
      }
    } else {
      out.obs = observe();
    }
    return out;
  }

  void set_plan(const ReferencePlan* plan) override {
    plan_mode_ = plan != nullptr;
    env_.set_plan(plan);
  }

  Eigen::VectorXd actual_state_flat() const override {
    return flatten_state(env_.state().actual);
  }

  Eigen::VectorXd reference_state_flat() const override {
    return flatten_state(env_.state().reference);
  }

  Eigen::VectorXd current_action_lifted(
      const Eigen::VectorXd& reduced_action) const override {
    return lift_action(reduced_action, ctx_);
  }

 private:
  Eigen::VectorXd observe() {
    return reduce(env_.state(), kind_, &ctx_);
  }

  TrackingEnv<S> env_;
  ReductionKind kind_;
  LiftContext ctx_;
  bool plan_mode_ = false;
};

}  // namespace

std::unique_ptr<ReducedTrackingEnv> make_env(SystemKind system,
                                             ReductionKind kind,
                                             const SystemParams& params,
                                             const EnvConfig& cfg,
                                             std::uint64_t rng_key) {
  if (!reduction_valid(system, kind)) {
    throw std::invalid_argument(std::string("reduction '") +
                                reduction_name(kind) +
                                "' is not valid for system '" +
                                system_name(system) + "'");
  }
  switch (system) {
    case SystemKind::kParticle:
      return std::make_unique<ReducedTrackingEnvT<ParticleSystem>>(
          std::get<ParticleParams>(params), cfg, kind, rng_key);
    case SystemKind::kAstrobee:
      return std::make_unique<ReducedTrackingEnvT<AstrobeeSystem>>(
          std::get<RigidParams>(params), cfg, kind, rng_key);
    case SystemKind::kQuadrotor:
      return std::make_unique<ReducedTrackingEnvT<QuadrotorSystem>>(
          std::get<QuadrotorParams>(params), cfg, kind, rng_key);
  }
  throw std::invalid_argument("bad system kind");
}

}  // namespace symtrack
