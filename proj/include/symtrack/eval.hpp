#pragma once

#include <string>
#include <vector>

#include "symtrack/env.hpp"
#include "symtrack/ppo.hpp"
#include "symtrack/references.hpp"

namespace symtrack {

struct RolloutRecord {
  SystemKind system = SystemKind::kParticle;
  double dt = 0.02;
  std::vector<VecX> actual;     // flat physical states
  std::vector<VecX> reference;  // flat reference states (from the plan)
  std::vector<VecX> actions;    // lifted physical actions
  std::vector<double> rewards;

  int size() const { return static_cast<int>(actual.size()); }
};

// Deterministic zero-shot rollout: the policy mean (no exploration noise)
// observes the reduced state, actions are lifted, and the reference channel
// follows the plan. offset_key seeds the initial-state offset draw.
RolloutRecord rollout_on_plan(const GaussianPolicy& policy,
                              const ObsStats& stats, SystemKind system,
                              ReductionKind kind, const ReferencePlan& plan,
                              const SystemParams& params, const EnvConfig& cfg,
                              std::uint64_t offset_key);

struct ErrorSummary {
  double rms_r_cm = 0.0;
  double rms_v_cmps = 0.0;
  double rms_R_rad = 0.0;   // 0 for the particle
  double rms_w_radps = 0.0; // 0 for the particle
};

ErrorSummary rms_errors(const RolloutRecord& rec);

struct EvalResultRow {
  std::string env;
  std::string reduction;
  std::uint64_t seed = 0;
  int traj_id = 0;
  ErrorSummary metrics;
};

struct AggregateRow {
  std::string env;
  std::string reduction;
  int seeds = 0;
  int trajectories = 0;
  ErrorSummary mean;
  ErrorSummary stddev;  // sample std across seeds of the per-seed RMS
};

// Per-seed value = RMS over the trajectory set (root of the mean squared
// per-trajectory RMS); the table reports mean +/- sample std across seeds.
AggregateRow aggregate(const std::string& env, const std::string& reduction,
                       const std::vector<EvalResultRow>& rows);

void write_eval_results_csv(const std::vector<EvalResultRow>& rows,
                            const std::string& path);
void write_eval_table_csv(const std::vector<AggregateRow>& rows,
                          const std::string& path);

// Dispatchers over the per-system parameter variant.
std::vector<ReferencePlan> make_eval_plan_set(SystemKind kind, int count,
                                              std::uint64_t seed,
                                              double duration,
                                              const SystemParams& params);
ReplayReport replay_plan_any(const ReferencePlan& plan,
                             const SystemParams& params);

}  // namespace symtrack
