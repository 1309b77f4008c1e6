#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "symtrack/env.hpp"
#include "symtrack/mlp.hpp"
#include "symtrack/thread_pool.hpp"

namespace symtrack {

struct PpoConfig {
  double lr = 1e-3;
  double clip_eps = 0.2;
  int epochs = 10;
  int minibatches = 32;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int num_envs = 64;
  int rollout_len = 128;
  long total_steps = 500000;
  int hidden = 64;  // width of the two hidden layers
  double log_std_init = 0.0;
  bool anneal_lr = true;     // linear decay of lr over the run
  double target_kl = 0.02;   // stop an update when approx KL exceeds this (0 = off)
  double lr_scale = 1.0;     // set by train() when annealing
  int eval_every = 10;  // iterations between eval callbacks (0 = off)
};

// Running observation normalization; updated once per iteration from the
// whole rollout batch (a deterministic two-batch merge), frozen during
// rollouts and at evaluation.
struct ObsStats {
  VecX mean;
  VecX var;
  double count = 0.0;

  ObsStats() = default;
  explicit ObsStats(int dim) : mean(VecX::Zero(dim)), var(VecX::Ones(dim)) {}

  VecX normalize(const VecX& raw) const;
  MatX normalize_rows(const MatX& raw) const;
  void update(const MatX& raw_batch);
};

// Backward GAE recursion. `values` carries one extra trailing entry (the
// value of the state after the last step). Truncated steps bootstrap from
// `bootstrap_values` instead of the stored successor value and cut the
// advantage recursion.
void gae(const VecX& rewards, const VecX& values,
         const std::vector<std::uint8_t>& truncated,
         const VecX& bootstrap_values, double gamma, double lambda,
         VecX* advantages, VecX* returns);

// One iteration of experience, env-major: rows [e*T, (e+1)*T) belong to env
// e. Values/advantages are computed per env segment with last_values as the
// tail bootstrap.
struct TrajectoryBatch {
  int num_envs = 0;
  int horizon = 0;
  MatX obs;      // normalized observations as seen by the nets
  MatX obs_raw;  // raw observations for the normalizer update
  MatX actions;
  VecX rewards;
  VecX values;
  VecX log_probs;
  std::vector<std::uint8_t> truncated;
  VecX bootstrap;    // V(final obs) where truncated (0 when diverged)
  VecX last_values;  // per env, V(obs after the last step)
  VecX advantages;
  VecX returns;

  int size() const { return num_envs * horizon; }
};

void compute_advantages(TrajectoryBatch& batch, double gamma, double lambda);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;  // raw MSE, before the value_coef weighting
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  bool aborted = false;
};

// Clipped-surrogate update with epochs x minibatches, joint gradient-norm
// clipping and Adam. Advantages are normalized once over the whole batch.
// A non-finite loss or gradient aborts the update and restores the incoming
// parameters.
UpdateStats ppo_update(GaussianPolicy& policy, Mlp& critic,
                       TrajectoryBatch& batch, const PpoConfig& cfg,
                       AdamState& policy_adam, AdamState& critic_adam,
                       RngStream& shuffle_rng, ThreadPool& pool);

struct TrainLogRow {
  int iteration = 0;
  long global_step = 0;
  double mean_reward = 0.0;          // mean per-step reward over the batch
  double mean_episode_return = 0.0;  // mean return of episodes finished this iteration
  int episodes = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int diverged_episodes = 0;
};

struct TrainResult {
  GaussianPolicy policy;
  Mlp critic;
  ObsStats obs_stats;
  std::vector<TrainLogRow> log;
  long global_steps = 0;
  bool diverged = false;
};

using EnvFactory = std::function<std::unique_ptr<ReducedTrackingEnv>(
    int env_index, std::uint64_t rng_key)>;

// Invoked every eval_every iterations and once after the final iteration.
using EvalCallback = std::function<void(int iteration, long global_step,
                                        const GaussianPolicy& policy,
                                        const ObsStats& stats)>;

// Synchronized PPO over num_envs environments. Fully deterministic for a
// given (config, seed): every RNG stream is keyed by (seed, role, index) and
// worker threads only ever fill disjoint slots.
TrainResult train(const EnvFactory& factory, const PpoConfig& cfg,
                  std::uint64_t seed, int num_threads,
                  const EvalCallback& eval_callback = nullptr);

}  // namespace symtrack
