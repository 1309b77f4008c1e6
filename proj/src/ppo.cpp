#include "symtrack/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace symtrack {

int thread_count_from_env() {
  const char* raw = std::getenv("SYMTRACK_THREADS");
  if (raw != nullptr) {
    int n = std::atoi(raw);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

VecX ObsStats::normalize(const VecX& raw) const {
  VecX z = (raw - mean).array() / (var.array() + 1e-8).sqrt();
  return z.cwiseMax(-10.0).cwiseMin(10.0);
}

MatX ObsStats::normalize_rows(const MatX& raw) const {
  MatX z = (raw.rowwise() - mean.transpose()).array().rowwise() /
           (var.array() + 1e-8).sqrt().transpose();
  return z.cwiseMax(-10.0).cwiseMin(10.0);
}

void ObsStats::update(const MatX& raw_batch) {
  const double n = static_cast<double>(raw_batch.rows());
  if (n < 1.0) return;
  VecX batch_mean = raw_batch.colwise().mean();
  VecX batch_m2 = (raw_batch.rowwise() - batch_mean.transpose())
                      .array()
                      .square()
                      .colwise()
                      .sum();
  if (count == 0.0) {
    mean = batch_mean;
    var = batch_m2 / n;
    count = n;
    return;
  }
  double total = count + n;
  VecX delta = batch_mean - mean;
  VecX m2 = var * count + batch_m2 +
            delta.cwiseProduct(delta) * (count * n / total);
  mean += delta * (n / total);
  var = m2 / total;
  count = total;
}

void gae(const VecX& rewards, const VecX& values,
         const std::vector<std::uint8_t>& truncated,
         const VecX& bootstrap_values, double gamma, double lambda,
         VecX* advantages, VecX* returns) {
  const int t_len = static_cast<int>(rewards.size());
  advantages->resize(t_len);
  returns->resize(t_len);
  double carry = 0.0;
  for (int t = t_len - 1; t >= 0; --t) {
    double next_value = truncated[t] ? bootstrap_values[t] : values[t + 1];
    double delta = rewards[t] + gamma * next_value - values[t];
    carry = delta + gamma * lambda * (truncated[t] ? 0.0 : carry);
    (*advantages)[t] = carry;
    (*returns)[t] = carry + values[t];
  }
}

void compute_advantages(TrajectoryBatch& batch, double gamma, double lambda) {
  const int t_len = batch.horizon;
  batch.advantages.resize(batch.size());
  batch.returns.resize(batch.size());
  VecX seg_values(t_len + 1), adv, ret;
  std::vector<std::uint8_t> seg_trunc(t_len);
  for (int e = 0; e < batch.num_envs; ++e) {
    const int base = e * t_len;
    seg_values.head(t_len) = batch.values.segment(base, t_len);
    seg_values[t_len] = batch.last_values[e];
    std::copy(batch.truncated.begin() + base,
              batch.truncated.begin() + base + t_len, seg_trunc.begin());
    gae(batch.rewards.segment(base, t_len), seg_values, seg_trunc,
        batch.bootstrap.segment(base, t_len), gamma, lambda, &adv, &ret);
    batch.advantages.segment(base, t_len) = adv;
    batch.returns.segment(base, t_len) = ret;
  }
}

namespace {

// Fixed chunk count for intra-minibatch parallelism: the chunk structure (and
// with it every floating-point summation order) is independent of how many
// workers execute the chunks.
constexpr int kUpdateChunks = 8;

struct ChunkScratch {
  MlpGrads policy_grads;
  MlpGrads critic_grads;
  VecX log_std_grad;
  double loss_sum = 0.0;
  double policy_loss_sum = 0.0;
  double value_loss_sum = 0.0;
  double kl_sum = 0.0;
  int clipped = 0;
  int rows = 0;
};

struct FlatParams {
  VecX policy;  // net params followed by log_std
  VecX critic;
};

FlatParams snapshot(const GaussianPolicy& policy, const Mlp& critic) {
  FlatParams f;
  VecX net = flatten_params(policy.net);
  f.policy.resize(net.size() + policy.log_std.size());
  f.policy << net, policy.log_std;
  f.critic = flatten_params(critic);
  return f;
}

void restore(const FlatParams& f, GaussianPolicy& policy, Mlp& critic) {
  int net_size = param_count(policy.net);
  unflatten_params(f.policy.head(net_size), policy.net);
  policy.log_std = f.policy.tail(policy.log_std.size());
  unflatten_params(f.critic, critic);
}

}  // namespace

UpdateStats ppo_update(GaussianPolicy& policy, Mlp& critic,
                       TrajectoryBatch& batch, const PpoConfig& cfg,
                       AdamState& policy_adam, AdamState& critic_adam,
                       RngStream& shuffle_rng, ThreadPool& pool) {
  UpdateStats stats;
  const int n = batch.size();
  const int act_dim = static_cast<int>(batch.actions.cols());

  // Advantage normalization once per update, over the whole batch.
  {
    double m = batch.advantages.mean();
    batch.advantages.array() -= m;
    if (n > 1) {
      double sd = std::sqrt(batch.advantages.squaredNorm() / n);
      if (sd > 1e-12) batch.advantages /= sd;
    }
  }

  const FlatParams checkpoint = snapshot(policy, critic);
  const AdamState policy_adam_in = policy_adam;
  const AdamState critic_adam_in = critic_adam;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<ChunkScratch> scratch(kUpdateChunks);
  for (auto& s : scratch) {
    s.policy_grads = make_zero_grads(policy.net);
    s.critic_grads = make_zero_grads(critic);
    s.log_std_grad = VecX::Zero(act_dim);
  }

  double loss_accum = 0.0, policy_loss_accum = 0.0, value_loss_accum = 0.0;
  double kl_accum = 0.0;
  long clipped_accum = 0, rows_accum = 0, updates_done = 0;
  bool aborted = false;

  const int n_minibatches = std::max(1, std::min(cfg.minibatches, n));
  for (int epoch = 0; epoch < cfg.epochs && !aborted; ++epoch) {
    // Fisher-Yates with the dedicated shuffle stream.
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }
    for (int mb = 0; mb < n_minibatches && !aborted; ++mb) {
      const int lo = static_cast<int>(static_cast<long>(n) * mb / n_minibatches);
      const int hi =
          static_cast<int>(static_cast<long>(n) * (mb + 1) / n_minibatches);
      const int mb_size = hi - lo;
      if (mb_size == 0) continue;

      const VecX sigma = policy.log_std.array().exp();
      const VecX inv_sigma2 = (sigma.array() * sigma.array()).inverse();
      const double entropy = policy_entropy(policy.log_std);

      auto run_chunk = [&](int c) {
        ChunkScratch& sc = scratch[c];
        sc.loss_sum = sc.policy_loss_sum = sc.value_loss_sum = sc.kl_sum = 0.0;
        sc.clipped = 0;
        for (auto& w : sc.policy_grads.weights) w.setZero();
        for (auto& b : sc.policy_grads.biases) b.setZero();
        for (auto& w : sc.critic_grads.weights) w.setZero();
        for (auto& b : sc.critic_grads.biases) b.setZero();
        sc.log_std_grad.setZero();

        const int clo = lo + static_cast<int>(static_cast<long>(mb_size) * c /
                                              kUpdateChunks);
        const int chi = lo + static_cast<int>(static_cast<long>(mb_size) *
                                              (c + 1) / kUpdateChunks);
        sc.rows = chi - clo;
        if (sc.rows == 0) return;

        MatX obs(sc.rows, batch.obs.cols());
        MatX actions(sc.rows, act_dim);
        VecX old_logp(sc.rows), adv(sc.rows), ret(sc.rows);
        for (int r = 0; r < sc.rows; ++r) {
          int src = order[clo + r];
          obs.row(r) = batch.obs.row(src);
          actions.row(r) = batch.actions.row(src);
          old_logp[r] = batch.log_probs[src];
          adv[r] = batch.advantages[src];
          ret[r] = batch.returns[src];
        }

        MlpCache pcache, vcache;
        MatX means = mlp_forward(policy.net, obs, &pcache);
        VecX values = mlp_forward(critic, obs, &vcache).col(0);

        MatX z = (actions - means).array().rowwise() /
                 sigma.transpose().array();
        VecX new_logp = -0.5 * z.array().square().rowwise().sum();
        new_logp.array() += -policy.log_std.sum() -
                            0.5 * act_dim * std::log(2.0 * M_PI);

        MatX d_means(sc.rows, act_dim);
        for (int r = 0; r < sc.rows; ++r) {
          double logratio = new_logp[r] - old_logp[r];
          double ratio = std::exp(logratio);
          double a = adv[r];
          bool clipped_out =
              (a >= 0.0) ? (ratio > 1.0 + cfg.clip_eps)
                         : (ratio < 1.0 - cfg.clip_eps);
          double clipped_ratio =
              std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
          double surrogate = -std::min(ratio * a, clipped_ratio * a);
          sc.policy_loss_sum += surrogate;
          sc.kl_sum += (ratio - 1.0) - logratio;
          if (std::abs(ratio - 1.0) > cfg.clip_eps) ++sc.clipped;

          double coeff = clipped_out ? 0.0 : -a * ratio / mb_size;
          // d logp / d mean_j = z_j / sigma_j; d logp / d log_std_j = z_j^2 - 1
          d_means.row(r) =
              coeff * (z.row(r).array() / sigma.transpose().array());
          sc.log_std_grad.array() +=
              coeff * (z.row(r).array().square() - 1.0).transpose();

          double verr = values[r] - ret[r];
          sc.value_loss_sum += verr * verr;
        }
        sc.loss_sum = sc.policy_loss_sum +
                      cfg.value_coef * sc.value_loss_sum -
                      cfg.entropy_coef * entropy * sc.rows;

        mlp_backward(policy.net, pcache, d_means, sc.policy_grads);
        MatX d_values =
            (2.0 * cfg.value_coef / mb_size) * (values - ret).matrix();
        mlp_backward(critic, vcache, d_values, sc.critic_grads);
      };
      pool.parallel_for(kUpdateChunks, run_chunk);

      // Fixed-order reduction over chunks keeps results independent of the
      // worker count.
      MlpGrads policy_grads = make_zero_grads(policy.net);
      MlpGrads critic_grads = make_zero_grads(critic);
      VecX log_std_grad = VecX::Zero(act_dim);
      double mb_policy_loss = 0.0, mb_value_loss = 0.0, mb_kl = 0.0;
      long mb_clipped = 0;
      for (const auto& sc : scratch) {
        add_grads(policy_grads, sc.policy_grads);
        add_grads(critic_grads, sc.critic_grads);
        log_std_grad += sc.log_std_grad;
        mb_policy_loss += sc.policy_loss_sum;
        mb_value_loss += sc.value_loss_sum;
        mb_kl += sc.kl_sum;
        mb_clipped += sc.clipped;
      }
      log_std_grad.array() -= cfg.entropy_coef;  // d(-c_e * entropy)/d log_std

      VecX gp(param_count(policy.net) + act_dim);
      gp << flatten_grads(policy_grads), log_std_grad;
      VecX gv = flatten_grads(critic_grads);

      double mb_loss = mb_policy_loss / mb_size +
                       cfg.value_coef * mb_value_loss / mb_size -
                       cfg.entropy_coef * entropy;
      if (!std::isfinite(mb_loss) || !gp.allFinite() || !gv.allFinite()) {
        aborted = true;
        break;
      }

      double norm = std::sqrt(gp.squaredNorm() + gv.squaredNorm());
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        double scale = cfg.max_grad_norm / norm;
        gp *= scale;
        gv *= scale;
      }

      FlatParams flat = snapshot(policy, critic);
      AdamConfig adam_cfg;
      adam_cfg.lr = cfg.lr * cfg.lr_scale;
      adam_update(flat.policy, gp, policy_adam, adam_cfg);
      adam_update(flat.critic, gv, critic_adam, adam_cfg);
      restore(flat, policy, critic);

      loss_accum += mb_loss;
      policy_loss_accum += mb_policy_loss / mb_size;
      value_loss_accum += mb_value_loss / mb_size;
      kl_accum += mb_kl / mb_size;
      clipped_accum += mb_clipped;
      rows_accum += mb_size;
      ++updates_done;
      stats.entropy = entropy;
      if (cfg.target_kl > 0.0 && mb_kl / mb_size > cfg.target_kl) {
        epoch = cfg.epochs;  // cut the update short before it drifts further
        break;
      }
    }
  }

  if (aborted) {
    restore(checkpoint, policy, critic);
    policy_adam = policy_adam_in;
    critic_adam = critic_adam_in;
    stats.aborted = true;
    return stats;
  }

  const double n_updates = std::max<long>(1, updates_done);
  stats.policy_loss = policy_loss_accum / n_updates;
  stats.value_loss = value_loss_accum / n_updates;
  stats.approx_kl = kl_accum / n_updates;
  stats.clip_fraction =
      rows_accum > 0 ? static_cast<double>(clipped_accum) / rows_accum : 0.0;
  return stats;
}

namespace {

struct EnvSlot {
  std::unique_ptr<ReducedTrackingEnv> env;
  RngStream action_rng;
  VecX obs_raw;
  double episode_return = 0.0;
  std::vector<double> finished_returns;
  int diverged = 0;
};

}  // namespace

TrainResult train(const EnvFactory& factory, const PpoConfig& cfg,
                  std::uint64_t seed, int num_threads,
                  const EvalCallback& eval_callback) {
  TrainResult result;
  ThreadPool pool(num_threads);

  std::vector<EnvSlot> slots(cfg.num_envs);
  for (int e = 0; e < cfg.num_envs; ++e) {
    slots[e].env = factory(e, derive_key(seed, "env", e));
    slots[e].action_rng = RngStream(derive_key(seed, "action", e));
    slots[e].obs_raw = slots[e].env->reset();
  }
  const int obs_dim = slots[0].env->obs_dim();
  const int act_dim = slots[0].env->act_dim();

  RngStream init_rng(derive_key(seed, "init"));
  result.policy.net = make_mlp({obs_dim, cfg.hidden, cfg.hidden, act_dim},
                               init_rng, std::sqrt(2.0), 0.01);
  result.policy.log_std = VecX::Constant(act_dim, cfg.log_std_init);
  result.critic = make_mlp({obs_dim, cfg.hidden, cfg.hidden, 1}, init_rng,
                           std::sqrt(2.0), 1.0);
  result.obs_stats = ObsStats(obs_dim);

  AdamState policy_adam =
      make_adam_state(param_count(result.policy.net) + act_dim);
  AdamState critic_adam = make_adam_state(param_count(result.critic));
  RngStream shuffle_rng(derive_key(seed, "shuffle"));

  const int t_len = cfg.rollout_len;
  TrajectoryBatch batch;
  batch.num_envs = cfg.num_envs;
  batch.horizon = t_len;
  const int n = batch.size();
  batch.obs.resize(n, obs_dim);
  batch.obs_raw.resize(n, obs_dim);
  batch.actions.resize(n, act_dim);
  batch.rewards.resize(n);
  batch.values.resize(n);
  batch.log_probs.resize(n);
  batch.truncated.assign(n, 0);
  batch.bootstrap = VecX::Zero(n);
  batch.last_values.resize(cfg.num_envs);

  const long total_iterations =
      std::max<long>(1, (cfg.total_steps + n - 1) / n);
  PpoConfig iter_cfg = cfg;
  int iteration = 0;
  while (result.global_steps < cfg.total_steps && !result.diverged) {
    ++iteration;
    if (cfg.anneal_lr) {
      iter_cfg.lr_scale =
          1.0 - static_cast<double>(iteration - 1) / total_iterations;
    }

    auto rollout_env = [&](int e) {
      EnvSlot& slot = slots[e];
      slot.finished_returns.clear();
      slot.diverged = 0;
      for (int t = 0; t < t_len; ++t) {
        const int row = e * t_len + t;
        VecX obs_n = result.obs_stats.normalize(slot.obs_raw);
        batch.obs_raw.row(row) = slot.obs_raw;
        batch.obs.row(row) = obs_n;
        VecX mean = mlp_forward1(result.policy.net, obs_n);
        double logp = 0.0;
        VecX action =
            policy_sample(mean, result.policy.log_std, slot.action_rng, &logp);
        batch.actions.row(row) = action;
        batch.log_probs[row] = logp;
        batch.values[row] = mlp_forward1(result.critic, obs_n)[0];

        auto out = slot.env->step(action);
        batch.rewards[row] = out.reward;
        slot.episode_return += out.reward;
        if (out.done) {
          batch.truncated[row] = 1;
          batch.bootstrap[row] =
              out.diverged
                  ? 0.0
                  : mlp_forward1(result.critic,
                                 result.obs_stats.normalize(out.final_obs))[0];
          slot.finished_returns.push_back(slot.episode_return);
          slot.episode_return = 0.0;
          if (out.diverged) ++slot.diverged;
        } else {
          batch.truncated[row] = 0;
          batch.bootstrap[row] = 0.0;
        }
        slot.obs_raw = out.obs;
      }
      batch.last_values[e] = mlp_forward1(
          result.critic, result.obs_stats.normalize(slot.obs_raw))[0];
    };
    pool.parallel_for(cfg.num_envs, rollout_env);
    result.global_steps += n;

    compute_advantages(batch, cfg.gamma, cfg.gae_lambda);

    UpdateStats stats =
        ppo_update(result.policy, result.critic, batch, iter_cfg, policy_adam,
                   critic_adam, shuffle_rng, pool);

    TrainLogRow row;
    row.iteration = iteration;
    row.global_step = result.global_steps;
    row.mean_reward = batch.rewards.mean();
    double ep_sum = 0.0;
    int ep_count = 0, diverged_count = 0;
    for (const auto& slot : slots) {
      for (double r : slot.finished_returns) {
        ep_sum += r;
        ++ep_count;
      }
      diverged_count += slot.diverged;
    }
    row.mean_episode_return = ep_count > 0 ? ep_sum / ep_count : 0.0;
    row.episodes = ep_count;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    row.clip_fraction = stats.clip_fraction;
    row.approx_kl = stats.approx_kl;
    row.diverged_episodes = diverged_count;
    result.log.push_back(row);

    VecX flat = flatten_params(result.policy.net);
    if (stats.aborted || !flat.allFinite() ||
        !result.policy.log_std.allFinite()) {
      result.diverged = true;
    }

    // Normalizer update feeds the next iteration; this one saw frozen stats.
    result.obs_stats.update(batch.obs_raw);

    bool last = result.global_steps >= cfg.total_steps || result.diverged;
    if (eval_callback && cfg.eval_every > 0 &&
        (iteration % cfg.eval_every == 0 || last)) {
      eval_callback(iteration, result.global_steps, result.policy,
                    result.obs_stats);
    }
  }
  return result;
}

}  // namespace symtrack
