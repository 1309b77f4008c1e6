#include "symtrack/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace symtrack {

RolloutRecord rollout_on_plan(const GaussianPolicy& policy,
                              const ObsStats& stats, SystemKind system,
                              ReductionKind kind, const ReferencePlan& plan,
                              const SystemParams& params, const EnvConfig& cfg,
                              std::uint64_t offset_key) {
  if (plan.system != system) {
    throw std::invalid_argument("rollout_on_plan: plan/system mismatch");
  }
  auto env = make_env(system, kind, params, cfg, offset_key);
  env->set_plan(&plan);
  VecX obs_raw = env->reset();

  RolloutRecord rec;
  rec.system = system;
  rec.dt = plan.dt;
  for (int t = 0; t < plan.size(); ++t) {
    rec.actual.push_back(env->actual_state_flat());
    rec.reference.push_back(env->reference_state_flat());
    VecX mean = mlp_forward1(policy.net, stats.normalize(obs_raw));
    rec.actions.push_back(env->current_action_lifted(mean));
    auto out = env->step(mean);
    rec.rewards.push_back(out.reward);
    if (out.done) break;
    obs_raw = out.obs;
  }
  return rec;
}

ErrorSummary rms_errors(const RolloutRecord& rec) {
  if (rec.size() == 0) throw std::invalid_argument("rms_errors: empty record");
  double sum_r = 0.0, sum_v = 0.0, sum_rot = 0.0, sum_w = 0.0;
  const bool rigid = rec.system != SystemKind::kParticle;
  for (int t = 0; t < rec.size(); ++t) {
    if (rigid) {
      RigidState a = unflatten_rigid(rec.actual[t]);
      RigidState d = unflatten_rigid(rec.reference[t]);
      sum_r += (a.q.p - d.q.p).squaredNorm();
      sum_v += (a.xi.vel - d.xi.vel).squaredNorm();
      double ang = rot_distance(a.q.R, d.q.R);
      sum_rot += ang * ang;
      sum_w += (a.xi.omega - d.xi.omega).squaredNorm();
    } else {
      ParticleState a = unflatten_particle(rec.actual[t]);
      ParticleState d = unflatten_particle(rec.reference[t]);
      sum_r += (a.r - d.r).squaredNorm();
      sum_v += (a.v - d.v).squaredNorm();
    }
  }
  const double n = rec.size();
  ErrorSummary s;
  s.rms_r_cm = 100.0 * std::sqrt(sum_r / n);
  s.rms_v_cmps = 100.0 * std::sqrt(sum_v / n);
  s.rms_R_rad = std::sqrt(sum_rot / n);
  s.rms_w_radps = std::sqrt(sum_w / n);
  return s;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

AggregateRow aggregate(const std::string& env, const std::string& reduction,
                       const std::vector<EvalResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rows) {
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) {
      seeds.push_back(r.seed);
    }
  }

  std::vector<double> per_seed_r, per_seed_v, per_seed_rot, per_seed_w;
  int trajectories = 0;
  for (std::uint64_t seed : seeds) {
    double r2 = 0.0, v2 = 0.0, rot2 = 0.0, w2 = 0.0;
    int count = 0;
    for (const auto& row : rows) {
      if (row.seed != seed) continue;
      r2 += row.metrics.rms_r_cm * row.metrics.rms_r_cm;
      v2 += row.metrics.rms_v_cmps * row.metrics.rms_v_cmps;
      rot2 += row.metrics.rms_R_rad * row.metrics.rms_R_rad;
      w2 += row.metrics.rms_w_radps * row.metrics.rms_w_radps;
      ++count;
    }
    trajectories = std::max(trajectories, count);
    per_seed_r.push_back(std::sqrt(r2 / count));
    per_seed_v.push_back(std::sqrt(v2 / count));
    per_seed_rot.push_back(std::sqrt(rot2 / count));
    per_seed_w.push_back(std::sqrt(w2 / count));
  }

  AggregateRow out;
  out.env = env;
  out.reduction = reduction;
  out.seeds = static_cast<int>(seeds.size());
  out.trajectories = trajectories;
  out.mean = {mean_of(per_seed_r), mean_of(per_seed_v), mean_of(per_seed_rot),
              mean_of(per_seed_w)};
  out.stddev = {sample_std(per_seed_r), sample_std(per_seed_v),
                sample_std(per_seed_rot), sample_std(per_seed_w)};
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_eval_results_csv(const std::vector<EvalResultRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "env,reduction,seed,traj_id,rms_r_cm,rms_v_cmps,rms_R_rad,rms_w_radps\n";
  for (const auto& r : rows) {
    out << r.env << "," << r.reduction << "," << r.seed << "," << r.traj_id
        << "," << fmt17(r.metrics.rms_r_cm) << "," << fmt17(r.metrics.rms_v_cmps)
        << "," << fmt17(r.metrics.rms_R_rad) << ","
        << fmt17(r.metrics.rms_w_radps) << "\n";
  }
}

std::vector<ReferencePlan> make_eval_plan_set(SystemKind kind, int count,
                                              std::uint64_t seed,
                                              double duration,
                                              const SystemParams& params) {
  switch (kind) {
    case SystemKind::kParticle:
      return make_eval_plans(kind, count, seed, duration,
                             std::get<ParticleParams>(params));
    case SystemKind::kAstrobee:
      return make_eval_plans(kind, count, seed, duration,
                             std::get<RigidParams>(params));
    case SystemKind::kQuadrotor:
      return make_eval_plans(kind, count, seed, duration,
                             std::get<QuadrotorParams>(params));
  }
  throw std::invalid_argument("bad system kind");
}

ReplayReport replay_plan_any(const ReferencePlan& plan,
                             const SystemParams& params) {
  switch (plan.system) {
    case SystemKind::kParticle:
      return replay_plan(plan, std::get<ParticleParams>(params));
    case SystemKind::kAstrobee:
      return replay_plan(plan, std::get<RigidParams>(params));
    case SystemKind::kQuadrotor:
      return replay_plan(plan, std::get<QuadrotorParams>(params));
  }
  throw std::invalid_argument("bad system kind");
}

void write_eval_table_csv(const std::vector<AggregateRow>& rows,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "env,reduction,seeds,trajectories,"
         "rms_r_cm_mean,rms_r_cm_std,rms_v_cmps_mean,rms_v_cmps_std,"
         "rms_R_rad_mean,rms_R_rad_std,rms_w_radps_mean,rms_w_radps_std\n";
  for (const auto& r : rows) {
    out << r.env << "," << r.reduction << "," << r.seeds << ","
        << r.trajectories << "," << fmt17(r.mean.rms_r_cm) << ","
        << fmt17(r.stddev.rms_r_cm) << "," << fmt17(r.mean.rms_v_cmps) << ","
        << fmt17(r.stddev.rms_v_cmps) << "," << fmt17(r.mean.rms_R_rad) << ","
        << fmt17(r.stddev.rms_R_rad) << "," << fmt17(r.mean.rms_w_radps) << ","
        << fmt17(r.stddev.rms_w_radps) << "\n";
  }
}

}  // namespace symtrack
