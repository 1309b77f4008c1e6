// Command-line front end: train tracking policies, evaluate them zero-shot on
// planned trajectories, verify the symmetry/homomorphism properties, generate
// reference plans, and drive seed sweeps. Exit codes: 0 success, 1 check or
// plan failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "symtrack/checkpoint.hpp"
#include "symtrack/config.hpp"
#include "symtrack/eval.hpp"
#include "symtrack/logging.hpp"
#include "symtrack/ppo.hpp"

namespace fs = std::filesystem;
using namespace symtrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string env_name;
  std::string reduction_name;
  long seed = -1;
  long steps = -1;
  long samples = 1000;
};

RunOverrides to_overrides(const CommonFlags& f) {
  RunOverrides ov;
  if (!f.env_name.empty()) ov.env = f.env_name;
  if (!f.reduction_name.empty()) ov.reduction = f.reduction_name;
  if (f.seed >= 0) ov.seed = static_cast<std::uint64_t>(f.seed);
  if (f.steps >= 0) ov.steps = f.steps;
  if (!f.out_dir.empty()) ov.out_dir = f.out_dir;
  return ov;
}

EnvFactory make_factory(const RunConfig& rc) {
  return [rc](int, std::uint64_t key) {
    return make_env(rc.env, rc.reduction, rc.params, rc.env_cfg, key);
  };
}

ErrorSummary mean_metrics(const std::vector<ErrorSummary>& all) {
  ErrorSummary m;
  for (const auto& s : all) {
    m.rms_r_cm += s.rms_r_cm;
    m.rms_v_cmps += s.rms_v_cmps;
    m.rms_R_rad += s.rms_R_rad;
    m.rms_w_radps += s.rms_w_radps;
  }
  double n = std::max<size_t>(1, all.size());
  m.rms_r_cm /= n;
  m.rms_v_cmps /= n;
  m.rms_R_rad /= n;
  m.rms_w_radps /= n;
  return m;
}

// Trains one run and writes training_log.csv, eval_log.csv, checkpoint.txt
// and config_snapshot.ini into rc.out_dir.
int run_training(const RunConfig& rc, int threads) {
  fs::create_directories(rc.out_dir);
  std::string snapshot = config_snapshot(rc);
  write_text_file(snapshot, rc.out_dir + "/config_snapshot.ini");

  // small plan set for tracking-error-vs-step logging
  int n_track = std::min(3, rc.eval_trajectories);
  auto track_plans = make_eval_plan_set(rc.env, n_track, rc.eval_seed,
                                        rc.eval_duration, rc.params);
  std::vector<TrackingEvalRow> eval_rows;
  EvalCallback callback = [&](int iteration, long step,
                              const GaussianPolicy& policy,
                              const ObsStats& stats) {
    std::vector<ErrorSummary> metrics;
    double reward_sum = 0.0;
    long reward_n = 0;
    for (size_t i = 0; i < track_plans.size(); ++i) {
      RolloutRecord rec = rollout_on_plan(
          policy, stats, rc.env, rc.reduction, track_plans[i], rc.params,
          rc.env_cfg, derive_key(rc.eval_seed, "track-offset", i));
      metrics.push_back(rms_errors(rec));
      for (double r : rec.rewards) reward_sum += r;
      reward_n += rec.size();
    }
    TrackingEvalRow row;
    row.iteration = iteration;
    row.global_step = step;
    row.metrics = mean_metrics(metrics);
    row.mean_reward = reward_n > 0 ? reward_sum / reward_n : 0.0;
    eval_rows.push_back(row);
  };

  TrainResult result = train(make_factory(rc), rc.ppo, rc.seed, threads, callback);

  write_training_log_csv(result.log, rc.out_dir + "/training_log.csv");
  write_tracking_eval_csv(eval_rows, rc.out_dir + "/eval_log.csv");

  Checkpoint ckpt;
  ckpt.system = rc.env;
  ckpt.reduction = rc.reduction;
  ckpt.seed = rc.seed;
  ckpt.config_hash = text_hash(snapshot);
  ckpt.policy = result.policy;
  ckpt.critic = result.critic;
  ckpt.obs_stats = result.obs_stats;
  save_checkpoint(ckpt, rc.out_dir + "/checkpoint.txt");

  if (result.diverged) {
    std::cerr << "training diverged (non-finite parameters); artifacts written "
                 "to " << rc.out_dir << "\n";
    return kExitCheckFailed;
  }
  std::cout << "trained " << system_name(rc.env) << "/"
            << reduction_name(rc.reduction) << " seed " << rc.seed << " for "
            << result.global_steps << " steps -> " << rc.out_dir << "\n";
  return kExitOk;
}

std::vector<EvalResultRow> eval_checkpoint(
    const Checkpoint& ckpt, const RunConfig& rc,
    const std::vector<ReferencePlan>& plans) {
  std::vector<EvalResultRow> rows;
  for (size_t i = 0; i < plans.size(); ++i) {
    RolloutRecord rec = rollout_on_plan(
        ckpt.policy, ckpt.obs_stats, rc.env, ckpt.reduction, plans[i],
        rc.params, rc.env_cfg, derive_key(rc.eval_seed, "eval-offset", i));
    EvalResultRow row;
    row.env = system_name(rc.env);
    row.reduction = reduction_name(ckpt.reduction);
    row.seed = ckpt.seed;
    row.traj_id = static_cast<int>(i);
    row.metrics = rms_errors(rec);
    rows.push_back(row);
  }
  return rows;
}

int cmd_train(const CommonFlags& flags, int threads) {
  RunConfig rc = load_run_config(flags.config_path, to_overrides(flags));
  return run_training(rc, threads);
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path,
             const std::string& plans_dir) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  CommonFlags f = flags;
  if (f.env_name.empty()) f.env_name = system_name(ckpt.system);
  if (f.reduction_name.empty())
    f.reduction_name = reduction_name(ckpt.reduction);
  RunConfig rc = load_run_config(flags.config_path, to_overrides(f));

  if (rc.env != ckpt.system || rc.reduction != ckpt.reduction) {
    throw ConfigError("checkpoint was trained for " +
                      std::string(system_name(ckpt.system)) + "/" +
                      reduction_name(ckpt.reduction) +
                      " but the run requests " + system_name(rc.env) + "/" +
                      reduction_name(rc.reduction));
  }
  int expected = observation_dim(rc.env, rc.reduction);
  if (ckpt.policy.net.input_dim() != expected) {
    throw ConfigError("checkpoint architecture mismatch: policy input " +
                      std::to_string(ckpt.policy.net.input_dim()) +
                      " but the observation has dimension " +
                      std::to_string(expected));
  }

  std::vector<ReferencePlan> plans;
  if (!plans_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(plans_dir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) plans.push_back(read_plan_csv(file.string()));
    if (plans.empty()) {
      throw ConfigError("no plan CSV files found in " + plans_dir);
    }
    for (const auto& p : plans) {
      if (p.system != rc.env) {
        throw ConfigError("plan set contains a plan for a different system");
      }
    }
  } else {
    plans = make_eval_plan_set(rc.env, rc.eval_trajectories, rc.eval_seed,
                               rc.eval_duration, rc.params);
  }

  fs::create_directories(rc.out_dir);
  auto rows = eval_checkpoint(ckpt, rc, plans);
  write_eval_results_csv(rows, rc.out_dir + "/eval_results.csv");
  AggregateRow agg =
      aggregate(system_name(rc.env), reduction_name(ckpt.reduction), rows);
  write_eval_table_csv({agg}, rc.out_dir + "/eval_table.csv");
  std::printf(
      "evaluated %zu trajectories: rms_r %.3f cm, rms_v %.3f cm/s, rms_R "
      "%.4f rad, rms_w %.4f rad/s -> %s\n",
      plans.size(), agg.mean.rms_r_cm, agg.mean.rms_v_cmps, agg.mean.rms_R_rad,
      agg.mean.rms_w_radps, rc.out_dir.c_str());
  return kExitOk;
}

int cmd_verify(const CommonFlags& flags) {
  if (flags.env_name.empty() || flags.reduction_name.empty()) {
    throw ConfigError("verify requires --env and --reduction");
  }
  SystemKind env;
  ReductionKind reduction;
  try {
    env = system_from_name(flags.env_name);
    reduction = reduction_from_name(flags.reduction_name);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!reduction_valid_for_verify(env, reduction)) {
    throw ConfigError(std::string("reduction '") + flags.reduction_name +
                      "' cannot be verified for env '" + flags.env_name + "'");
  }

  SystemParams params = default_params(env);
  CostParams cost;
  if (!flags.config_path.empty()) {
    CommonFlags f = flags;
    f.reduction_name =
        reduction_valid(env, reduction) ? flags.reduction_name : "baseline";
    RunConfig rc = load_run_config(flags.config_path, to_overrides(f));
    params = rc.params;
    cost = rc.env_cfg.cost;
  }

  std::uint64_t seed = flags.seed >= 0 ? flags.seed : 1;
  SymmetryReport report = verify_symmetry(
      env, reduction, static_cast<int>(flags.samples), seed, params, cost);
  std::cout << format_verify_report(report);

  std::string out = flags.out_dir.empty() ? "." : flags.out_dir;
  fs::create_directories(out);
  write_verify_report_csv(report, out + "/verify_report.csv");
  return report.pass() ? kExitOk : kExitCheckFailed;
}

int cmd_plan(const CommonFlags& flags) {
  if (flags.config_path.empty()) {
    throw ConfigError("plan requires --config with a [plan] section");
  }
  ConfigFile file = ConfigFile::parse_file(flags.config_path);
  std::string sys_name = file.get_string("plan", "system", "");
  if (sys_name.empty()) throw ConfigError("field 'plan.system' is required");
  SystemKind system;
  try {
    system = system_from_name(sys_name);
  } catch (const std::exception&) {
    throw ConfigError("field 'plan.system' has invalid value '" + sys_name +
                      "'");
  }

  double duration = file.get_double("plan", "duration", 10.0);
  auto amplitude = file.get_doubles("plan", "amplitude", {1.0, 1.0, 1.0});
  auto freq = file.get_doubles("plan", "freq", {0.5, 0.5, 0.5});
  auto phase = file.get_doubles("plan", "phase", {0.0, M_PI_2, 0.0});
  if (amplitude.size() != 3 || freq.size() != 3 || phase.size() != 3) {
    throw ConfigError("fields 'plan.amplitude/freq/phase' need 3 entries");
  }
  LissajousSpec spec;
  for (int i = 0; i < 3; ++i) {
    spec.amplitude[i] = amplitude[i];
    spec.freq[i] = freq[i];
    spec.phase[i] = phase[i];
  }
  spec.duration = duration;
  spec.yaw_amplitude = file.get_double("plan", "yaw_amplitude", 0.0);
  spec.yaw_freq = file.get_double("plan", "yaw_freq", 0.0);
  spec.yaw_phase = file.get_double("plan", "yaw_phase", 0.0);

  // astrobee attitude curve
  auto rot_axis = file.get_doubles("plan", "rot_axis", {0.0, 0.0, 1.0});
  double rot_amplitude = file.get_double("plan", "rot_amplitude", 0.0);
  double rot_freq = file.get_double("plan", "rot_freq", 0.3);
  double rot_phase = file.get_double("plan", "rot_phase", 0.0);
  if (rot_axis.size() != 3) {
    throw ConfigError("field 'plan.rot_axis' needs 3 entries");
  }

  std::string out_path = file.get_string("plan", "out", "");
  file.reject_unknown();
  if (out_path.empty()) {
    out_path = (flags.out_dir.empty() ? "." : flags.out_dir) + "/" + sys_name +
               "_plan.csv";
  }

  SystemParams params = default_params(system);
  ReferencePlan plan;
  switch (system) {
    case SystemKind::kParticle: {
      const auto& p = std::get<ParticleParams>(params);
      int n = static_cast<int>(std::llround(duration / p.dt)) + 2;
      std::vector<Vec3> positions(n);
      for (int k = 0; k < n; ++k) {
        double t = k * p.dt;
        for (int i = 0; i < 3; ++i) {
          positions[k][i] =
              spec.amplitude[i] * std::sin(spec.freq[i] * t + spec.phase[i]);
        }
      }
      plan = plan_particle(positions, p.dt, p.m);
      break;
    }
    case SystemKind::kAstrobee: {
      const auto& p = std::get<RigidParams>(params);
      int n = static_cast<int>(std::llround(duration / p.dt)) + 2;
      Vec3 axis(rot_axis[0], rot_axis[1], rot_axis[2]);
      if (axis.norm() < 1e-12)
        throw ConfigError("field 'plan.rot_axis' is zero");
      axis.normalize();
      std::vector<Pose> poses(n);
      for (int k = 0; k < n; ++k) {
        double t = k * p.dt;
        for (int i = 0; i < 3; ++i) {
          poses[k].p[i] =
              spec.amplitude[i] * std::sin(spec.freq[i] * t + spec.phase[i]);
        }
        poses[k].R = exp_so3(
            axis * (rot_amplitude * std::sin(rot_freq * t + rot_phase)));
      }
      plan = plan_rigid(poses, p);
      break;
    }
    case SystemKind::kQuadrotor: {
      plan = plan_quadrotor_lissajous(spec, std::get<QuadrotorParams>(params));
      break;
    }
  }

  fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_plan_csv(plan, out_path);
  ReplayReport rep = replay_plan_any(plan, params);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "plan %s: %d steps, replay residuals: pos %.3e m, vel %.3e, "
                "rot %.3e rad, omega %.3e (drift/dt %.3e)\n",
                out_path.c_str(), plan.size(), rep.max_pos_error,
                rep.max_vel_error, rep.max_rot_error, rep.max_omega_error,
                rep.drift_per_dt);
  std::cout << buf;
  write_text_file(buf, out_path + ".feasibility.txt");

  double budget = system == SystemKind::kQuadrotor ? 0.05 : 1e-9;
  return rep.max_pos_error <= budget ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const CommonFlags& flags, const std::string& reductions_csv,
              long n_seeds, long first_seed, int threads) {
  if (flags.config_path.empty()) throw ConfigError("sweep requires --config");
  std::vector<std::string> reductions;
  {
    std::string tok;
    std::istringstream in(reductions_csv);
    while (std::getline(in, tok, ',')) {
      if (!tok.empty()) reductions.push_back(tok);
    }
  }
  if (reductions.empty()) throw ConfigError("sweep requires --reductions");
  if (n_seeds < 1) throw ConfigError("sweep requires --seeds >= 1");

  CommonFlags probe = flags;
  probe.reduction_name = reductions[0];
  RunConfig base = load_run_config(flags.config_path, to_overrides(probe));
  std::string sweep_dir = base.out_dir;
  fs::create_directories(sweep_dir);

  auto plans = make_eval_plan_set(base.env, base.eval_trajectories,
                                  base.eval_seed, base.eval_duration,
                                  base.params);

  std::vector<EvalResultRow> all_rows;
  std::vector<AggregateRow> table;
  for (const std::string& red : reductions) {
    std::vector<EvalResultRow> variant_rows;
    for (long s = 0; s < n_seeds; ++s) {
      CommonFlags f = flags;
      f.reduction_name = red;
      f.seed = first_seed + s;
      f.out_dir =
          sweep_dir + "/" + red + "_seed" + std::to_string(first_seed + s);
      RunConfig rc = load_run_config(flags.config_path, to_overrides(f));
      int code = run_training(rc, threads);
      if (code != kExitOk) return code;
      Checkpoint ckpt = load_checkpoint(rc.out_dir + "/checkpoint.txt");
      auto rows = eval_checkpoint(ckpt, rc, plans);
      write_eval_results_csv(rows, rc.out_dir + "/eval_results.csv");
      variant_rows.insert(variant_rows.end(), rows.begin(), rows.end());
    }
    table.push_back(aggregate(system_name(base.env), red, variant_rows));
    all_rows.insert(all_rows.end(), variant_rows.begin(), variant_rows.end());
  }
  write_eval_results_csv(all_rows, sweep_dir + "/eval_results.csv");
  write_eval_table_csv(table, sweep_dir + "/eval_table.csv");
  std::cout << "sweep complete -> " << sweep_dir << "/eval_table.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "symmetry-reduced tracking control: train, evaluate, verify, plan"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string checkpoint_path, plans_dir, reductions_csv;
  long n_seeds = 3, first_seed = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "config file path");
    cmd->add_option("--seed", flags.seed, "seed (overrides config)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--env", flags.env_name, "system name");
    cmd->add_option("--reduction", flags.reduction_name, "reduction name");
    cmd->add_option("--steps", flags.steps, "total training steps");
    cmd->add_option("--samples", flags.samples, "verification sample count");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a tracking policy");
  add_common(train_cmd);
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "zero-shot evaluation on planned trajectories");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--plans", plans_dir, "directory of plan CSVs");
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "randomized symmetry verification");
  add_common(verify_cmd);
  CLI::App* plan_cmd = app.add_subcommand("plan", "generate a reference plan");
  add_common(plan_cmd);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "train/eval across reductions and seeds");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--reductions", reductions_csv,
                        "comma-separated reduction list");
  sweep_cmd->add_option("--seeds", n_seeds, "number of seeds");
  sweep_cmd->add_option("--first-seed", first_seed, "first seed value");

  CLI11_PARSE(app, argc, argv);

  int threads = thread_count_from_env();
  try {
    if (app.got_subcommand(train_cmd)) return cmd_train(flags, threads);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(flags, checkpoint_path, plans_dir);
    if (app.got_subcommand(verify_cmd)) return cmd_verify(flags);
    if (app.got_subcommand(plan_cmd)) return cmd_plan(flags);
    if (app.got_subcommand(sweep_cmd))
      return cmd_sweep(flags, reductions_csv, n_seeds, first_seed, threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const PlanningError& e) {
    std::cerr << "planning failed at t=" << e.t << " s: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
