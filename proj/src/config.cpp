#include "symtrack/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace symtrack {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text,
                                  const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(s.substr(1, s.size() - 2));
      cfg.sections_[section];
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    auto& sec = cfg.sections_[section];
    if (sec.count(key) != 0) {
      throw ConfigError(origin + ": duplicate key '" + section + "." + key + "'");
    }
    sec[key] = Entry{value};
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto sit = sections_.find(section);
  return sit != sections_.end() && sit->second.count(key) != 0;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key,
                                   const std::string& fallback) {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return fallback;
  auto it = sit->second.find(key);
  if (it == sit->second.end()) return fallback;
  it->second.consumed = true;
  return it->second.value;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(raw, &used);
    if (trim(raw.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(origin_ + ": field '" + section + "." + key +
                    "' is not a number: '" + raw + "'");
}

long ConfigFile::get_long(const std::string& section, const std::string& key,
                          long fallback) {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  try {
    size_t used = 0;
    long v = std::stol(raw, &used);
    if (trim(raw.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(origin_ + ": field '" + section + "." + key +
                    "' is not an integer: '" + raw + "'");
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key,
                                            const std::vector<double>& fallback) {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  std::istringstream in(raw);
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) {
    throw ConfigError(origin_ + ": field '" + section + "." + key +
                      "' is not a number list: '" + raw + "'");
  }
  return out;
}

void ConfigFile::reject_unknown() const {
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!entry.consumed) {
        throw ConfigError(origin_ + ": unknown field '" + section + "." + key + "'");
      }
    }
  }
}

namespace {

// Zero-mean references for the fully actuated systems; hover-centered rotor
// thrusts for the quadrotor so references do not free-fall.
VecX default_ref_mean(SystemKind env, const SystemParams& params) {
  if (env == SystemKind::kQuadrotor) {
    const auto& qp = std::get<QuadrotorParams>(params);
    return VecX::Constant(4, qp.rigid.m * qp.gravity / 4.0);
  }
  return VecX::Zero(action_dim(env));
}

VecX default_ref_sigma(SystemKind env) {
  switch (env) {
    case SystemKind::kParticle:
      return VecX::Constant(3, 0.5);
    case SystemKind::kAstrobee: {
      VecX sigma(6);
      sigma << 0.05, 0.05, 0.05, 1.0, 1.0, 1.0;  // (mu, f)
      return sigma;
    }
    case SystemKind::kQuadrotor:
      return VecX::Constant(4, 0.03);
  }
  throw ConfigError("bad system kind");
}

RefActionDist default_ref_dist(SystemKind env, const SystemParams& params) {
  VecX sigma = default_ref_sigma(env);
  return RefActionDist::diagonal(default_ref_mean(env, params),
                                 sigma.cwiseProduct(sigma));
}

}  // namespace

RunConfig default_run_config(SystemKind env, ReductionKind reduction) {
  RunConfig cfg;
  cfg.env = env;
  cfg.reduction = reduction;
  cfg.params = default_params(env);
  if (env == SystemKind::kQuadrotor) cfg.env_cfg.reset.pos_range = 0.5;
  cfg.env_cfg.ref_dist = default_ref_dist(env, cfg.params);
  return cfg;
}

RunConfig load_run_config(const std::string& path, const RunOverrides& ov) {
  ConfigFile file = path.empty()
                        ? ConfigFile::parse_text("", "<defaults>")
                        : ConfigFile::parse_file(path);

  std::string env_name = file.get_string("run", "env", "");
  if (ov.env) env_name = *ov.env;
  if (env_name.empty()) {
    throw ConfigError("field 'run.env' is required (particle|astrobee|quadrotor)");
  }
  SystemKind env;
  try {
    env = system_from_name(env_name);
  } catch (const std::exception&) {
    throw ConfigError("field 'run.env' has invalid value '" + env_name + "'");
  }

  std::string red_name = file.get_string("run", "reduction", "baseline");
  if (ov.reduction) red_name = *ov.reduction;
  ReductionKind reduction;
  try {
    reduction = reduction_from_name(red_name);
  } catch (const std::exception&) {
    throw ConfigError("field 'run.reduction' has invalid value '" + red_name + "'");
  }
  if (!reduction_valid(env, reduction)) {
    throw ConfigError("fields 'run.env' and 'run.reduction' are incompatible: "
                      "reduction '" + red_name + "' is not defined for env '" +
                      env_name + "'");
  }

  RunConfig cfg = default_run_config(env, reduction);
  cfg.seed = static_cast<std::uint64_t>(file.get_long("run", "seed", 1));
  if (ov.seed) cfg.seed = *ov.seed;
  cfg.ppo.total_steps = file.get_long("run", "steps", cfg.ppo.total_steps);
  if (ov.steps) cfg.ppo.total_steps = *ov.steps;
  cfg.out_dir = file.get_string("run", "out", cfg.out_dir);
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;

  // [system]
  double dt = file.get_double("system", "dt", 0.02);
  if (dt <= 0.0) throw ConfigError("field 'system.dt' must be > 0");
  switch (env) {
    case SystemKind::kParticle: {
      ParticleParams p;
      p.dt = dt;
      p.m = file.get_double("system", "mass", p.m);
      if (p.m <= 0.0) throw ConfigError("field 'system.mass' must be > 0");
      cfg.params = p;
      break;
    }
    case SystemKind::kAstrobee: {
      RigidParams p;
      p.dt = dt;
      p.m = file.get_double("system", "mass", p.m);
      auto inertia = file.get_doubles(
          "system", "inertia", {p.inertia(0, 0), p.inertia(1, 1), p.inertia(2, 2)});
      if (inertia.size() != 3) {
        throw ConfigError("field 'system.inertia' needs 3 diagonal entries");
      }
      p.inertia = Vec3(inertia[0], inertia[1], inertia[2]).asDiagonal();
      if (p.m <= 0.0 || inertia[0] <= 0.0 || inertia[1] <= 0.0 || inertia[2] <= 0.0) {
        throw ConfigError("fields 'system.mass'/'system.inertia' must be > 0");
      }
      cfg.params = p;
      break;
    }
    case SystemKind::kQuadrotor: {
      QuadrotorParams p;
      p.rigid.dt = dt;
      p.rigid.m = file.get_double("system", "mass", p.rigid.m);
      auto inertia = file.get_doubles("system", "inertia",
                                      {p.rigid.inertia(0, 0), p.rigid.inertia(1, 1),
                                       p.rigid.inertia(2, 2)});
      if (inertia.size() != 3) {
        throw ConfigError("field 'system.inertia' needs 3 diagonal entries");
      }
      p.rigid.inertia = Vec3(inertia[0], inertia[1], inertia[2]).asDiagonal();
      p.arm = file.get_double("system", "arm", p.arm);
      p.drag_coeff = file.get_double("system", "drag_coeff", p.drag_coeff);
      p.gravity = file.get_double("system", "gravity", p.gravity);
      if (p.rigid.m <= 0.0 || p.arm <= 0.0 || p.drag_coeff <= 0.0 || p.gravity < 0.0) {
        throw ConfigError("fields in 'system' must be positive (gravity >= 0)");
      }
      cfg.params = p;
      break;
    }
  }

  // [mdp]
  cfg.env_cfg.gamma = file.get_double("mdp", "gamma", cfg.env_cfg.gamma);
  if (cfg.env_cfg.gamma < 0.0 || cfg.env_cfg.gamma >= 1.0) {
    throw ConfigError("field 'mdp.gamma' must be in [0, 1)");
  }
  cfg.env_cfg.episode_length = static_cast<int>(
      file.get_long("mdp", "episode_length", cfg.env_cfg.episode_length));
  if (cfg.env_cfg.episode_length < 1) {
    throw ConfigError("field 'mdp.episode_length' must be >= 1");
  }

  // [cost]
  CostParams& c = cfg.env_cfg.cost;
  c.c_r = file.get_double("cost", "c_r", c.c_r);
  c.a_r = file.get_double("cost", "a_r", c.a_r);
  c.c_v = file.get_double("cost", "c_v", c.c_v);
  c.c_u = file.get_double("cost", "c_u", c.c_u);
  c.c_R = file.get_double("cost", "c_R", c.c_R);
  c.c_xi = file.get_double("cost", "c_xi", c.c_xi);
  if (c.c_r < 0 || c.a_r < 0 || c.c_v < 0 || c.c_u < 0 || c.c_R < 0 || c.c_xi < 0) {
    throw ConfigError("fields in 'cost' must be >= 0");
  }

  // [reset]
  ResetSpec& rs = cfg.env_cfg.reset;
  rs.pos_range = file.get_double("reset", "pos_range", rs.pos_range);
  rs.vel_range = file.get_double("reset", "vel_range", rs.vel_range);
  rs.rot_angle_max = file.get_double("reset", "rot_angle_max", rs.rot_angle_max);
  if (rs.pos_range < 0 || rs.vel_range < 0 || rs.rot_angle_max < 0) {
    throw ConfigError("fields in 'reset' must be >= 0");
  }

  // [refdist]
  {
    const int adim = action_dim(env);
    VecX def_mean = default_ref_mean(env, cfg.params);
    VecX def_sigma = default_ref_sigma(env);
    std::vector<double> def_mean_v(def_mean.data(), def_mean.data() + adim);
    std::vector<double> def_sigma_v(def_sigma.data(), def_sigma.data() + adim);
    auto mean = file.get_doubles("refdist", "mean", def_mean_v);
    auto stdv = file.get_doubles("refdist", "std", def_sigma_v);
    if (static_cast<int>(mean.size()) != adim) {
      throw ConfigError("field 'refdist.mean' needs " + std::to_string(adim) +
                        " entries");
    }
    if (static_cast<int>(stdv.size()) != adim) {
      throw ConfigError("field 'refdist.std' needs " + std::to_string(adim) +
                        " entries");
    }
    VecX m(adim), sigma(adim);
    for (int i = 0; i < adim; ++i) {
      if (stdv[i] <= 0.0) throw ConfigError("field 'refdist.std' must be > 0");
      m[i] = mean[i];
      sigma[i] = stdv[i];
    }
    cfg.env_cfg.ref_dist = RefActionDist::diagonal(m, sigma.cwiseProduct(sigma));
  }

  // [ppo]
  PpoConfig& p = cfg.ppo;
  p.lr = file.get_double("ppo", "lr", p.lr);
  p.clip_eps = file.get_double("ppo", "clip_eps", p.clip_eps);
  p.epochs = static_cast<int>(file.get_long("ppo", "epochs", p.epochs));
  p.minibatches = static_cast<int>(file.get_long("ppo", "minibatches", p.minibatches));
  p.gae_lambda = file.get_double("ppo", "gae_lambda", p.gae_lambda);
  p.entropy_coef = file.get_double("ppo", "entropy_coef", p.entropy_coef);
  p.value_coef = file.get_double("ppo", "value_coef", p.value_coef);
  p.max_grad_norm = file.get_double("ppo", "max_grad_norm", p.max_grad_norm);
  p.num_envs = static_cast<int>(file.get_long("ppo", "num_envs", p.num_envs));
  p.rollout_len = static_cast<int>(file.get_long("ppo", "rollout_len", p.rollout_len));
  p.hidden = static_cast<int>(file.get_long("ppo", "hidden", p.hidden));
  p.log_std_init = file.get_double("ppo", "log_std_init", p.log_std_init);
  p.anneal_lr = file.get_long("ppo", "anneal_lr", p.anneal_lr ? 1 : 0) != 0;
  p.target_kl = file.get_double("ppo", "target_kl", p.target_kl);
  p.eval_every = static_cast<int>(file.get_long("ppo", "eval_every", p.eval_every));
  p.gamma = cfg.env_cfg.gamma;
  if (p.clip_eps <= 0.0) throw ConfigError("field 'ppo.clip_eps' must be > 0");
  if (p.gae_lambda < 0.0 || p.gae_lambda > 1.0) {
    throw ConfigError("field 'ppo.gae_lambda' must be in [0, 1]");
  }
  if (p.epochs < 1 || p.minibatches < 1 || p.num_envs < 1 || p.rollout_len < 1 ||
      p.hidden < 1) {
    throw ConfigError("fields in 'ppo' must be >= 1");
  }
  if (p.total_steps < 1) throw ConfigError("field 'run.steps' must be >= 1");

  // [eval]
  cfg.eval_trajectories = static_cast<int>(
      file.get_long("eval", "trajectories", cfg.eval_trajectories));
  cfg.eval_duration = file.get_double("eval", "duration", cfg.eval_duration);
  cfg.eval_seed =
      static_cast<std::uint64_t>(file.get_long("eval", "seed", cfg.eval_seed));
  if (cfg.eval_trajectories < 1 || cfg.eval_duration <= 0.0) {
    throw ConfigError("fields in 'eval' must be positive");
  }

  file.reject_unknown();
  return cfg;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(const VecX& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += " ";
    out += fmt17(v[i]);
  }
  return out;
}

}  // namespace

std::string config_snapshot(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "env = " << system_name(cfg.env) << "\n";
  out << "reduction = " << reduction_name(cfg.reduction) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "steps = " << cfg.ppo.total_steps << "\n";
  out << "out = " << cfg.out_dir << "\n";
  out << "[system]\n";
  switch (cfg.env) {
    case SystemKind::kParticle: {
      const auto& p = std::get<ParticleParams>(cfg.params);
      out << "mass = " << fmt17(p.m) << "\n";
      out << "dt = " << fmt17(p.dt) << "\n";
      break;
    }
    case SystemKind::kAstrobee: {
      const auto& p = std::get<RigidParams>(cfg.params);
      out << "mass = " << fmt17(p.m) << "\n";
      out << "dt = " << fmt17(p.dt) << "\n";
      out << "inertia = " << fmt17(p.inertia(0, 0)) << " "
          << fmt17(p.inertia(1, 1)) << " " << fmt17(p.inertia(2, 2)) << "\n";
      break;
    }
    case SystemKind::kQuadrotor: {
      const auto& p = std::get<QuadrotorParams>(cfg.params);
      out << "mass = " << fmt17(p.rigid.m) << "\n";
      out << "dt = " << fmt17(p.rigid.dt) << "\n";
      out << "inertia = " << fmt17(p.rigid.inertia(0, 0)) << " "
          << fmt17(p.rigid.inertia(1, 1)) << " " << fmt17(p.rigid.inertia(2, 2))
          << "\n";
      out << "arm = " << fmt17(p.arm) << "\n";
      out << "drag_coeff = " << fmt17(p.drag_coeff) << "\n";
      out << "gravity = " << fmt17(p.gravity) << "\n";
      break;
    }
  }
  out << "[mdp]\n";
  out << "gamma = " << fmt17(cfg.env_cfg.gamma) << "\n";
  out << "episode_length = " << cfg.env_cfg.episode_length << "\n";
  const CostParams& c = cfg.env_cfg.cost;
  out << "[cost]\n";
  out << "c_r = " << fmt17(c.c_r) << "\n";
  out << "a_r = " << fmt17(c.a_r) << "\n";
  out << "c_v = " << fmt17(c.c_v) << "\n";
  out << "c_u = " << fmt17(c.c_u) << "\n";
  out << "c_R = " << fmt17(c.c_R) << "\n";
  out << "c_xi = " << fmt17(c.c_xi) << "\n";
  const ResetSpec& rs = cfg.env_cfg.reset;
  out << "[reset]\n";
  out << "pos_range = " << fmt17(rs.pos_range) << "\n";
  out << "vel_range = " << fmt17(rs.vel_range) << "\n";
  out << "rot_angle_max = " << fmt17(rs.rot_angle_max) << "\n";
  out << "[refdist]\n";
  out << "mean = " << join(cfg.env_cfg.ref_dist.mean()) << "\n";
  out << "std = " << join(cfg.env_cfg.ref_dist.sigma_diagonal()) << "\n";
  const PpoConfig& p = cfg.ppo;
  out << "[ppo]\n";
  out << "lr = " << fmt17(p.lr) << "\n";
  out << "clip_eps = " << fmt17(p.clip_eps) << "\n";
  out << "epochs = " << p.epochs << "\n";
  out << "minibatches = " << p.minibatches << "\n";
  out << "gae_lambda = " << fmt17(p.gae_lambda) << "\n";
  out << "entropy_coef = " << fmt17(p.entropy_coef) << "\n";
  out << "value_coef = " << fmt17(p.value_coef) << "\n";
  out << "max_grad_norm = " << fmt17(p.max_grad_norm) << "\n";
  out << "num_envs = " << p.num_envs << "\n";
  out << "rollout_len = " << p.rollout_len << "\n";
  out << "hidden = " << p.hidden << "\n";
  out << "log_std_init = " << fmt17(p.log_std_init) << "\n";
  out << "anneal_lr = " << (p.anneal_lr ? 1 : 0) << "\n";
  out << "target_kl = " << fmt17(p.target_kl) << "\n";
  out << "eval_every = " << p.eval_every << "\n";
  out << "[eval]\n";
  out << "trajectories = " << cfg.eval_trajectories << "\n";
  out << "duration = " << fmt17(cfg.eval_duration) << "\n";
  out << "seed = " << cfg.eval_seed << "\n";
  return out.str();
}

}  // namespace symtrack
