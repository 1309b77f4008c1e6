#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symtrack/ppo.hpp"
#include "symtrack/symmetry.hpp"

namespace symtrack {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key-value sections, parsed strictly: every key must be consumed by the
// schema or loading fails naming the offending "section.key".
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  long get_long(const std::string& section, const std::string& key, long fallback);
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key,
                                  const std::vector<double>& fallback);

  // Throws ConfigError listing any key never consumed by a getter.
  void reject_unknown() const;

 private:
  struct Entry {
    std::string value;
    mutable bool consumed = false;
  };
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

struct RunConfig {
  SystemKind env = SystemKind::kParticle;
  ReductionKind reduction = ReductionKind::kBaseline;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/run";
  SystemParams params;
  EnvConfig env_cfg;
  PpoConfig ppo;
  int eval_trajectories = 20;
  double eval_duration = 10.0;
  std::uint64_t eval_seed = 9000;
};

struct RunOverrides {
  std::optional<std::string> env;
  std::optional<std::string> reduction;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<std::string> out_dir;
};

// Loads, applies overrides, validates (including the env/reduction pairing)
// and fills per-system defaults for anything unset.
RunConfig load_run_config(const std::string& path, const RunOverrides& overrides);
RunConfig default_run_config(SystemKind env, ReductionKind reduction);

// Canonical resolved-config text; its hash identifies the run and the
// snapshot alone is sufficient to reproduce it.
std::string config_snapshot(const RunConfig& cfg);

}  // namespace symtrack
