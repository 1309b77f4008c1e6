#pragma once

#include <string>

#include "symtrack/mlp.hpp"
#include "symtrack/ppo.hpp"
#include "symtrack/symmetry.hpp"

namespace symtrack {

// Portable text checkpoint: architecture dims, flat parameter arrays at 17
// significant digits, observation-normalization statistics and the config
// hash of the run that produced it.
struct Checkpoint {
  SystemKind system = SystemKind::kParticle;
  ReductionKind reduction = ReductionKind::kBaseline;
  std::uint64_t seed = 0;
  std::string config_hash;
  GaussianPolicy policy;
  Mlp critic;
  ObsStats obs_stats;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a hash of a text blob, hex-encoded; used as the config hash.
std::string text_hash(const std::string& text);

}  // namespace symtrack
