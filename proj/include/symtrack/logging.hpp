#pragma once

#include <string>
#include <vector>

#include "symtrack/eval.hpp"
#include "symtrack/ppo.hpp"

namespace symtrack {

void write_training_log_csv(const std::vector<TrainLogRow>& rows,
                            const std::string& path);

// Tracking error during training, one row per eval callback.
struct TrackingEvalRow {
  int iteration = 0;
  long global_step = 0;
  ErrorSummary metrics;
  double mean_reward = 0.0;
};

void write_tracking_eval_csv(const std::vector<TrackingEvalRow>& rows,
                             const std::string& path);

void write_text_file(const std::string& text, const std::string& path);
std::string read_text_file(const std::string& path);

}  // namespace symtrack
