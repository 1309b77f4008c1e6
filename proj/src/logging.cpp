#include "symtrack/logging.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace symtrack {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_training_log_csv(const std::vector<TrainLogRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,global_step,mean_reward,mean_episode_return,episodes,"
         "policy_loss,value_loss,entropy,clip_fraction,approx_kl,"
         "diverged_episodes\n";
  for (const auto& r : rows) {
    out << r.iteration << "," << r.global_step << "," << fmt17(r.mean_reward)
        << "," << fmt17(r.mean_episode_return) << "," << r.episodes << ","
        << fmt17(r.policy_loss) << "," << fmt17(r.value_loss) << ","
        << fmt17(r.entropy) << "," << fmt17(r.clip_fraction) << ","
        << fmt17(r.approx_kl) << "," << r.diverged_episodes << "\n";
  }
}

void write_tracking_eval_csv(const std::vector<TrackingEvalRow>& rows,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,global_step,rms_r_cm,rms_v_cmps,rms_R_rad,rms_w_radps,"
         "mean_reward\n";
  for (const auto& r : rows) {
    out << r.iteration << "," << r.global_step << ","
        << fmt17(r.metrics.rms_r_cm) << "," << fmt17(r.metrics.rms_v_cmps)
        << "," << fmt17(r.metrics.rms_R_rad) << ","
        << fmt17(r.metrics.rms_w_radps) << "," << fmt17(r.mean_reward) << "\n";
  }
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace symtrack
