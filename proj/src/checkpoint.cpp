#include "symtrack/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace symtrack {

namespace {

void write_matrix(std::ostream& out, const std::string& name, const MatX& m) {
  out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
  char buf[32];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? " " : "");
    }
    out << "\n";
  }
}

MatX read_matrix(std::istream& in, const std::string& expected_name) {
  std::string tag, name;
  long rows = 0, cols = 0;
  in >> tag >> name >> rows >> cols;
  if (tag != "tensor" || name != expected_name) {
    throw std::runtime_error("checkpoint: expected tensor " + expected_name +
                             ", found " + tag + " " + name);
  }
  MatX m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) in >> m(i, j);
  if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
  return m;
}

void write_mlp(std::ostream& out, const std::string& prefix, const Mlp& net) {
  out << prefix << "_dims";
  for (int d : net.dims) out << " " << d;
  out << "\n";
  for (int l = 0; l < net.num_layers(); ++l) {
    write_matrix(out, prefix + "_w" + std::to_string(l), net.weights[l]);
    write_matrix(out, prefix + "_b" + std::to_string(l), net.biases[l]);
  }
}

Mlp read_mlp(std::istream& in, const std::string& prefix) {
  std::string tag;
  in >> tag;
  if (tag != prefix + "_dims") {
    throw std::runtime_error("checkpoint: expected " + prefix + "_dims");
  }
  std::string rest;
  std::getline(in, rest);
  std::istringstream dims_in(rest);
  Mlp net;
  int d = 0;
  while (dims_in >> d) net.dims.push_back(d);
  if (net.dims.size() < 2) throw std::runtime_error("checkpoint: bad dims");
  for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
    net.weights.push_back(read_matrix(in, prefix + "_w" + std::to_string(l)));
    net.biases.push_back(VecX(read_matrix(in, prefix + "_b" + std::to_string(l))));
  }
  return net;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "symtrack-checkpoint v1\n";
  out << "system " << system_name(ckpt.system) << "\n";
  out << "reduction " << reduction_name(ckpt.reduction) << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "config_hash " << (ckpt.config_hash.empty() ? "-" : ckpt.config_hash)
      << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.obs_stats.count);
  out << "obs_count " << buf << "\n";
  write_matrix(out, "obs_mean", ckpt.obs_stats.mean);
  write_matrix(out, "obs_var", ckpt.obs_stats.var);
  write_mlp(out, "policy", ckpt.policy.net);
  write_matrix(out, "log_std", ckpt.policy.log_std);
  write_mlp(out, "value", ckpt.critic);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "symtrack-checkpoint v1") {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  Checkpoint ckpt;
  std::string tag, value;
  in >> tag >> value;
  if (tag != "system") throw std::runtime_error("checkpoint: missing system");
  ckpt.system = system_from_name(value);
  in >> tag >> value;
  if (tag != "reduction") throw std::runtime_error("checkpoint: missing reduction");
  ckpt.reduction = reduction_from_name(value);
  in >> tag >> ckpt.seed;
  if (tag != "seed") throw std::runtime_error("checkpoint: missing seed");
  in >> tag >> value;
  if (tag != "config_hash") throw std::runtime_error("checkpoint: missing hash");
  ckpt.config_hash = value == "-" ? "" : value;
  in >> tag >> ckpt.obs_stats.count;
  if (tag != "obs_count") throw std::runtime_error("checkpoint: missing obs_count");
  ckpt.obs_stats.mean = VecX(read_matrix(in, "obs_mean"));
  ckpt.obs_stats.var = VecX(read_matrix(in, "obs_var"));
  ckpt.policy.net = read_mlp(in, "policy");
  ckpt.policy.log_std = VecX(read_matrix(in, "log_std"));
  ckpt.critic = read_mlp(in, "value");
  return ckpt;
}

std::string text_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace symtrack
