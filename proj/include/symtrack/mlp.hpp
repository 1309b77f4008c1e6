#pragma once

#include <Eigen/Core>
#include <vector>

#include "symtrack/rng.hpp"

namespace symtrack {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Fully connected net: tanh on hidden layers, linear output. Weights are
// (out x in); a batch is one sample per row.
struct Mlp {
  std::vector<int> dims;  // {in, hidden..., out}
  std::vector<MatX> weights;
  std::vector<VecX> biases;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

// Orthogonal-direction init scaled by `gain` per hidden layer and
// `head_gain` on the output layer; biases zero.
Mlp make_mlp(const std::vector<int>& dims, RngStream& rng, double gain,
             double head_gain);

// Layer inputs cached by the forward pass: acts[0] is the batch input,
// acts[i] the activation entering layer i, acts[L] the output.
struct MlpCache {
  std::vector<MatX> acts;
};

MatX mlp_forward(const Mlp& net, const MatX& batch, MlpCache* cache = nullptr);
VecX mlp_forward1(const Mlp& net, const VecX& input);

struct MlpGrads {
  std::vector<MatX> weights;
  std::vector<VecX> biases;
};

MlpGrads make_zero_grads(const Mlp& net);
void add_grads(MlpGrads& into, const MlpGrads& from);

// Backpropagates d(loss)/d(output) through the cached forward pass,
// accumulating into `grads`.
void mlp_backward(const Mlp& net, const MlpCache& cache, const MatX& d_output,
                  MlpGrads& grads);

// Diagonal Gaussian policy head: the net produces the mean, log_std is a
// free state-independent vector.
struct GaussianPolicy {
  Mlp net;
  VecX log_std;
};

double policy_log_prob(const VecX& mean, const VecX& log_std, const VecX& action);
VecX policy_sample(const VecX& mean, const VecX& log_std, RngStream& rng,
                   double* log_prob = nullptr);
double policy_entropy(const VecX& log_std);

// Batched log-probs (one row per sample).
VecX policy_log_prob_batch(const MatX& means, const VecX& log_std,
                           const MatX& actions);

// Flat-vector view over all tensors of a policy/value pair, in a fixed
// order; powers Adam, clipping, serialization and the determinism contract.
struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  VecX m;
  VecX v;
  long step = 0;
};

AdamState make_adam_state(int n_params);
void adam_update(VecX& params, const VecX& grad, AdamState& state,
                 const AdamConfig& cfg);

int param_count(const Mlp& net);
VecX flatten_params(const Mlp& net);
void unflatten_params(const VecX& flat, Mlp& net);
VecX flatten_grads(const MlpGrads& grads);

}  // namespace symtrack
