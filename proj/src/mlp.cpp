#include "symtrack/mlp.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace symtrack {

namespace {

// Orthogonal rows/columns from a QR factorization of a Gaussian draw, with
// the sign convention fixed by R's diagonal.
MatX orthogonal_matrix(int rows, int cols, RngStream& rng) {
  int n = std::max(rows, cols);
  MatX a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<MatX> qr(a);
  MatX q = qr.householderQ();
  MatX r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q.topLeftCorner(rows, cols);
}

}  // namespace

Mlp make_mlp(const std::vector<int>& dims, RngStream& rng, double gain,
             double head_gain) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need >= 2 dims");
  Mlp net;
  net.dims = dims;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    bool head = (i + 2 == dims.size());
    double g = head ? head_gain : gain;
    net.weights.push_back(g * orthogonal_matrix(dims[i + 1], dims[i], rng));
    net.biases.push_back(VecX::Zero(dims[i + 1]));
  }
  return net;
}

MatX mlp_forward(const Mlp& net, const MatX& batch, MlpCache* cache) {
  if (batch.cols() != net.input_dim()) {
    throw std::invalid_argument("mlp_forward: input width mismatch");
  }
  if (cache != nullptr) {
    cache->acts.clear();
    cache->acts.reserve(net.num_layers() + 1);
    cache->acts.push_back(batch);
  }
  MatX h = batch;
  for (int l = 0; l < net.num_layers(); ++l) {
    h = (h * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    if (l + 1 < net.num_layers()) h = h.array().tanh();
    if (cache != nullptr) cache->acts.push_back(h);
  }
  return h;
}

VecX mlp_forward1(const Mlp& net, const VecX& input) {
  if (input.size() != net.input_dim()) {
    throw std::invalid_argument("mlp_forward1: input width mismatch");
  }
  VecX h = input;
  for (int l = 0; l < net.num_layers(); ++l) {
    h = net.weights[l] * h + net.biases[l];
    if (l + 1 < net.num_layers()) h = h.array().tanh();
  }
  return h;
}

MlpGrads make_zero_grads(const Mlp& net) {
  MlpGrads g;
  for (int l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(MatX::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(VecX::Zero(net.biases[l].size()));
  }
  return g;
}

void add_grads(MlpGrads& into, const MlpGrads& from) {
  for (size_t l = 0; l < into.weights.size(); ++l) {
    into.weights[l] += from.weights[l];
    into.biases[l] += from.biases[l];
  }
}

void mlp_backward(const Mlp& net, const MlpCache& cache, const MatX& d_output,
                  MlpGrads& grads) {
  const int layers = net.num_layers();
  MatX delta = d_output;
  for (int l = layers - 1; l >= 0; --l) {
    if (l + 1 < layers) {
      // tanh' through the cached activation of this layer's output
      delta = delta.array() * (1.0 - cache.acts[l + 1].array().square());
    }
    grads.weights[l].noalias() += delta.transpose() * cache.acts[l];
    grads.biases[l] += delta.colwise().sum();
    if (l > 0) {
      delta = (delta * net.weights[l]).eval();
    }
  }
}

double policy_log_prob(const VecX& mean, const VecX& log_std, const VecX& action) {
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    double sigma = std::exp(log_std[i]);
    double z = (action[i] - mean[i]) / sigma;
    lp += -0.5 * z * z - log_std[i] - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

VecX policy_sample(const VecX& mean, const VecX& log_std, RngStream& rng,
                   double* log_prob) {
  VecX a(mean.size());
  for (int i = 0; i < mean.size(); ++i) {
    a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  }
  if (log_prob != nullptr) *log_prob = policy_log_prob(mean, log_std, a);
  return a;
}

double policy_entropy(const VecX& log_std) {
  return log_std.sum() +
         0.5 * log_std.size() * (1.0 + std::log(2.0 * M_PI));
}

VecX policy_log_prob_batch(const MatX& means, const VecX& log_std,
                           const MatX& actions) {
  MatX z = (actions - means).array().rowwise() /
           log_std.array().exp().transpose();
  VecX lp = -0.5 * z.array().square().rowwise().sum();
  lp.array() +=
      -log_std.sum() - 0.5 * means.cols() * std::log(2.0 * M_PI);
  return lp;
}

AdamState make_adam_state(int n_params) {
  AdamState s;
  s.m = VecX::Zero(n_params);
  s.v = VecX::Zero(n_params);
  return s;
}

void adam_update(VecX& params, const VecX& grad, AdamState& state,
                 const AdamConfig& cfg) {
  state.step += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + cfg.eps);
}

int param_count(const Mlp& net) {
  int n = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    n += static_cast<int>(net.weights[l].size() + net.biases[l].size());
  }
  return n;
}

VecX flatten_params(const Mlp& net) {
  VecX flat(param_count(net));
  int at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    const MatX& w = net.weights[l];
    flat.segment(at, w.size()) = Eigen::Map<const VecX>(w.data(), w.size());
    at += static_cast<int>(w.size());
    flat.segment(at, net.biases[l].size()) = net.biases[l];
    at += static_cast<int>(net.biases[l].size());
  }
  return flat;
}

void unflatten_params(const VecX& flat, Mlp& net) {
  int at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    MatX& w = net.weights[l];
    Eigen::Map<VecX>(w.data(), w.size()) = flat.segment(at, w.size());
    at += static_cast<int>(w.size());
    net.biases[l] = flat.segment(at, net.biases[l].size());
    at += static_cast<int>(net.biases[l].size());
  }
  if (at != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

VecX flatten_grads(const MlpGrads& grads) {
  int n = 0;
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    n += static_cast<int>(grads.weights[l].size() + grads.biases[l].size());
  }
  VecX flat(n);
  int at = 0;
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    const MatX& w = grads.weights[l];
    flat.segment(at, w.size()) = Eigen::Map<const VecX>(w.data(), w.size());
    at += static_cast<int>(w.size());
    flat.segment(at, grads.biases[l].size()) = grads.biases[l];
    at += static_cast<int>(grads.biases[l].size());
  }
  return flat;
}

}  // namespace symtrack
