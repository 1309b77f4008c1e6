#include "symtrack/mlp.hpp"

#include <cmath>

#include "doctest.h"

using namespace symtrack;

namespace {

// Scalar loss L = sum of squared outputs / 2, used by the gradient checks.
double half_sq_loss(const Mlp& net, const MatX& x) {
  return 0.5 * mlp_forward(net, x).squaredNorm();
}

MlpGrads analytic_grads(const Mlp& net, const MatX& x) {
  MlpCache cache;
  MatX y = mlp_forward(net, x, &cache);
  MlpGrads g = make_zero_grads(net);
  mlp_backward(net, cache, y, g);  // dL/dy = y for L = ||y||^2/2
  return g;
}

Mlp random_net(const std::vector<int>& dims, RngStream& rng) {
  Mlp net = make_mlp(dims, rng, 1.0, 1.0);
  // break orthogonality so the check sees generic weights
  for (auto& w : net.weights)
    for (int i = 0; i < w.size(); ++i) w.data()[i] += 0.1 * rng.normal();
  for (auto& b : net.biases)
    for (int i = 0; i < b.size(); ++i) b[i] = 0.3 * rng.normal();
  return net;
}

}  // namespace

TEST_CASE("forward pass basics") {
  RngStream rng(61);
  Mlp zero = make_mlp({4, 8, 2}, rng, 1.0, 1.0);
  for (auto& w : zero.weights) w.setZero();
  MatX x = MatX::Random(5, 4);
  CHECK(mlp_forward(zero, x).norm() == 0.0);

  // single linear layer equals a plain matrix product
  Mlp lin = random_net({3, 2}, rng);
  MatX x2 = MatX::Random(7, 3);
  MatX expected = (x2 * lin.weights[0].transpose()).rowwise() +
                  lin.biases[0].transpose();
  CHECK((mlp_forward(lin, x2) - expected).norm() < 1e-14);

  // tanh keeps hidden activations bounded
  Mlp deep = random_net({3, 16, 16, 2}, rng);
  MlpCache cache;
  MatX huge = 1e6 * MatX::Random(4, 3);
  mlp_forward(deep, huge, &cache);
  CHECK(cache.acts[1].cwiseAbs().maxCoeff() <= 1.0);
  CHECK(cache.acts[2].cwiseAbs().maxCoeff() <= 1.0);

  // batched and single-sample paths agree
  VecX single = mlp_forward1(deep, huge.row(1).transpose());
  CHECK((single.transpose() - mlp_forward(deep, huge).row(1)).norm() < 1e-12);
}

TEST_CASE("backward pass against central finite differences") {
  RngStream rng(62);
  const double step = 1e-5;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> dims;
    switch (trial % 4) {
      case 0: dims = {3, 8, 2}; break;
      case 1: dims = {2, 16, 16, 1}; break;
      case 2: dims = {5, 4, 3}; break;
      default: dims = {1, 16, 16, 2}; break;
    }
    Mlp net = random_net(dims, rng);
    MatX x = MatX::Random(4, dims.front());
    MlpGrads g = analytic_grads(net, x);

    // probe a handful of parameters per net
    for (int probe = 0; probe < 6; ++probe) {
      int layer = static_cast<int>(rng.next_u64() % net.weights.size());
      bool bias = (rng.next_u64() & 1) != 0;
      double* ptr;
      double analytic;
      if (bias) {
        int i = static_cast<int>(rng.next_u64() % net.biases[layer].size());
        ptr = &net.biases[layer][i];
        analytic = g.biases[layer][i];
      } else {
        int i = static_cast<int>(rng.next_u64() % net.weights[layer].size());
        ptr = net.weights[layer].data() + i;
        analytic = g.weights[layer].data()[i];
      }
      double saved = *ptr;
      *ptr = saved + step;
      double up = half_sq_loss(net, x);
      *ptr = saved - step;
      double down = half_sq_loss(net, x);
      *ptr = saved;
      double numeric = (up - down) / (2.0 * step);
      double rel = std::abs(analytic - numeric) /
                   std::max(1.0, std::abs(numeric));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  CHECK(worst_rel <= 1e-4);
  MESSAGE("worst finite-difference relative error: ", worst_rel);
}

TEST_CASE("backward pass closed forms") {
  RngStream rng(63);
  Mlp lin = random_net({3, 2}, rng);
  MatX x = MatX::Random(6, 3);
  MatX y = MatX::Random(6, 2);

  // L = ||W x + b - y||^2 / 2: dW = (out - y)^T x, db = column sums
  MlpCache cache;
  MatX out = mlp_forward(lin, x, &cache);
  MlpGrads g = make_zero_grads(lin);
  mlp_backward(lin, cache, out - y, g);
  CHECK((g.weights[0] - (out - y).transpose() * x).norm() < 1e-12);
  CHECK((g.biases[0].transpose() - (out - y).colwise().sum()).norm() < 1e-12);

  // zero upstream gradient produces zero parameter gradients
  MlpGrads gz = make_zero_grads(lin);
  mlp_backward(lin, cache, MatX::Zero(6, 2), gz);
  CHECK(flatten_grads(gz).norm() == 0.0);
}

TEST_CASE("Gaussian policy log-probability and entropy") {
  VecX mean(2), log_std(2);
  mean << 0.5, -0.5;
  log_std << 0.0, 0.3;

  // at the mean the quadratic term vanishes
  double lp = policy_log_prob(mean, log_std, mean);
  CHECK(lp == doctest::Approx(-log_std.sum() - std::log(2.0 * M_PI)));

  // scalar case: sigma = 1, one-sigma offset
  VecX m1(1), s1(1), a1(1);
  m1 << 0.0;
  s1 << 0.0;
  a1 << 1.0;
  CHECK(policy_log_prob(m1, s1, a1) ==
        doctest::Approx(-0.5 - 0.5 * std::log(2.0 * M_PI)));

  // Monte-Carlo: E[-log p] matches the entropy
  RngStream rng(64);
  const int n = 100000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double lp_i = 0.0;
    policy_sample(mean, log_std, rng, &lp_i);
    acc += -lp_i;
    acc2 += lp_i * lp_i;
  }
  double mc = acc / n;
  double se = std::sqrt((acc2 / n - mc * mc) / n);
  CHECK(std::abs(mc - policy_entropy(log_std)) < 3.0 * se);

  // batched log-probs agree with the scalar path
  MatX means = MatX::Random(5, 2), actions = MatX::Random(5, 2);
  VecX batch = policy_log_prob_batch(means, log_std, actions);
  for (int i = 0; i < 5; ++i) {
    CHECK(batch[i] == doctest::Approx(policy_log_prob(
                          means.row(i), log_std, actions.row(i))));
  }
}

TEST_CASE("orthogonal init directions") {
  RngStream rng(65);
  Mlp net = make_mlp({8, 16, 4}, rng, std::sqrt(2.0), 0.01);
  // columns of the tall first layer are orthogonal with norm sqrt(2)
  MatX wtw = net.weights[0].transpose() * net.weights[0];
  CHECK((wtw - 2.0 * MatX::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(net.weights[1].cwiseAbs().maxCoeff() < 0.02);
  CHECK(flatten_params(net).size() == param_count(net));

  // flatten/unflatten round trip
  VecX flat = flatten_params(net);
  Mlp copy = net;
  for (auto& w : copy.weights) w.setZero();
  unflatten_params(flat, copy);
  CHECK((flatten_params(copy) - flat).norm() == 0.0);
}

TEST_CASE("Adam minimizes a quadratic") {
  VecX params(2);
  params << 5.0, -3.0;
  AdamState state = make_adam_state(2);
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    VecX grad = params;  // d/dx ||x||^2/2
    adam_update(params, grad, state, cfg);
  }
  CHECK(params.norm() < 1e-3);
}
