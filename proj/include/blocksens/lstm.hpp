// SPDX-License-Identifier: Apache-2.0
//
// Single-layer LSTM over scalar +-1 inputs with an affine readout of the final
// hidden state, in double precision.
//
//   z_t = W h_{t-1} + u x_t + b          (gate rows: input, forget, cell, output)
//   c_t = sigma(f) * c_{t-1} + sigma(i) * tanh(g)
//   h_t = sigma(o) * tanh(c_t)
//   y   = v . h_n + a
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace blocksens::rnn {

enum class InitMode { kUniform, kGaussian };

const char* to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

/// All weights live in one flat vector so optimizers can treat them alike.
class LstmParams {
 public:
  explicit LstmParams(int hidden = 1);

  int hidden() const { return d_; }
  static Eigen::Index count(int hidden) {
    const Eigen::Index d = hidden;
    return 4 * d * d + 4 * d + 4 * d + d + 1;
  }

  Eigen::VectorXd& flat() { return theta_; }
  const Eigen::VectorXd& flat() const { return theta_; }

  Eigen::Map<Eigen::MatrixXd> W() { return {theta_.data(), 4 * d_, d_}; }
  Eigen::Map<const Eigen::MatrixXd> W() const { return {theta_.data(), 4 * d_, d_}; }
  Eigen::Map<Eigen::VectorXd> u() { return {theta_.data() + off_u(), 4 * d_}; }
  Eigen::Map<const Eigen::VectorXd> u() const { return {theta_.data() + off_u(), 4 * d_}; }
  Eigen::Map<Eigen::VectorXd> b() { return {theta_.data() + off_b(), 4 * d_}; }
  Eigen::Map<const Eigen::VectorXd> b() const { return {theta_.data() + off_b(), 4 * d_}; }
  Eigen::Map<Eigen::VectorXd> v() { return {theta_.data() + off_v(), d_}; }
  Eigen::Map<const Eigen::VectorXd> v() const { return {theta_.data() + off_v(), d_}; }
  double& a() { return theta_[off_a()]; }
  double a() const { return theta_[off_a()]; }

 private:
  Eigen::Index off_u() const { return 4 * Eigen::Index{d_} * d_; }
  Eigen::Index off_b() const { return off_u() + 4 * d_; }
  Eigen::Index off_v() const { return off_b() + 4 * d_; }
  Eigen::Index off_a() const { return off_v() + d_; }

  int d_;
  Eigen::VectorXd theta_;
};

/// Every entry, biases and readout included, drawn from U[-d^-1/2, d^-1/2]
/// or N(0, 1/d).
LstmParams init_params(InitMode mode, int hidden, std::uint64_t seed);

/// Output for one sequence of +-1 values.
double forward(const LstmParams& params, std::span<const int> x);

/// Outputs for a batch; column j of `inputs` (n x B) is one sequence.
Eigen::VectorXd forward_batch(const LstmParams& params, const Eigen::MatrixXd& inputs);

/// Mean squared error over the batch and its gradient (same layout as
/// LstmParams::flat()).
double mse_gradient(const LstmParams& params, const Eigen::MatrixXd& inputs,
                    const Eigen::VectorXd& targets, Eigen::VectorXd& gradient);

struct AdamConfig {
  double learning_rate = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(Eigen::Index size, AdamConfig config);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient);
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::uint64_t t_ = 0;
};

}  // namespace blocksens::rnn
