// SPDX-License-Identifier: Apache-2.0
#include "blocksens/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "blocksens/random.hpp"

namespace blocksens::rnn {

const char* to_string(InitMode mode) {
  return mode == InitMode::kUniform ? "uniform" : "gaussian";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "uniform") return InitMode::kUniform;
  if (name == "gaussian") return InitMode::kGaussian;
  throw std::invalid_argument("unknown init mode '" + name + "' (uniform, gaussian)");
}

LstmParams::LstmParams(int hidden) : d_(hidden) {
  if (hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
  theta_ = Eigen::VectorXd::Zero(count(hidden));
}

LstmParams init_params(InitMode mode, int hidden, std::uint64_t seed) {
  LstmParams p(hidden);
  Rng rng(mix64(seed));
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  if (mode == InitMode::kUniform) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& w : p.flat()) w = dist(rng);
  } else {
    std::normal_distribution<double> dist(0.0, scale);
    for (auto& w : p.flat()) w = dist(rng);
  }
  return p;
}

namespace {

template <typename Derived>
Eigen::ArrayXXd sigmoid(const Eigen::ArrayBase<Derived>& z) {
  return (1.0 + (-z).exp()).inverse();
}

struct Tape {
  std::vector<Eigen::MatrixXd> h;     // n+1 entries, d x B
  std::vector<Eigen::MatrixXd> c;     // n+1 entries
  std::vector<Eigen::MatrixXd> gate;  // n entries, 4d x B, post-activation
};

Eigen::VectorXd run(const LstmParams& p, const Eigen::MatrixXd& inputs, Tape* tape) {
  const Eigen::Index d = p.hidden();
  const Eigen::Index n = inputs.rows();
  const Eigen::Index batch = inputs.cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, batch);
  if (tape) {
    tape->h.assign(1, h);
    tape->c.assign(1, c);
    tape->gate.clear();
  }
  const auto W = p.W();
  const auto u = p.u();
  const auto b = p.b();
  Eigen::MatrixXd z(4 * d, batch);
  for (Eigen::Index t = 0; t < n; ++t) {
    z.noalias() = W * h;
    z.noalias() += u * inputs.row(t);
    z.colwise() += b;
    z.topRows(2 * d).array() = sigmoid(z.topRows(2 * d).array());
    z.middleRows(2 * d, d).array() = z.middleRows(2 * d, d).array().tanh();
    z.bottomRows(d).array() = sigmoid(z.bottomRows(d).array());
    c = (z.middleRows(d, d).array() * c.array() +
         z.topRows(d).array() * z.middleRows(2 * d, d).array())
            .matrix();
    h = (z.bottomRows(d).array() * c.array().tanh()).matrix();
    if (tape) {
      tape->gate.push_back(z);
      tape->h.push_back(h);
      tape->c.push_back(c);
    }
  }
  Eigen::VectorXd y = h.transpose() * p.v();
  y.array() += p.a();
  return y;
}

}  // namespace

double forward(const LstmParams& params, std::span<const int> x) {
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t t = 0; t < x.size(); ++t) inputs(static_cast<Eigen::Index>(t), 0) = x[t];
  return run(params, inputs, nullptr)[0];
}

Eigen::VectorXd forward_batch(const LstmParams& params, const Eigen::MatrixXd& inputs) {
  return run(params, inputs, nullptr);
}

double mse_gradient(const LstmParams& params, const Eigen::MatrixXd& inputs,
                    const Eigen::VectorXd& targets, Eigen::VectorXd& gradient) {
  if (targets.size() != inputs.cols())
    throw std::invalid_argument("one target per batch column expected");
  const Eigen::Index d = params.hidden();
  const Eigen::Index n = inputs.rows();
  const double batch = static_cast<double>(inputs.cols());
  Tape tape;
  const Eigen::VectorXd y = run(params, inputs, &tape);
  const Eigen::VectorXd residual = y - targets;
  const double loss = residual.squaredNorm() / batch;

  LstmParams grad(params.hidden());
  const Eigen::RowVectorXd dy = (2.0 / batch) * residual.transpose();
  grad.v() = tape.h[n] * dy.transpose();
  grad.a() = dy.sum();

  const auto W = params.W();
  auto gW = grad.W();
  auto gu = grad.u();
  auto gb = grad.b();
  Eigen::MatrixXd dh = params.v() * dy;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(d, inputs.cols());
  Eigen::MatrixXd dz(4 * d, inputs.cols());
  for (Eigen::Index t = n; t >= 1; --t) {
    const Eigen::MatrixXd& z = tape.gate[t - 1];
    const auto i = z.topRows(d).array();
    const auto f = z.middleRows(d, d).array();
    const auto g = z.middleRows(2 * d, d).array();
    const auto o = z.bottomRows(d).array();
    const Eigen::ArrayXXd tc = tape.c[t].array().tanh();
    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(d).array() = dc.array() * g * i * (1.0 - i);
    dz.middleRows(d, d).array() = dc.array() * tape.c[t - 1].array() * f * (1.0 - f);
    dz.middleRows(2 * d, d).array() = dc.array() * i * (1.0 - g.square());
    dz.bottomRows(d).array() = dh.array() * tc * o * (1.0 - o);
    dc.array() *= f;
    gW.noalias() += dz * tape.h[t - 1].transpose();
    gu.noalias() += dz * inputs.row(t - 1).transpose();
    gb += dz.rowwise().sum();
    dh.noalias() = W.transpose() * dz;
  }
  gradient = std::move(grad.flat());
  return loss;
}

Adam::Adam(Eigen::Index size, AdamConfig config)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient) {
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * gradient;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  theta.array() -= config_.learning_rate * (m_.array() / c1) /
                   ((v_.array() / c2).sqrt() + config_.epsilon);
}

}  // namespace blocksens::rnn
