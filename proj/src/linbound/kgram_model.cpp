// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <stdexcept>

#include "blocksens/linbound.hpp"
#include "blocksens/random.hpp"

namespace blocksens {

const char* to_string(Squash squash) {
  switch (squash) {
    case Squash::kIdentity: return "identity";
    case Squash::kTanh: return "tanh";
    case Squash::kLogistic: return "logistic";
  }
  return "?";
}

Squash squash_from_string(const std::string& name) {
  if (name == "identity") return Squash::kIdentity;
  if (name == "tanh") return Squash::kTanh;
  if (name == "logistic") return Squash::kLogistic;
  throw std::invalid_argument("unknown head '" + name + "' (identity, tanh, logistic)");
}

double squash_lipschitz(Squash squash) {
  // 2*sigma(z) - 1 = tanh(z/2)
  return squash == Squash::kLogistic ? 0.5 : 1.0;
}

double apply_squash(Squash squash, double z) {
  switch (squash) {
    case Squash::kIdentity: return z;
    case Squash::kTanh: return std::tanh(z);
    case Squash::kLogistic: return std::tanh(0.5 * z);
  }
  return z;
}

namespace {

std::size_t rows_for(int alphabet, int k) {
  std::size_t rows = 1;
  for (int j = 0; j < k; ++j) rows *= static_cast<std::size_t>(alphabet);
  return rows;
}

}  // namespace

KGramAveragingModel::KGramAveragingModel(int k, int alphabet_size, int feature_dim,
                                         std::vector<std::vector<double>> tables,
                                         std::vector<double> head_weights, double head_bias,
                                         Squash squash)
    : k_(k),
      alphabet_(alphabet_size),
      dim_(feature_dim),
      tables_(std::move(tables)),
      weights_(std::move(head_weights)),
      bias_(head_bias),
      squash_(squash) {
  if (k_ < 1) throw std::invalid_argument("k must be >= 1");
  if (alphabet_ < 2) throw std::invalid_argument("alphabet needs at least 2 symbols");
  if (dim_ < 1) throw std::invalid_argument("feature dimension must be >= 1");
  if (tables_.empty()) throw std::invalid_argument("model needs at least one window table");
  if (static_cast<int>(weights_.size()) != dim_)
    throw std::invalid_argument("head weights must match the feature dimension");
  if (!std::isfinite(bias_)) throw std::invalid_argument("head bias must be finite");
  const std::size_t expected = rows_for(alphabet_, k_) * static_cast<std::size_t>(dim_);
  for (const auto& table : tables_) {
    if (table.size() != expected)
      throw std::invalid_argument("window table has the wrong size");
    for (std::size_t row = 0; row < table.size(); row += dim_) {
      double sq = 0.0;
      for (int c = 0; c < dim_; ++c) {
        if (!std::isfinite(table[row + c]))
          throw std::invalid_argument("feature values must be finite");
        sq += table[row + c] * table[row + c];
      }
      c_ = std::max(c_, std::sqrt(sq));
    }
  }
  double w2 = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("head weights must be finite");
    w2 += w * w;
  }
  l_ = std::sqrt(w2) * squash_lipschitz(squash_);
}

double KGramAveragingModel::evaluate(std::span<const int> symbols) const {
  const int n = static_cast<int>(symbols.size());
  if (n <= k_)
    throw std::invalid_argument("sequence of length " + std::to_string(n) +
                                " is too short for k = " + std::to_string(k_));
  if (n > max_length())
    throw std::invalid_argument("sequence of length " + std::to_string(n) +
                                " exceeds the model's " + std::to_string(max_length()));
  for (int s : symbols)
    if (s < 0 || s >= alphabet_) throw std::out_of_range("symbol outside the alphabet");
  std::vector<double> g(static_cast<std::size_t>(dim_), 0.0);
  for (int i = 0; i < n - k_; ++i) {
    std::size_t row = 0;
    for (int j = k_ - 1; j >= 0; --j) row = row * alphabet_ + static_cast<std::size_t>(symbols[i + j]);
    const double* phi = tables_[i].data() + row * dim_;
    for (int c = 0; c < dim_; ++c) g[c] += phi[c];
  }
  double z = bias_;
  for (int c = 0; c < dim_; ++c) z += weights_[c] * (g[c] / n);
  return apply_squash(squash_, z);
}

double KGramAveragingModel::bound() const {
  return 2.0 * l_ * l_ * c_ * c_ * static_cast<double>(k_) * k_;
}

nlohmann::json KGramAveragingModel::to_json() const {
  return {{"k", k_},
          {"alphabet_size", alphabet_},
          {"feature_dim", dim_},
          {"head", to_string(squash_)},
          {"head_weights", weights_},
          {"head_bias", bias_},
          {"C", c_},
          {"L", l_},
          {"tables", tables_}};
}

KGramAveragingModel KGramAveragingModel::from_json(const nlohmann::json& j) {
  return KGramAveragingModel(j.at("k").get<int>(), j.at("alphabet_size").get<int>(),
                             j.at("feature_dim").get<int>(),
                             j.at("tables").get<std::vector<std::vector<double>>>(),
                             j.at("head_weights").get<std::vector<double>>(),
                             j.at("head_bias").get<double>(),
                             squash_from_string(j.at("head").get<std::string>()));
}

KGramAveragingModel random_model(const RandomModelSpec& spec, std::uint64_t seed) {
  if (spec.c_cap <= 0.0 || !std::isfinite(spec.c_cap))
    throw std::invalid_argument("C cap must be positive");
  if (spec.max_length <= spec.k) throw std::invalid_argument("max length must exceed k");
  if (spec.feature_dim < 1) throw std::invalid_argument("feature dimension must be >= 1");
  Rng rng(mix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t rows = rows_for(spec.alphabet_size, spec.k);
  const int d = spec.feature_dim;
  std::vector<std::vector<double>> tables(static_cast<std::size_t>(spec.max_length - spec.k));
  for (auto& table : tables) {
    table.resize(rows * d);
    for (std::size_t row = 0; row < rows; ++row) {
      double norm = 0.0;
      double* v = table.data() + row * d;
      do {
        norm = 0.0;
        for (int c = 0; c < d; ++c) {
          v[c] = normal(rng);
          norm += v[c] * v[c];
        }
      } while (norm == 0.0);
      const double radius = spec.c_cap * (1.0 - 1e-12) * std::pow(unit(rng), 1.0 / d);
      const double scale = radius / std::sqrt(norm);
      for (int c = 0; c < d; ++c) v[c] *= scale;
    }
  }
  std::vector<double> w(static_cast<std::size_t>(d));
  for (double& x : w) x = normal(rng);
  const double b = normal(rng);
  return KGramAveragingModel(spec.k, spec.alphabet_size, d, std::move(tables), std::move(w), b,
                             spec.squash);
}

}  // namespace blocksens
