// SPDX-License-Identifier: Apache-2.0
//
// Windowed averaging models
//
//   f(x) = h( (1/n) * sum_{i=1}^{n-k} phi_i(x_i, ..., x_{i+k-1}) ),
//
// with per-position feature tables phi_i : Sigma^k -> R^d bounded by C in
// 2-norm and an L-Lipschitz head h. Every such f satisfies
// bs(f, x) <= 2 L^2 C^2 k^2 for all x; certify_bound checks it by exhaustive
// computation.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace blocksens {

enum class Squash { kIdentity, kTanh, kLogistic };

const char* to_string(Squash squash);
Squash squash_from_string(const std::string& name);
/// Lipschitz constant of the squashing function itself.
double squash_lipschitz(Squash squash);
/// logistic is rescaled to 2*sigma(z) - 1.
double apply_squash(Squash squash, double z);

class KGramAveragingModel {
 public:
  /// tables[i] holds alphabet^k rows of `feature_dim` values for window i+1;
  /// the row of a window is sum_j s_j * alphabet^j over its symbols.
  KGramAveragingModel(int k, int alphabet_size, int feature_dim,
                      std::vector<std::vector<double>> tables,
                      std::vector<double> head_weights, double head_bias, Squash squash);

  int k() const { return k_; }
  int alphabet_size() const { return alphabet_; }
  int feature_dim() const { return dim_; }
  /// Largest sequence length the tables cover.
  int max_length() const { return static_cast<int>(tables_.size()) + k_; }
  /// Realized max feature 2-norm.
  double C() const { return c_; }
  /// ||w||_2 times the squash's Lipschitz constant.
  double L() const { return l_; }
  Squash squash() const { return squash_; }
  const std::vector<double>& head_weights() const { return weights_; }
  double head_bias() const { return bias_; }
  const std::vector<std::vector<double>>& tables() const { return tables_; }

  /// Symbols in [0, alphabet). Requires k < n <= max_length().
  double evaluate(std::span<const int> symbols) const;

  /// 2 L^2 C^2 k^2
  double bound() const;

  nlohmann::json to_json() const;
  static KGramAveragingModel from_json(const nlohmann::json& j);

 private:
  int k_;
  int alphabet_;
  int dim_;
  std::vector<std::vector<double>> tables_;
  std::vector<double> weights_;
  double bias_;
  Squash squash_;
  double c_ = 0.0;
  double l_ = 0.0;
};

struct RandomModelSpec {
  int k = 1;
  int feature_dim = 2;
  double c_cap = 1.0;
  Squash squash = Squash::kTanh;
  int alphabet_size = 2;
  int max_length = 12;
};

/// Feature vectors uniform in the c_cap ball, head weights and bias standard
/// normal.
KGramAveragingModel random_model(const RandomModelSpec& spec, std::uint64_t seed);

struct CertifyOptions {
  /// All inputs are checked when alphabet^n <= this, a seeded sample otherwise.
  std::size_t exhaustive_limit = 1024;
  std::size_t sample_size = 256;
  std::uint64_t seed = 0;
  /// Absolute slack allowed on top of each inequality for rounding.
  double tolerance = 1e-9;
};

struct Certificate {
  int length = 0;
  int alphabet_size = 0;
  std::size_t inputs_checked = 0;
  bool sampled = false;
  double max_bs = 0.0;
  std::size_t argmax_input = 0;
  double bound = 0.0;
  /// Inputs whose bs exceeds the bound.
  std::size_t violations = 0;
  /// (input, block) pairs with Var > 2 L^2 C^2 k^2 |P|^2 / n^2.
  std::size_t block_violations = 0;
  bool pass = false;

  double ratio() const { return bound > 0.0 ? max_bs / bound : 0.0; }
  nlohmann::json to_json() const;
};

inline constexpr int kMaxCertifyLength = 14;
inline constexpr std::size_t kMaxCertifyTable = std::size_t{1} << 22;

/// Tabulates the model over Sigma^n and computes exact bs at every checked
/// input. Throws std::invalid_argument when the table would be too large.
Certificate certify_bound(const KGramAveragingModel& model, int length,
                          const CertifyOptions& options = {});

}  // namespace blocksens
