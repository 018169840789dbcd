// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale LSTM experiments: block sensitivity of randomly initialized
// networks, and how well networks fit targets of graded sensitivity.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blocksens/boolfn.hpp"
#include "blocksens/lstm.hpp"

namespace blocksens::rnn {

/// Network outputs over all 2^n inputs in table order.
std::vector<double> tabulate(const LstmParams& params, int arity);

struct InitDistConfig {
  int arity = 7;
  int hidden = 32;
  InitMode mode = InitMode::kUniform;
  int trials = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct InitDistResult {
  /// Average block sensitivity of each non-degenerate binarized network.
  std::vector<double> lstm;
  /// Same statistic for `trials` uniformly random Boolean functions.
  std::vector<double> baseline;
  /// Trials whose outputs binarized to a constant; left out of `lstm`.
  int degenerate = 0;
  double lstm_mean = 0.0;
  double baseline_mean = 0.0;
};

/// arity <= 10.
InitDistResult random_init_bs_distribution(const InitDistConfig& config);

struct TrainConfig {
  int hidden = 32;
  InitMode init = InitMode::kUniform;
  AdamConfig adam;
  int batch_size = 32;
  std::vector<std::uint64_t> checkpoints = {100, 1000, 10000};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  std::vector<std::uint64_t> checkpoints;
  /// MSE over every input (arity <= 10) or a fixed 1024-input sample.
  std::vector<double> mse;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
};

/// Trains `params` in place on batches drawn uniformly with replacement from
/// the 2^n inputs.
TrainResult train_fit(const TruthTable& target, LstmParams& params, const TrainConfig& config);

struct SweepConfig {
  int arity = 7;
  int functions_per_level = 5;
  std::vector<std::uint64_t> seeds = {0};
  TrainConfig train;
  unsigned threads = 1;
};

struct SweepRow {
  std::uint64_t seed = 0;
  int level = 0;
  int function_index = 0;
  double target_as = 0.0;
  std::uint64_t checkpoint = 0;
  double mse = 0.0;
  bool diverged = false;
};

/// Rows ordered by (seed, level, function index, checkpoint).
std::vector<SweepRow> learnability_sweep(const SweepConfig& config);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace blocksens::rnn
