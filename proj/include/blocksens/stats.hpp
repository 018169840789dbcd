// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blocksens::stats {

/// Degenerate input: too short, non-finite, or zero variance.
class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, t-test with n-2 degrees of freedom
  std::size_t n = 0;
};

Correlation pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on average ranks.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_p = 1.0;
  double residual_ss = 0.0;
};

OlsFit ols_one_predictor(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> values);
/// Sample standard error of the mean; 0 for fewer than two values.
double std_error(std::span<const double> values);

struct HistogramBin {
  double lower = 0.0;  // inclusive
  double upper = 0.0;  // exclusive
  std::size_t count = 0;
};

/// Bins [j*w, (j+1)*w) from 0 through the bin holding the largest value.
/// Values must be finite and non-negative.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width = 0.25);

/// "bin_lower,bin_upper,count" header plus one row per bin.
std::string histogram_csv(const std::vector<HistogramBin>& bins);

}  // namespace blocksens::stats
