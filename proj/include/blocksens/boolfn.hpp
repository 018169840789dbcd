// SPDX-License-Identifier: Apache-2.0
//
// Exact sensitivity analysis of functions on {-1,1}^n held as truth tables.
//
// Index convention: input x = (x_1, ..., x_n) maps to the table index
// sum_i b_i * 2^(i-1) with b_i = (1 - x_i) / 2, so position 1 is the least
// significant bit and a set bit means x_i = -1. Files written by this library
// use the same convention.
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace blocksens {

inline constexpr int kMaxArity = 20;
inline constexpr int kMaxExactBlockArity = 14;

/// A set of input positions, bit (i-1) standing for position i.
struct SubsetMask {
  std::uint32_t bits = 0;

  constexpr bool empty() const { return bits == 0; }
  constexpr int size() const { return std::popcount(bits); }
  constexpr bool contains(int position) const {
    return (bits >> (position - 1)) & 1u;
  }
  static constexpr SubsetMask singleton(int position) {
    return SubsetMask{1u << (position - 1)};
  }
  friend constexpr bool operator==(SubsetMask, SubsetMask) = default;
  friend constexpr auto operator<=>(SubsetMask, SubsetMask) = default;
};

/// Values of f over all 2^n inputs.
///
/// Tables built with from_values() are confined to [-1,1]. Real-valued
/// regression targets (spectrum samples, inverse transforms) may leave that
/// range and are built with from_real_values(); bounded() tells them apart.
class TruthTable {
 public:
  static TruthTable from_values(int arity, std::vector<double> values);
  static TruthTable from_real_values(int arity, std::vector<double> values);

  static TruthTable parity(int arity);
  static TruthTable constant(int arity, double value);
  /// sign(sum x_i) with ties going to +1.
  static TruthTable majority(int arity);

  int arity() const { return arity_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  std::span<const double> values() const { return values_; }
  bool is_boolean() const { return boolean_; }
  bool bounded() const { return bounded_; }

  /// Table index of a +-1 vector (position 1 first).
  static std::uint32_t index_of(std::span<const int> x);
  /// Value (+1 or -1) of position `position` (1-based) in input `index`.
  static int input_value(std::uint32_t index, int position) {
    return ((index >> (position - 1)) & 1u) ? -1 : 1;
  }

 private:
  TruthTable(int arity, std::vector<double> values, bool bounded);

  int arity_ = 0;
  std::vector<double> values_;
  bool boolean_ = false;
  bool bounded_ = true;
};

/// Fourier coefficients hat f(S), S indexed by SubsetMask bits.
struct FourierSpectrum {
  int arity = 0;
  std::vector<double> coefficients;
};

FourierSpectrum walsh_hadamard(const TruthTable& f);
TruthTable inverse_walsh_hadamard(const FourierSpectrum& spectrum);

/// Population variance (divide by count) of a finite sample, two-pass.
/// Shared by every variance computed in the library so that identical
/// multisets in identical order give bitwise-identical results.
double population_variance(std::span<const double> values);

/// sum_i Var(f | all coordinates but i fixed to x), uniform inputs.
double sensitivity_at(const TruthTable& f, std::uint32_t x);

/// Var(f(X) | X agrees with x outside P), enumerating the 2^|P| completions
/// in ascending submask order.
double subset_variance(const TruthTable& f, std::uint32_t x, SubsetMask P);

struct BlockSensitivity {
  double value = 0.0;
  /// Blocks of one maximizing partition of {1..n}, ordered by lowest position.
  std::vector<SubsetMask> partition;
};

/// Maximum over partitions of {1..n} of summed subset variances.
/// Requires arity <= kMaxExactBlockArity.
BlockSensitivity block_sensitivity_exact(const TruthTable& f, std::uint32_t x);

double average_sensitivity(const TruthTable& f);
/// sum_S |S| hat f(S)^2
double spectral_average_sensitivity(const FourierSpectrum& spectrum);

struct AverageBlockOptions {
  /// Inputs are enumerated exhaustively when 2^n <= this, sampled otherwise.
  std::size_t exhaustive_limit = 1024;
  std::size_t sample_size = 256;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct AverageBlockSensitivity {
  double mean = 0.0;
  double std_error = 0.0;  // 0 when exhaustive
  std::size_t inputs = 0;
  bool sampled = false;
};

AverageBlockSensitivity average_block_sensitivity(
    const TruthTable& f, const AverageBlockOptions& options = {});

/// Spectrum supported on degrees {i-1, i, i+1} intersected with [1, n],
/// standard-normal coefficients rescaled to unit total mass.
TruthTable sample_spectrum_concentrated(int arity, int level, std::uint64_t seed);

/// Independent fair +-1 outputs.
TruthTable sample_random_boolean(int arity, std::uint64_t seed);

struct Binarized {
  TruthTable table;
  double threshold = 0.0;  // output is +1 iff value > threshold
  /// All outputs landed on one side; the table is constant.
  bool degenerate = false;
};

/// Thresholds real outputs into a +-1 table with maximal Var = 1 - mean^2.
Binarized threshold_binarize(std::span<const double> outputs);

// Generic machinery over tables on {0..radix-1}^n (index = sum d_i radix^(i-1)),
// used by the Boolean front end above and by mixed-radix callers.
namespace exact {

/// Var of f over x's neighborhood for every mask P (size 2^n, P = 0 gives 0).
std::vector<double> neighborhood_variances(std::span<const double> values,
                                           int radix, int arity,
                                           std::size_t x);

struct Partition {
  double value = 0.0;
  std::vector<std::uint32_t> blocks;
};

/// Maximizes sum of block_value over partitions of the full n-bit mask by
/// subset DP. block_value has size 2^n. Ties keep the smallest block
/// containing the lowest uncovered position.
Partition best_partition(std::span<const double> block_value, int arity);

}  // namespace exact

}  // namespace blocksens
