// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "blocksens/boolfn.hpp"
#include "blocksens/parallel.hpp"
#include "blocksens/random.hpp"

namespace blocksens {
namespace exact {

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Turns an array indexed by offset digits delta in {0..r-1}^n into one indexed
// by masks: entry P holds the sum over all delta supported on P. Coordinates
// are converted one at a time, so the array shrinks from r^n to 2^n.
std::vector<double> support_zeta(std::vector<double> cur, int radix, int arity) {
  const std::size_t r = static_cast<std::size_t>(radix);
  for (int i = 0; i < arity; ++i) {
    const std::size_t low = std::size_t{1} << i;
    const std::size_t high = ipow(r, arity - i - 1);
    std::vector<double> next(low * 2 * high);
    for (std::size_t h = 0; h < high; ++h)
      for (std::size_t l = 0; l < low; ++l) {
        const double keep = cur[l + low * (r * h)];
        double all = keep;
        for (std::size_t v = 1; v < r; ++v) all += cur[l + low * (v + r * h)];
        next[l + low * (2 * h)] = keep;
        next[l + low * (1 + 2 * h)] = all;
      }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

std::vector<double> neighborhood_variances(std::span<const double> values,
                                           int radix, int arity,
                                           std::size_t x) {
  if (radix < 2) throw std::invalid_argument("radix must be at least 2");
  if (arity < 1 || arity > kMaxArity)
    throw std::invalid_argument("arity out of range");
  const std::size_t total = ipow(static_cast<std::size_t>(radix), arity);
  if (values.size() != total)
    throw std::invalid_argument("table size does not match radix^arity");
  if (x >= total) throw std::out_of_range("input index out of range");

  std::vector<int> x_digits(arity);
  {
    std::size_t rest = x;
    for (int i = 0; i < arity; ++i) {
      x_digits[i] = static_cast<int>(rest % radix);
      rest /= radix;
    }
  }

  std::vector<double> first(total), second(total);
  if (radix == 2) {
    for (std::size_t d = 0; d < total; ++d) {
      const double v = values[x ^ d];
      first[d] = v;
      second[d] = v * v;
    }
  } else {
    std::vector<int> delta(arity, 0);
    std::vector<std::size_t> place(arity);
    place[0] = 1;
    for (int i = 1; i < arity; ++i) place[i] = place[i - 1] * radix;
    for (std::size_t d = 0; d < total; ++d) {
      std::size_t index = 0;
      for (int i = 0; i < arity; ++i)
        index += place[i] * static_cast<std::size_t>((x_digits[i] + delta[i]) % radix);
      const double v = values[index];
      first[d] = v;
      second[d] = v * v;
      for (int i = 0; i < arity && ++delta[i] == radix; ++i) delta[i] = 0;
    }
  }

  const std::vector<double> sums = support_zeta(std::move(first), radix, arity);
  const std::vector<double> squares = support_zeta(std::move(second), radix, arity);

  std::vector<double> variance(std::size_t{1} << arity, 0.0);
  for (std::size_t p = 1; p < variance.size(); ++p) {
    const double count = static_cast<double>(
        ipow(static_cast<std::size_t>(radix), std::popcount(p)));
    const double mean = sums[p] / count;
    variance[p] = std::max(0.0, squares[p] / count - mean * mean);
  }
  return variance;
}

Partition best_partition(std::span<const double> block_value, int arity) {
  if (arity < 1 || arity > kMaxArity)
    throw std::invalid_argument("arity out of range");
  const std::size_t size = std::size_t{1} << arity;
  if (block_value.size() != size)
    throw std::invalid_argument("block_value must have 2^arity entries");

  std::vector<double> best(size, 0.0);
  std::vector<std::uint32_t> choice(size, 0);
  for (std::uint32_t s = 1; s < size; ++s) {
    const std::uint32_t low = s & (~s + 1);
    const std::uint32_t rest = s ^ low;
    double top = -1.0;
    std::uint32_t arg = 0;
    std::uint32_t sub = 0;
    do {
      const std::uint32_t block = sub | low;
      const double candidate = block_value[block] + best[s ^ block];
      if (candidate > top) {
        top = candidate;
        arg = block;
      }
      sub = (sub - rest) & rest;
    } while (sub != 0);
    best[s] = top;
    choice[s] = arg;
  }

  Partition result;
  result.value = best[size - 1];
  for (std::uint32_t s = static_cast<std::uint32_t>(size - 1); s != 0; s ^= choice[s])
    result.blocks.push_back(choice[s]);
  return result;
}

}  // namespace exact

BlockSensitivity block_sensitivity_exact(const TruthTable& f, std::uint32_t x) {
  if (f.arity() > kMaxExactBlockArity)
    throw std::invalid_argument(
        "exact block sensitivity needs arity <= " +
        std::to_string(kMaxExactBlockArity) + ", got " +
        std::to_string(f.arity()));
  if (x >= f.size()) throw std::out_of_range("input index out of range");
  const auto variances = exact::neighborhood_variances(f.values(), 2, f.arity(), x);
  const auto partition = exact::best_partition(variances, f.arity());
  BlockSensitivity result;
  result.value = partition.value;
  for (std::uint32_t b : partition.blocks) result.partition.push_back(SubsetMask{b});
  return result;
}

AverageBlockSensitivity average_block_sensitivity(
    const TruthTable& f, const AverageBlockOptions& options) {
  if (f.arity() > kMaxExactBlockArity)
    throw std::invalid_argument("average block sensitivity needs arity <= " +
                                std::to_string(kMaxExactBlockArity));
  std::vector<std::uint32_t> inputs;
  AverageBlockSensitivity out;
  if (f.size() <= options.exhaustive_limit) {
    inputs.resize(f.size());
    for (std::uint32_t x = 0; x < f.size(); ++x) inputs[x] = x;
  } else {
    if (options.sample_size < 2)
      throw std::invalid_argument("sample_size must be at least 2");
    Rng rng(derive_seed(options.seed, {0x62736861ULL}));
    std::uniform_int_distribution<std::uint32_t> pick(
        0, static_cast<std::uint32_t>(f.size() - 1));
    inputs.resize(options.sample_size);
    for (auto& x : inputs) x = pick(rng);
    out.sampled = true;
  }

  std::vector<double> per_input(inputs.size());
  parallel_for(inputs.size(), options.threads, [&](std::size_t i) {
    per_input[i] = block_sensitivity_exact(f, inputs[i]).value;
  });

  double sum = 0.0;
  for (double v : per_input) sum += v;
  out.inputs = inputs.size();
  out.mean = sum / static_cast<double>(inputs.size());
  if (out.sampled) {
    double ss = 0.0;
    for (double v : per_input) ss += (v - out.mean) * (v - out.mean);
    const double k = static_cast<double>(inputs.size());
    out.std_error = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

}  // namespace blocksens
