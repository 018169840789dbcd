// SPDX-License-Identifier: Apache-2.0
#include "blocksens/boolfn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blocksens {

namespace {

void check_arity(int arity) {
  if (arity < 1 || arity > kMaxArity)
    throw std::invalid_argument("arity must be in [1, " +
                                std::to_string(kMaxArity) + "], got " +
                                std::to_string(arity));
}

void check_index(const TruthTable& f, std::uint32_t x) {
  if (x >= f.size())
    throw std::out_of_range("input index " + std::to_string(x) +
                            " out of range for arity " +
                            std::to_string(f.arity()));
}

void butterfly(std::vector<double>& a) {
  const std::size_t size = a.size();
  for (std::size_t half = 1; half < size; half <<= 1)
    for (std::size_t block = 0; block < size; block += 2 * half)
      for (std::size_t j = block; j < block + half; ++j) {
        const double u = a[j], v = a[j + half];
        a[j] = u + v;
        a[j + half] = u - v;
      }
}

}  // namespace

TruthTable::TruthTable(int arity, std::vector<double> values, bool bounded)
    : arity_(arity), values_(std::move(values)), bounded_(bounded) {
  check_arity(arity_);
  if (values_.size() != (std::size_t{1} << arity_))
    throw std::invalid_argument("truth table of arity " +
                                std::to_string(arity_) + " needs " +
                                std::to_string(std::size_t{1} << arity_) +
                                " values, got " +
                                std::to_string(values_.size()));
  boolean_ = true;
  bool in_range = true;
  for (double v : values_) {
    if (!std::isfinite(v))
      throw std::invalid_argument("truth table values must be finite");
    if (v < -1.0 || v > 1.0) in_range = false;
    if (v != 1.0 && v != -1.0) boolean_ = false;
  }
  if (bounded_ && !in_range)
    throw std::invalid_argument("truth table values must lie in [-1, 1]");
  bounded_ = in_range;
}

TruthTable TruthTable::from_values(int arity, std::vector<double> values) {
  return TruthTable(arity, std::move(values), true);
}

TruthTable TruthTable::from_real_values(int arity, std::vector<double> values) {
  return TruthTable(arity, std::move(values), false);
}

TruthTable TruthTable::parity(int arity) {
  check_arity(arity);
  std::vector<double> v(std::size_t{1} << arity);
  for (std::size_t x = 0; x < v.size(); ++x)
    v[x] = (std::popcount(x) & 1) ? -1.0 : 1.0;
  return from_values(arity, std::move(v));
}

TruthTable TruthTable::constant(int arity, double value) {
  check_arity(arity);
  return from_values(arity, std::vector<double>(std::size_t{1} << arity, value));
}

TruthTable TruthTable::majority(int arity) {
  check_arity(arity);
  std::vector<double> v(std::size_t{1} << arity);
  for (std::size_t x = 0; x < v.size(); ++x) {
    const int minus = std::popcount(x);
    v[x] = (arity - 2 * minus) >= 0 ? 1.0 : -1.0;
  }
  return from_values(arity, std::move(v));
}

std::uint32_t TruthTable::index_of(std::span<const int> x) {
  if (x.empty() || x.size() > static_cast<std::size_t>(kMaxArity))
    throw std::invalid_argument("input length out of range");
  std::uint32_t index = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == -1)
      index |= 1u << i;
    else if (x[i] != 1)
      throw std::invalid_argument("inputs must be +1 or -1");
  }
  return index;
}

FourierSpectrum walsh_hadamard(const TruthTable& f) {
  std::vector<double> a(f.values().begin(), f.values().end());
  butterfly(a);
  const double scale = std::ldexp(1.0, -f.arity());
  for (double& c : a) c *= scale;
  return FourierSpectrum{f.arity(), std::move(a)};
}

TruthTable inverse_walsh_hadamard(const FourierSpectrum& spectrum) {
  check_arity(spectrum.arity);
  if (spectrum.coefficients.size() != (std::size_t{1} << spectrum.arity))
    throw std::invalid_argument("spectrum size does not match arity");
  std::vector<double> a = spectrum.coefficients;
  butterfly(a);
  return TruthTable::from_real_values(spectrum.arity, std::move(a));
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double count = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / count;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / count;
}

double sensitivity_at(const TruthTable& f, std::uint32_t x) {
  check_index(f, x);
  double total = 0.0;
  for (int i = 0; i < f.arity(); ++i) {
    const double half_gap = (f[x] - f[x ^ (1u << i)]) / 2.0;
    total += half_gap * half_gap;
  }
  return total;
}

double subset_variance(const TruthTable& f, std::uint32_t x, SubsetMask P) {
  check_index(f, x);
  if (P.empty()) throw std::invalid_argument("subset must be nonempty");
  if (P.bits >> f.arity())
    throw std::invalid_argument("subset mentions positions beyond the arity");
  std::vector<double> outputs;
  outputs.reserve(std::size_t{1} << P.size());
  const std::uint32_t base = x & ~P.bits;
  // Ascending submasks of P: sub = (sub - P) & P walks them in order.
  std::uint32_t sub = 0;
  do {
    outputs.push_back(f[base | sub]);
    sub = (sub - P.bits) & P.bits;
  } while (sub != 0);
  return population_variance(outputs);
}

double average_sensitivity(const TruthTable& f) {
  double total = 0.0;
  for (std::uint32_t x = 0; x < f.size(); ++x) total += sensitivity_at(f, x);
  return total / static_cast<double>(f.size());
}

double spectral_average_sensitivity(const FourierSpectrum& spectrum) {
  double total = 0.0;
  for (std::size_t s = 0; s < spectrum.coefficients.size(); ++s)
    total += std::popcount(s) * spectrum.coefficients[s] *
             spectrum.coefficients[s];
  return total;
}

}  // namespace blocksens
