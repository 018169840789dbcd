// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "blocksens/boolfn.hpp"
#include "blocksens/random.hpp"

namespace blocksens {

TruthTable sample_spectrum_concentrated(int arity, int level, std::uint64_t seed) {
  if (arity < 1 || arity > kMaxArity)
    throw std::invalid_argument("arity out of range");
  if (level < 1 || level > arity)
    throw std::invalid_argument("level must be in [1, " + std::to_string(arity) +
                                "], got " + std::to_string(level));
  const int lo = std::max(1, level - 1);
  const int hi = std::min(arity, level + 1);

  Rng rng(derive_seed(seed, {0x73706563ULL, static_cast<std::uint64_t>(arity),
                             static_cast<std::uint64_t>(level)}));
  std::normal_distribution<double> normal(0.0, 1.0);
  FourierSpectrum spectrum{arity, std::vector<double>(std::size_t{1} << arity, 0.0)};
  double mass = 0.0;
  for (std::size_t s = 1; s < spectrum.coefficients.size(); ++s) {
    const int degree = std::popcount(s);
    if (degree < lo || degree > hi) continue;
    const double c = normal(rng);
    spectrum.coefficients[s] = c;
    mass += c * c;
  }
  const double scale = 1.0 / std::sqrt(mass);
  for (double& c : spectrum.coefficients) c *= scale;
  return inverse_walsh_hadamard(spectrum);
}

TruthTable sample_random_boolean(int arity, std::uint64_t seed) {
  if (arity < 1 || arity > kMaxArity)
    throw std::invalid_argument("arity out of range");
  Rng rng(derive_seed(seed, {0x72626f6fULL, static_cast<std::uint64_t>(arity)}));
  std::vector<double> values(std::size_t{1} << arity);
  for (double& v : values) v = (rng() >> 63) ? -1.0 : 1.0;
  return TruthTable::from_values(arity, std::move(values));
}

Binarized threshold_binarize(std::span<const double> outputs) {
  const std::size_t count = outputs.size();
  if (count < 2 || !std::has_single_bit(count))
    throw std::invalid_argument("threshold_binarize needs 2^n outputs");
  for (double v : outputs)
    if (!std::isfinite(v)) throw std::invalid_argument("outputs must be finite");

  std::vector<double> sorted(outputs.begin(), outputs.end());
  std::sort(sorted.begin(), sorted.end());

  // Candidate thresholds are the distinct output values; +1 iff v > t.
  // Among equally balanced splits the one with fewer +1 outputs wins.
  double threshold = sorted.front();
  std::size_t best_plus = 0;
  long long best_gap = -1;
  for (std::size_t j = 0; j < count;) {
    std::size_t k = j;
    while (k < count && sorted[k] == sorted[j]) ++k;
    const std::size_t plus = count - k;
    const long long gap =
        std::llabs(2 * static_cast<long long>(plus) - static_cast<long long>(count));
    if (best_gap < 0 || gap <= best_gap) {
      best_gap = gap;
      best_plus = plus;
      threshold = sorted[j];
    }
    j = k;
  }

  std::vector<double> values(count);
  for (std::size_t x = 0; x < count; ++x)
    values[x] = outputs[x] > threshold ? 1.0 : -1.0;
  Binarized out{TruthTable::from_values(std::countr_zero(count), std::move(values)),
                threshold, best_plus == 0 || best_plus == count};
  return out;
}

}  // namespace blocksens
