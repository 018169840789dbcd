// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <bit>
#include <stdexcept>

#include "blocksens/boolfn.hpp"
#include "blocksens/linbound.hpp"
#include "blocksens/random.hpp"

namespace blocksens {

nlohmann::json Certificate::to_json() const {
  return {{"length", length},
          {"alphabet_size", alphabet_size},
          {"inputs_checked", inputs_checked},
          {"sampled", sampled},
          {"max_bs", max_bs},
          {"argmax_input", argmax_input},
          {"bound", bound},
          {"ratio", ratio()},
          {"violations", violations},
          {"block_violations", block_violations},
          {"pass", pass}};
}

Certificate certify_bound(const KGramAveragingModel& model, int length,
                          const CertifyOptions& options) {
  if (length <= model.k() || length > model.max_length())
    throw std::invalid_argument("length " + std::to_string(length) +
                                " outside the model's range (" + std::to_string(model.k() + 1) +
                                ".." + std::to_string(model.max_length()) + ")");
  if (length > kMaxCertifyLength)
    throw std::invalid_argument("certification needs length <= " +
                                std::to_string(kMaxCertifyLength));
  const auto radix = static_cast<std::size_t>(model.alphabet_size());
  std::size_t total = 1;
  for (int i = 0; i < length; ++i) {
    total *= radix;
    if (total > kMaxCertifyTable)
      throw std::invalid_argument("alphabet^length is too large to enumerate");
  }

  std::vector<double> values(total);
  std::vector<int> symbols(static_cast<std::size_t>(length), 0);
  double peak = 0.0;
  for (std::size_t index = 0; index < total; ++index) {
    values[index] = model.evaluate(symbols);
    peak = std::max(peak, values[index] * values[index]);
    for (int i = 0; i < length && ++symbols[i] == model.alphabet_size(); ++i) symbols[i] = 0;
  }

  Certificate cert;
  cert.length = length;
  cert.alphabet_size = model.alphabet_size();
  cert.bound = model.bound();

  std::vector<std::size_t> inputs;
  if (total <= options.exhaustive_limit) {
    inputs.resize(total);
    for (std::size_t x = 0; x < total; ++x) inputs[x] = x;
  } else {
    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(length)}));
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    inputs.resize(options.sample_size);
    for (auto& x : inputs) x = pick(rng);
    cert.sampled = true;
  }

  // Var <= E[f^2] <= peak, so rounding in the variances scales with peak.
  const double slack = options.tolerance * (1.0 + peak);
  const double n2 = static_cast<double>(length) * length;
  const double per_block = cert.bound / n2;
  for (std::size_t x : inputs) {
    const auto variances = exact::neighborhood_variances(values, model.alphabet_size(), length, x);
    for (std::size_t p = 1; p < variances.size(); ++p) {
      const double size = std::popcount(p);
      if (variances[p] > per_block * size * size + slack) ++cert.block_violations;
    }
    const double bs = exact::best_partition(variances, length).value;
    if (bs > cert.max_bs || cert.inputs_checked == 0) {
      cert.max_bs = bs;
      cert.argmax_input = x;
    }
    if (bs > cert.bound + slack) ++cert.violations;
    ++cert.inputs_checked;
  }
  cert.pass = cert.violations == 0 && cert.block_violations == 0;
  return cert;
}

}  // namespace blocksens
