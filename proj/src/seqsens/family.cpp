// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "blocksens/seqsens.hpp"

namespace blocksens {

void SubsetFamilyConfig::validate() const {
  if (max_span_len < 1) throw std::invalid_argument("max_span_len must be >= 1");
  if (num_chunks < 1 || num_chunks > 16)
    throw std::invalid_argument("num_chunks must be in [1, 16]");
  if (samples_per_subset < 2)
    throw std::invalid_argument("samples_per_subset must be >= 2");
  if (window && (window->width < 1 || window->width > 16))
    throw std::invalid_argument("window width must be in [1, 16]");
}

std::vector<IndexSet> build_subset_family(int length, const SubsetFamilyConfig& config) {
  if (length < 1) throw std::invalid_argument("sequence length must be >= 1");
  config.validate();

  std::vector<IndexSet> family;
  std::unordered_set<IndexSet, IndexSetHash> seen;
  auto add = [&](IndexSet s) {
    if (s.empty()) return;
    if (seen.insert(s).second) family.push_back(std::move(s));
  };

  for (int len = 1; len <= std::min(config.max_span_len, length); ++len)
    for (int first = 1; first + len - 1 <= length; ++first)
      add(IndexSet::range(length, first, first + len - 1));

  // Chunk i covers floor((i-1)n/c)+1 .. floor(in/c).
  const int c = config.num_chunks;
  std::vector<IndexSet> chunks;
  for (int i = 1; i <= c; ++i) {
    const int first = (i - 1) * length / c + 1;
    const int last = i * length / c;
    if (first <= last) chunks.push_back(IndexSet::range(length, first, last));
  }
  for (std::uint32_t mask = 1; mask < (1u << chunks.size()); ++mask) {
    IndexSet u(length);
    for (std::size_t j = 0; j < chunks.size(); ++j)
      if ((mask >> j) & 1u) u |= chunks[j];
    add(std::move(u));
  }

  if (config.window) {
    const int width = std::min(config.window->width, length);
    const int center = std::clamp(config.window->center, 1, length);
    const int first = std::clamp(center - width / 2, 1, length - width + 1);
    for (std::uint32_t mask = 1; mask < (1u << width); ++mask) {
      IndexSet s(length);
      for (int j = 0; j < width; ++j)
        if ((mask >> j) & 1u) s.insert(first + j);
      add(std::move(s));
    }
  }
  return family;
}

std::vector<IndexSet> full_subset_family(int length) {
  if (length < 1 || length > 20)
    throw std::invalid_argument("full subset family needs length in [1, 20]");
  std::vector<IndexSet> family;
  family.reserve((std::size_t{1} << length) - 1);
  for (std::uint32_t mask = 1; mask < (1u << length); ++mask) {
    IndexSet s(length);
    for (int j = 0; j < length; ++j)
      if ((mask >> j) & 1u) s.insert(j + 1);
    family.push_back(std::move(s));
  }
  return family;
}

}  // namespace blocksens
