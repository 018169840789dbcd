// SPDX-License-Identifier: Apache-2.0
#include "blocksens/index_set.hpp"

#include <bit>
#include <stdexcept>

#include "blocksens/random.hpp"

namespace blocksens {

IndexSet::IndexSet(int length) : length_(length) {
  if (length < 1) throw std::invalid_argument("sequence length must be >= 1");
  words_.assign(static_cast<std::size_t>((length + 63) / 64), 0);
}

IndexSet IndexSet::from_positions(int length, std::span<const int> positions) {
  IndexSet s(length);
  for (int p : positions) s.insert(p);
  return s;
}

IndexSet IndexSet::range(int length, int first, int last) {
  IndexSet s(length);
  for (int p = first; p <= last; ++p) s.insert(p);
  return s;
}

bool IndexSet::empty() const {
  for (auto w : words_)
    if (w) return false;
  return true;
}

int IndexSet::count() const {
  int c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

bool IndexSet::contains(int position) const {
  if (position < 1 || position > length_) return false;
  const int bit = position - 1;
  return (words_[bit / 64] >> (bit % 64)) & 1u;
}

void IndexSet::insert(int position) {
  if (position < 1 || position > length_)
    throw std::out_of_range("position " + std::to_string(position) +
                            " outside sequence of length " +
                            std::to_string(length_));
  const int bit = position - 1;
  words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
}

bool IndexSet::intersects(const IndexSet& other) const {
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i)
    if (words_[i] & other.words_[i]) return true;
  return false;
}

IndexSet& IndexSet::operator|=(const IndexSet& other) {
  if (other.length_ != length_)
    throw std::invalid_argument("index sets over different lengths");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

std::vector<int> IndexSet::positions() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    std::uint64_t w = words_[i];
    while (w) {
      out.push_back(static_cast<int>(i * 64) + std::countr_zero(w) + 1);
      w &= w - 1;
    }
  }
  return out;
}

int IndexSet::lowest() const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i]) return static_cast<int>(i * 64) + std::countr_zero(words_[i]) + 1;
  return 0;
}

std::string IndexSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (int p : positions()) {
    if (!first) out += ",";
    out += std::to_string(p);
    first = false;
  }
  return out + "}";
}

std::strong_ordering operator<=>(const IndexSet& a, const IndexSet& b) {
  const std::size_t n = std::max(a.words_.size(), b.words_.size());
  for (std::size_t i = n; i-- > 0;) {
    const std::uint64_t x = i < a.words_.size() ? a.words_[i] : 0;
    const std::uint64_t y = i < b.words_.size() ? b.words_[i] : 0;
    if (x != y) return x <=> y;
  }
  return std::strong_ordering::equal;
}

std::size_t IndexSetHash::operator()(const IndexSet& s) const {
  std::uint64_t h = 0x51ed27ULL;
  for (auto w : s.words()) h = mix64(h ^ w);
  return static_cast<std::size_t>(h);
}

}  // namespace blocksens
