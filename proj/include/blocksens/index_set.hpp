// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blocksens {

/// A set of 1-based positions in a sequence of fixed length, stored as a
/// bitmask (position i is bit i-1). Ordering compares the masks as integers.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(int length);

  static IndexSet from_positions(int length, std::span<const int> positions);
  /// Positions first..last inclusive.
  static IndexSet range(int length, int first, int last);

  int length() const { return length_; }
  bool empty() const;
  int count() const;
  bool contains(int position) const;
  void insert(int position);
  bool intersects(const IndexSet& other) const;
  IndexSet& operator|=(const IndexSet& other);

  std::vector<int> positions() const;
  int lowest() const;  // 0 when empty
  std::span<const std::uint64_t> words() const { return words_; }
  std::string to_string() const;

  friend bool operator==(const IndexSet& a, const IndexSet& b) {
    return a.words_ == b.words_;
  }
  friend std::strong_ordering operator<=>(const IndexSet& a, const IndexSet& b);

 private:
  int length_ = 0;
  std::vector<std::uint64_t> words_;
};

struct IndexSetHash {
  std::size_t operator()(const IndexSet& s) const;
};

}  // namespace blocksens
