// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace blocksens {

using TokenId = std::int32_t;
using Tokens = std::vector<TokenId>;

inline constexpr TokenId kUnknownToken = 0;

/// Interning table for tokens. Id 0 is the unknown-token sentinel. Interning
/// is safe from several threads; ids are never reused or moved.
class Vocabulary {
 public:
  Vocabulary();
  Vocabulary(const Vocabulary&) = delete;
  Vocabulary& operator=(const Vocabulary&) = delete;

  /// Returns the id of `token`, adding it when new.
  TokenId intern(std::string_view token);
  /// Id of `token`, or kUnknownToken.
  TokenId find(std::string_view token) const;
  std::string token(TokenId id) const;
  std::size_t size() const;  // includes the sentinel

  Tokens encode(std::span<const std::string> tokens);
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

 private:
  mutable std::shared_mutex mutex_;
  std::deque<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace blocksens
