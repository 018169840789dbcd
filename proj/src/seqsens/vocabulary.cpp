// SPDX-License-Identifier: Apache-2.0
#include "blocksens/vocabulary.hpp"

#include <mutex>
#include <stdexcept>

namespace blocksens {

Vocabulary::Vocabulary() { tokens_.emplace_back("<unk>"); }

TokenId Vocabulary::intern(std::string_view token) {
  {
    std::shared_lock lock(mutex_);
    auto it = ids_.find(std::string(token));
    if (it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto [it, inserted] =
      ids_.emplace(std::string(token), static_cast<TokenId>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

TokenId Vocabulary::find(std::string_view token) const {
  std::shared_lock lock(mutex_);
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnknownToken : it->second;
}

std::string Vocabulary::token(TokenId id) const {
  std::shared_lock lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw std::out_of_range("token id " + std::to_string(id) + " not in vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::size_t Vocabulary::size() const {
  std::shared_lock lock(mutex_);
  return tokens_.size();
}

Tokens Vocabulary::encode(std::span<const std::string> tokens) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(intern(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token(id));
  return out;
}

}  // namespace blocksens
