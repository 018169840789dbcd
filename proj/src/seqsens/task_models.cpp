// SPDX-License-Identifier: Apache-2.0
#include "blocksens/task_models.hpp"

#include <cmath>
#include <stdexcept>

namespace blocksens {

namespace {

template <typename T>
const T* lookup(const std::vector<T>& table, TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= table.size()) return nullptr;
  return &table[static_cast<std::size_t>(id)];
}

}  // namespace

ParityModel::ParityModel(Vocabulary& vocab, const std::map<std::string, double>& values) {
  std::vector<std::pair<TokenId, double>> interned;
  for (const auto& [token, v] : values) {
    if (v != 1.0 && v != -1.0)
      throw std::invalid_argument("parity values must be +1 or -1");
    interned.emplace_back(vocab.intern(token), v);
  }
  value_by_id_.assign(vocab.size(), 0.0);
  for (auto [id, v] : interned) value_by_id_[static_cast<std::size_t>(id)] = v;
}

std::vector<double> ParityModel::evaluate(std::span<const TokenId> x) const {
  double product = 1.0;
  for (TokenId id : x) {
    const double* v = lookup(value_by_id_, id);
    product *= v ? *v : 0.0;
  }
  return {product};
}

LexiconBoeModel::LexiconBoeModel(Vocabulary& vocab,
                                 const std::map<std::string, std::vector<double>>& scores,
                                 int dim)
    : dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("lexicon dimension must be >= 1");
  std::vector<std::pair<TokenId, const std::vector<double>*>> interned;
  for (const auto& [token, v] : scores) {
    if (static_cast<int>(v.size()) != dim_)
      throw std::invalid_argument("lexicon entry '" + token + "' has the wrong dimension");
    for (double s : v)
      if (!std::isfinite(s)) throw std::invalid_argument("lexicon scores must be finite");
    interned.emplace_back(vocab.intern(token), &v);
  }
  score_by_id_.assign(vocab.size(), std::vector<double>(static_cast<std::size_t>(dim_), 0.0));
  for (auto [id, v] : interned) score_by_id_[static_cast<std::size_t>(id)] = *v;
}

std::vector<double> LexiconBoeModel::evaluate(std::span<const TokenId> x) const {
  std::vector<double> mean(static_cast<std::size_t>(dim_), 0.0);
  if (x.empty()) return mean;
  for (TokenId id : x)
    if (const auto* v = lookup(score_by_id_, id))
      for (int c = 0; c < dim_; ++c) mean[c] += (*v)[c];
  for (double& m : mean) m = std::tanh(m / static_cast<double>(x.size()));
  return mean;
}

DfaModel::DfaModel(Vocabulary& vocab, const DfaSpec& spec) {
  std::map<std::string, int> state_index;
  auto state = [&](const std::string& s) {
    auto [it, inserted] = state_index.emplace(s, static_cast<int>(state_index.size()));
    return it->second;
  };
  start_ = state(spec.start);
  std::map<std::string, int> symbol_index;
  for (const auto& [from, edges] : spec.transitions) {
    state(from);
    for (const auto& [token, to] : edges) {
      state(to);
      symbol_index.emplace(token, static_cast<int>(symbol_index.size()));
    }
  }
  for (const auto& s : spec.accept) state(s);

  accept_.assign(state_index.size(), false);
  for (const auto& s : spec.accept) accept_[state_index.at(s)] = true;
  next_.assign(state_index.size(), std::vector<int>(symbol_index.size(), -1));
  for (const auto& [from, edges] : spec.transitions)
    for (const auto& [token, to] : edges)
      next_[state_index.at(from)][symbol_index.at(token)] = state_index.at(to);

  std::vector<std::pair<TokenId, int>> interned;
  for (const auto& [token, sym] : symbol_index) interned.emplace_back(vocab.intern(token), sym);
  symbol_by_id_.assign(vocab.size(), -1);
  for (auto [id, sym] : interned) symbol_by_id_[static_cast<std::size_t>(id)] = sym;
}

std::vector<double> DfaModel::evaluate(std::span<const TokenId> x) const {
  int s = start_;
  for (TokenId id : x) {
    const int* sym = lookup(symbol_by_id_, id);
    if (!sym || *sym < 0) return {0.0};
    if (s >= 0) s = next_[static_cast<std::size_t>(s)][static_cast<std::size_t>(*sym)];
  }
  return {s >= 0 && accept_[static_cast<std::size_t>(s)] ? 1.0 : -1.0};
}

MajorityTokenModel::MajorityTokenModel(Vocabulary& vocab, const std::string& first,
                                       const std::string& second)
    : first_(vocab.intern(first)), second_(vocab.intern(second)) {
  if (first_ == second_) throw std::invalid_argument("majority tokens must differ");
}

std::vector<double> MajorityTokenModel::evaluate(std::span<const TokenId> x) const {
  long long diff = 0;
  for (TokenId id : x) {
    if (id == first_) ++diff;
    if (id == second_) --diff;
  }
  return {diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)};
}

TruthTableModel::TruthTableModel(Vocabulary& vocab, TruthTable table,
                                 const std::string& plus, const std::string& minus)
    : table_(std::move(table)), plus_(vocab.intern(plus)), minus_(vocab.intern(minus)) {
  if (!table_.bounded())
    throw std::invalid_argument("task model tables must lie in [-1, 1]");
  if (plus_ == minus_) throw std::invalid_argument("table tokens must differ");
}

std::vector<double> TruthTableModel::evaluate(std::span<const TokenId> x) const {
  if (static_cast<int>(x.size()) != table_.arity()) return {0.0};
  std::uint32_t index = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == minus_)
      index |= 1u << i;
    else if (x[i] != plus_)
      return {0.0};
  }
  return {table_[index]};
}

std::map<std::string, std::vector<double>> lexicon_from_json(const nlohmann::json& j, int& dim) {
  const auto& scores = j.contains("scores") ? j.at("scores") : j;
  if (!scores.is_object()) throw std::invalid_argument("lexicon must be a JSON object");
  std::map<std::string, std::vector<double>> out;
  dim = j.contains("dim") ? j.at("dim").get<int>() : 0;
  for (const auto& [token, value] : scores.items()) {
    std::vector<double> v = value.is_array() ? value.get<std::vector<double>>()
                                             : std::vector<double>{value.get<double>()};
    if (dim == 0) dim = static_cast<int>(v.size());
    out.emplace(token, std::move(v));
  }
  if (dim == 0) dim = 1;
  return out;
}

DfaSpec dfa_from_json(const nlohmann::json& j) {
  DfaSpec spec;
  spec.start = j.at("start").get<std::string>();
  for (const auto& s : j.at("accept")) spec.accept.insert(s.get<std::string>());
  for (const auto& [from, edges] : j.at("transitions").items())
    for (const auto& [token, to] : edges.items())
      spec.transitions[from][token] = to.get<std::string>();
  return spec;
}

}  // namespace blocksens
