// SPDX-License-Identifier: Apache-2.0
//
// Built-in task models. Each interns its lexicon into the shared vocabulary at
// construction and keeps a per-id table; any token it has not seen scores as
// the sentinel 0.
#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "blocksens/boolfn.hpp"
#include "blocksens/seqsens.hpp"
#include "json.hpp"

namespace blocksens {

/// Product of per-token +-1 values.
class ParityModel : public TaskModel {
 public:
  ParityModel(Vocabulary& vocab, const std::map<std::string, double>& values);
  int num_classes() const override { return 1; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override { return "parity"; }

 private:
  std::vector<double> value_by_id_;
};

/// tanh of the mean per-token score vector (bag of embeddings, k = 1).
class LexiconBoeModel : public TaskModel {
 public:
  LexiconBoeModel(Vocabulary& vocab,
                  const std::map<std::string, std::vector<double>>& scores, int dim);
  int num_classes() const override { return dim_; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override { return "lexicon_boe"; }

 private:
  int dim_;
  std::vector<std::vector<double>> score_by_id_;
};

struct DfaSpec {
  std::string start;
  std::set<std::string> accept;
  /// state -> token -> next state; a missing entry leads to a rejecting sink.
  std::map<std::string, std::map<std::string, std::string>> transitions;
};

/// +1 if the automaton ends in an accepting state, -1 otherwise.
class DfaModel : public TaskModel {
 public:
  DfaModel(Vocabulary& vocab, const DfaSpec& spec);
  int num_classes() const override { return 1; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override { return "dfa"; }

 private:
  int start_ = 0;
  std::vector<bool> accept_;
  std::vector<int> symbol_by_id_;           // -1 outside the alphabet
  std::vector<std::vector<int>> next_;      // [state][symbol], -1 = sink
};

/// sign(count(first) - count(second)).
class MajorityTokenModel : public TaskModel {
 public:
  MajorityTokenModel(Vocabulary& vocab, const std::string& first, const std::string& second);
  int num_classes() const override { return 1; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override { return "majority_token"; }

 private:
  TokenId first_, second_;
};

/// Reads a +-1 token sequence as a table index; tokens other than the two
/// designated ones, or a length other than the arity, score 0.
class TruthTableModel : public TaskModel {
 public:
  TruthTableModel(Vocabulary& vocab, TruthTable table, const std::string& plus = "1",
                  const std::string& minus = "-1");
  int num_classes() const override { return 1; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override { return "table(n=" + std::to_string(table_.arity()) + ")"; }

 private:
  TruthTable table_;
  TokenId plus_, minus_;
};

std::map<std::string, std::vector<double>> lexicon_from_json(const nlohmann::json& j, int& dim);
DfaSpec dfa_from_json(const nlohmann::json& j);

}  // namespace blocksens
