// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "blocksens/seqsens.hpp"

namespace blocksens {

const char* to_string(PackingMode mode) {
  switch (mode) {
    case PackingMode::kExact: return "exact";
    case PackingMode::kGreedy: return "greedy";
    case PackingMode::kAuto: return "auto";
  }
  return "auto";
}

PackingMode packing_mode_from_string(const std::string& name) {
  if (name == "exact") return PackingMode::kExact;
  if (name == "greedy") return PackingMode::kGreedy;
  if (name == "auto") return PackingMode::kAuto;
  throw std::invalid_argument("unknown packing mode '" + name + "'");
}

namespace {

constexpr std::uint64_t kLongSequenceBudget = 1'000'000;

struct Candidate {
  std::size_t index;
  double weight;
  double share_sum;
  const IndexSet* set;
};

bool by_weight_then_mask(const Candidate& a, const Candidate& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return *a.set < *b.set;
}

class BranchAndBound {
 public:
  BranchAndBound(int length, std::vector<Candidate> candidates, std::uint64_t budget)
      : length_(length), by_lowest_(static_cast<std::size_t>(length) + 2),
        share_(static_cast<std::size_t>(length) + 2, 0.0),
        covered_(static_cast<std::size_t>((length + 63) / 64), 0), budget_(budget) {
    for (const auto& c : candidates) {
      const double per_position = c.weight / c.set->count();
      for (int q : c.set->positions())
        share_[q] = std::max(share_[q], per_position);
    }
    for (auto& c : candidates) {
      double s = 0.0;
      for (int q : c.set->positions()) s += share_[q];
      c.share_sum = s;
      by_lowest_[c.set->lowest()].push_back(c);
    }
    for (auto& bucket : by_lowest_)
      std::sort(bucket.begin(), bucket.end(), by_weight_then_mask);
  }

  void run(double incumbent, std::vector<std::size_t> incumbent_sets) {
    best_ = incumbent;
    best_sets_ = std::move(incumbent_sets);
    double rest = 0.0;
    for (int q = 1; q <= length_; ++q) rest += share_[q];
    search(1, 0.0, rest);
  }

  double best() const { return best_; }
  const std::vector<std::size_t>& best_sets() const { return best_sets_; }
  bool truncated() const { return truncated_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  bool covered(int q) const {
    return (covered_[(q - 1) / 64] >> ((q - 1) % 64)) & 1u;
  }

  bool disjoint(const IndexSet& s) const {
    const auto w = s.words();
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] & covered_[i]) return false;
    return true;
  }

  void toggle(const IndexSet& s) {
    const auto w = s.words();
    for (std::size_t i = 0; i < w.size(); ++i) covered_[i] ^= w[i];
  }

  void search(int p, double value, double rest) {
    while (p <= length_ && covered(p)) ++p;
    if (p > length_) {
      if (value > best_) {
        best_ = value;
        best_sets_ = path_;
      }
      return;
    }
    if (truncated_ || ++nodes_ > budget_) {
      truncated_ = true;
      return;
    }
    // The share bound is admissible up to rounding; the slack keeps a
    // rounding-level improvement from being pruned.
    if (value + rest + 1e-9 * (1.0 + rest) <= best_) return;

    for (const auto& c : by_lowest_[p]) {
      if (!disjoint(*c.set)) continue;
      toggle(*c.set);
      path_.push_back(c.index);
      search(p + 1, value + c.weight, rest - c.share_sum);
      path_.pop_back();
      toggle(*c.set);
    }
    search(p + 1, value, rest - share_[p]);
  }

  int length_;
  std::vector<std::vector<Candidate>> by_lowest_;
  std::vector<double> share_;
  std::vector<std::uint64_t> covered_;
  std::vector<std::size_t> path_;
  std::vector<std::size_t> best_sets_;
  double best_ = 0.0;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  bool truncated_ = false;
};

}  // namespace

PackingResult solve_packing(int length, std::span<const IndexSet> sets,
                            std::span<const double> weights,
                            const PackingOptions& options) {
  if (sets.size() != weights.size())
    throw std::invalid_argument("sets and weights differ in size");
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].length() != length)
      throw std::invalid_argument("index set over a different sequence length");
    if (weights[i] < 0.0) throw std::invalid_argument("negative packing weight");
    if (weights[i] > 0.0 && !sets[i].empty())
      candidates.push_back({i, weights[i], 0.0, &sets[i]});
  }
  std::sort(candidates.begin(), candidates.end(), by_weight_then_mask);

  PackingResult result;
  std::vector<std::uint64_t> covered(static_cast<std::size_t>((length + 63) / 64), 0);
  for (const auto& c : candidates) {
    const auto w = c.set->words();
    bool free = true;
    for (std::size_t i = 0; i < w.size() && free; ++i) free = !(w[i] & covered[i]);
    if (!free) continue;
    for (std::size_t i = 0; i < w.size(); ++i) covered[i] |= w[i];
    result.chosen.push_back(c.index);
    result.value += c.weight;
  }
  result.mode = "greedy";

  bool run_exact = options.mode == PackingMode::kExact;
  std::uint64_t budget = options.node_budget;
  if (options.mode == PackingMode::kAuto) {
    run_exact = true;
    if (length > options.exact_length_limit)
      budget = std::min(budget, kLongSequenceBudget);
  }
  if (run_exact && !candidates.empty()) {
    BranchAndBound solver(length, candidates, budget);
    solver.run(result.value, result.chosen);
    result.value = solver.best();
    result.chosen = solver.best_sets();
    result.nodes = solver.nodes();
    result.mode = solver.truncated() ? "exact-truncated" : "exact";
  } else if (run_exact) {
    result.mode = "exact";
  }
  std::sort(result.chosen.begin(), result.chosen.end(),
            [&](std::size_t a, std::size_t b) { return sets[a].lowest() < sets[b].lowest(); });
  return result;
}

}  // namespace blocksens
