// SPDX-License-Identifier: Apache-2.0
//
// Probabilistic block sensitivity of sequence classifiers.
//
// Two oracles drive the estimate: a NeighborSampler proposing sequences that
// agree with x outside an index set P, and a TaskModel scoring sequences in
// [-1,1]^d. The per-input estimate is the best disjoint packing of subset
// variances over a restricted subset family, a lower bound on the packing over
// all subsets.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blocksens/index_set.hpp"
#include "blocksens/vocabulary.hpp"

namespace blocksens {

/// Raised when an oracle breaks the sampler/model contract.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TaskModel {
 public:
  virtual ~TaskModel() = default;
  virtual int num_classes() const = 0;
  /// Scores in [-1,1]^num_classes(); deterministic in `x`.
  virtual std::vector<double> evaluate(std::span<const TokenId> x) const = 0;
  virtual std::string name() const = 0;
  virtual bool serial_only() const { return false; }
};

class NeighborSampler {
 public:
  virtual ~NeighborSampler() = default;
  /// `count` sequences of x's length that agree with x outside `subset`.
  virtual std::vector<Tokens> sample(std::span<const TokenId> x,
                                     const IndexSet& subset, int count,
                                     std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
  virtual bool serial_only() const { return false; }
};

struct FocusWindow {
  int center = 1;  // 1-based
  int width = 7;
};

struct SubsetFamilyConfig {
  int max_span_len = 8;
  int num_chunks = 7;
  std::optional<FocusWindow> window;
  int samples_per_subset = 10;
  bool include_original = true;

  void validate() const;
};

/// Spans of 1..max_span_len adjacent positions, then unions of the
/// num_chunks floor-split chunks, then subsets of the focus window.
/// Duplicates are dropped, keeping first occurrence.
std::vector<IndexSet> build_subset_family(int length, const SubsetFamilyConfig& config);

/// Every nonempty subset of {1..length}, ascending by mask. length <= 20.
std::vector<IndexSet> full_subset_family(int length);

struct SubsetScore {
  IndexSet set;
  double variance = 0.0;
  std::vector<double> per_class_variances;  // one per output coordinate
  int samples_used = 0;
  std::uint64_t seed = 0;
};

/// Seed for the samples of (input, subset): independent of the rest of the
/// family so adding or removing subsets leaves other draws untouched.
std::uint64_t subset_seed(std::uint64_t global_seed, std::string_view input_id,
                          const IndexSet& subset);

/// Throws ProtocolViolation unless every sample has x's length and matches
/// x outside `subset`.
void validate_samples(std::span<const TokenId> x, const IndexSet& subset,
                      std::span<const Tokens> samples);

/// Clamps into [-1,1], counting clamped coordinates. Non-finite values are a
/// protocol violation.
std::vector<double> clamp_scores(std::vector<double> scores, int num_classes,
                                 std::size_t& clamped);

struct EvalContext {
  const NeighborSampler& sampler;
  const TaskModel& model;
  std::uint64_t global_seed = 0;
  std::string input_id;
  std::size_t clamped = 0;
};

SubsetScore estimate_subset_sensitivity(std::span<const TokenId> x,
                                        const IndexSet& subset,
                                        const SubsetFamilyConfig& config,
                                        EvalContext& context,
                                        const std::vector<double>* original_scores = nullptr);

enum class PackingMode { kExact, kGreedy, kAuto };

const char* to_string(PackingMode mode);
PackingMode packing_mode_from_string(const std::string& name);

struct PackingResult {
  double value = 0.0;
  std::vector<std::size_t> chosen;  // indices into the input sets
  /// "exact", "greedy", or "exact-truncated" when the search budget ran out.
  std::string mode;
  std::uint64_t nodes = 0;
};

struct PackingOptions {
  PackingMode mode = PackingMode::kAuto;
  /// kAuto searches exactly up to this length; beyond it the search is
  /// capped at a small node budget and may report "exact-truncated".
  int exact_length_limit = 32;
  std::uint64_t node_budget = 50'000'000;
};

/// Maximum-weight collection of pairwise disjoint sets. Zero-weight sets are
/// never chosen. Exact mode is branch and bound on the lowest uncovered
/// position with a per-position share bound.
PackingResult solve_packing(int length, std::span<const IndexSet> sets,
                            std::span<const double> weights,
                            const PackingOptions& options = {});

struct SensitivityReport {
  std::string input_id;
  int length = 0;
  double bs_estimate = 0.0;
  std::vector<IndexSet> winning_packing;
  std::vector<SubsetScore> scores;
  std::string sampler;
  std::string model;
  std::uint64_t seed = 0;
  std::string packing_mode;
  std::size_t clamped_outputs = 0;
  std::optional<std::string> error;
  bool protocol_violation = false;
};

SensitivityReport estimate_block_sensitivity(std::string input_id, int length,
                                             std::vector<SubsetScore> scores,
                                             const PackingOptions& options = {});

struct EstimatorConfig {
  SubsetFamilyConfig family;
  std::uint64_t seed = 0;
  PackingOptions packing;
  /// Use every nonempty subset instead of the restricted family.
  bool full_family = false;
};

struct InputItem {
  std::string id;
  Tokens tokens;
};

/// Full pipeline for one input; oracle failures land in report.error.
SensitivityReport estimate_input(const InputItem& item, const NeighborSampler& sampler,
                                 const TaskModel& model, const EstimatorConfig& config);

struct LengthBucket {
  std::size_t count = 0;
  double mean = 0.0;
};

struct DatasetSummary {
  std::size_t inputs = 0;
  std::size_t failed = 0;
  std::size_t protocol_violations = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::map<int, LengthBucket> per_length;
  std::vector<SensitivityReport> reports;  // in input order
};

/// Mean bs estimate over a dataset. Inputs run concurrently on `threads`
/// workers (forced to 1 when an oracle is serial-only); results are reduced
/// in input order so output never depends on the thread count.
DatasetSummary average_block_sensitivity_dataset(std::span<const InputItem> items,
                                                 const NeighborSampler& sampler,
                                                 const TaskModel& model,
                                                 const EstimatorConfig& config,
                                                 unsigned threads = 1);

}  // namespace blocksens
