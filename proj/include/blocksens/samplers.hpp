// SPDX-License-Identifier: Apache-2.0
//
// Reference neighbor samplers: exact enumeration of x's neighborhood, and a
// Gibbs sampler over a smoothed order-k Markov chain fitted to a corpus.
#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "blocksens/random.hpp"
#include "blocksens/seqsens.hpp"

namespace blocksens {

/// Unnormalized log-probability of whole sequences.
class SequenceDistribution {
 public:
  virtual ~SequenceDistribution() = default;
  virtual double log_weight(std::span<const TokenId> sequence) const = 0;
  virtual std::string name() const = 0;
};

/// Add-lambda smoothed order-k Markov chain with begin padding and an end
/// symbol. Outcomes are the alphabet tokens plus the end symbol.
class MarkovModel : public SequenceDistribution {
 public:
  MarkovModel(int order, double smoothing, std::vector<TokenId> alphabet);

  void fit(std::span<const Tokens> corpus);

  int order() const { return order_; }
  const std::vector<TokenId>& alphabet() const { return alphabet_; }

  /// log P(sequence[position] | previous order() tokens); position may be
  /// sequence.size(), meaning the end symbol.
  double log_conditional(std::span<const TokenId> sequence, std::size_t position) const;
  double log_weight(std::span<const TokenId> sequence) const override;
  std::string name() const override;

 private:
  struct ContextCounts {
    double total = 0.0;
    std::unordered_map<TokenId, double> next;
  };
  struct ContextHash {
    std::size_t operator()(const std::vector<TokenId>& c) const;
  };

  std::vector<TokenId> context_at(std::span<const TokenId> sequence,
                                  std::size_t position) const;

  int order_;
  double smoothing_;
  std::vector<TokenId> alphabet_;
  std::unordered_map<std::vector<TokenId>, ContextCounts, ContextHash> counts_;
};

inline constexpr TokenId kBeginToken = -1;
inline constexpr TokenId kEndToken = -2;

struct ExhaustiveOptions {
  std::size_t cap = 4096;
  /// Return every completion once, in enumeration order, ignoring the
  /// requested count. Only meaningful for the uniform distribution.
  bool enumerate = false;
};

/// Raised when |alphabet|^|P| exceeds the enumeration cap.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumerates x's neighborhood over `alphabet` (positions of P ascending,
/// lowest position varying fastest, alphabet order as given) and draws
/// weighted samples. A null distribution means uniform.
class ExhaustiveSampler : public NeighborSampler {
 public:
  ExhaustiveSampler(std::vector<TokenId> alphabet,
                    std::shared_ptr<const SequenceDistribution> distribution = nullptr,
                    ExhaustiveOptions options = {});

  std::vector<Tokens> completions(std::span<const TokenId> x, const IndexSet& subset) const;
  std::vector<Tokens> sample(std::span<const TokenId> x, const IndexSet& subset,
                             int count, std::uint64_t seed) const override;
  std::string name() const override;

 private:
  std::vector<TokenId> alphabet_;
  std::shared_ptr<const SequenceDistribution> distribution_;
  ExhaustiveOptions options_;
};

/// Independent uniform tokens at each position of P: uniform over x's
/// neighborhood without enumerating it.
class UniformTokenSampler : public NeighborSampler {
 public:
  explicit UniformTokenSampler(std::vector<TokenId> alphabet);
  std::vector<Tokens> sample(std::span<const TokenId> x, const IndexSet& subset,
                             int count, std::uint64_t seed) const override;
  std::string name() const override;

 private:
  std::vector<TokenId> alphabet_;
};

struct GibbsOptions {
  int burn_in = 20;
  int thinning = 5;
};

/// Gibbs sweeps over the positions of P in ascending order, starting from x.
class MarkovGibbsSampler : public NeighborSampler {
 public:
  MarkovGibbsSampler(std::shared_ptr<const MarkovModel> model, GibbsOptions options = {});

  std::vector<Tokens> sample(std::span<const TokenId> x, const IndexSet& subset,
                             int count, std::uint64_t seed) const override;
  std::string name() const override;

 private:
  std::shared_ptr<const MarkovModel> model_;
  GibbsOptions options_;
};

/// Uniform double in [0,1) from the top 53 bits.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace blocksens
