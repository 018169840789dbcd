// SPDX-License-Identifier: Apache-2.0
#include "blocksens/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace blocksens {

namespace {

std::size_t draw_index(const std::vector<double>& cumulative, Rng& rng) {
  const double u = unit_uniform(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  // upper_bound never lands on a zero-mass entry; end() only if u rounds up.
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> weights_from_logs(const std::vector<double>& logs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double l : logs) top = std::max(top, l);
  std::vector<double> cumulative(logs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    acc += std::isfinite(logs[i]) ? std::exp(logs[i] - top) : 0.0;
    cumulative[i] = acc;
  }
  return cumulative;
}

}  // namespace

MarkovModel::MarkovModel(int order, double smoothing, std::vector<TokenId> alphabet)
    : order_(order), smoothing_(smoothing), alphabet_(std::move(alphabet)) {
  if (order_ < 1) throw std::invalid_argument("Markov order must be >= 1");
  if (!(smoothing_ > 0.0)) throw std::invalid_argument("smoothing must be > 0");
  if (alphabet_.empty()) throw std::invalid_argument("Markov alphabet is empty");
}

std::size_t MarkovModel::ContextHash::operator()(const std::vector<TokenId>& c) const {
  std::uint64_t h = 0x6d61726bULL;
  for (TokenId t : c) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
  return static_cast<std::size_t>(h);
}

std::vector<TokenId> MarkovModel::context_at(std::span<const TokenId> sequence,
                                             std::size_t position) const {
  std::vector<TokenId> ctx(static_cast<std::size_t>(order_));
  for (int j = 0; j < order_; ++j) {
    const long long at = static_cast<long long>(position) - order_ + j;
    ctx[j] = at < 0 ? kBeginToken : sequence[static_cast<std::size_t>(at)];
  }
  return ctx;
}

void MarkovModel::fit(std::span<const Tokens> corpus) {
  if (corpus.empty()) throw std::invalid_argument("Markov corpus is empty");
  for (const auto& sentence : corpus)
    for (std::size_t i = 0; i <= sentence.size(); ++i) {
      auto& entry = counts_[context_at(sentence, i)];
      const TokenId target = i < sentence.size() ? sentence[i] : kEndToken;
      entry.total += 1.0;
      entry.next[target] += 1.0;
    }
}

double MarkovModel::log_conditional(std::span<const TokenId> sequence,
                                    std::size_t position) const {
  const TokenId target = position < sequence.size() ? sequence[position] : kEndToken;
  const double outcomes = static_cast<double>(alphabet_.size() + 1);
  double count = 0.0, total = 0.0;
  auto it = counts_.find(context_at(sequence, position));
  if (it != counts_.end()) {
    total = it->second.total;
    auto jt = it->second.next.find(target);
    if (jt != it->second.next.end()) count = jt->second;
  }
  return std::log((count + smoothing_) / (total + smoothing_ * outcomes));
}

double MarkovModel::log_weight(std::span<const TokenId> sequence) const {
  double total = 0.0;
  for (std::size_t i = 0; i <= sequence.size(); ++i) total += log_conditional(sequence, i);
  return total;
}

std::string MarkovModel::name() const {
  std::ostringstream out;
  out << "markov(k=" << order_ << ",lambda=" << smoothing_ << ")";
  return out.str();
}

ExhaustiveSampler::ExhaustiveSampler(std::vector<TokenId> alphabet,
                                     std::shared_ptr<const SequenceDistribution> distribution,
                                     ExhaustiveOptions options)
    : alphabet_(std::move(alphabet)), distribution_(std::move(distribution)),
      options_(options) {
  if (alphabet_.empty()) throw std::invalid_argument("sampler alphabet is empty");
}

std::vector<Tokens> ExhaustiveSampler::completions(std::span<const TokenId> x,
                                                   const IndexSet& subset) const {
  const auto positions = subset.positions();
  double total = 1.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    total *= static_cast<double>(alphabet_.size());
    if (total > static_cast<double>(options_.cap))
      throw EnumerationCapExceeded("neighborhood of " + subset.to_string() +
                                   " exceeds enumeration cap " +
                                   std::to_string(options_.cap));
  }
  std::vector<Tokens> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> digit(positions.size(), 0);
  Tokens current(x.begin(), x.end());
  for (int p : positions) current[p - 1] = alphabet_[0];
  for (;;) {
    out.push_back(current);
    std::size_t j = 0;
    for (; j < positions.size(); ++j) {
      if (++digit[j] < alphabet_.size()) {
        current[positions[j] - 1] = alphabet_[digit[j]];
        break;
      }
      digit[j] = 0;
      current[positions[j] - 1] = alphabet_[0];
    }
    if (j == positions.size()) break;
  }
  return out;
}

std::vector<Tokens> ExhaustiveSampler::sample(std::span<const TokenId> x,
                                              const IndexSet& subset, int count,
                                              std::uint64_t seed) const {
  auto all = completions(x, subset);
  if (options_.enumerate) return all;

  std::vector<double> cumulative;
  if (distribution_) {
    std::vector<double> logs(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) logs[i] = distribution_->log_weight(all[i]);
    cumulative = weights_from_logs(logs);
  } else {
    cumulative.resize(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) cumulative[i] = static_cast<double>(i + 1);
  }
  if (!(cumulative.back() > 0.0))
    throw std::runtime_error("neighborhood has zero total weight");

  Rng rng(seed);
  std::vector<Tokens> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) out.push_back(all[draw_index(cumulative, rng)]);
  return out;
}

std::string ExhaustiveSampler::name() const {
  std::string n = "exhaustive(";
  n += distribution_ ? distribution_->name() : "uniform";
  n += ",|alphabet|=" + std::to_string(alphabet_.size());
  if (options_.enumerate) n += ",enumerate";
  return n + ")";
}

UniformTokenSampler::UniformTokenSampler(std::vector<TokenId> alphabet)
    : alphabet_(std::move(alphabet)) {
  if (alphabet_.empty()) throw std::invalid_argument("sampler alphabet is empty");
}

std::vector<Tokens> UniformTokenSampler::sample(std::span<const TokenId> x,
                                                const IndexSet& subset, int count,
                                                std::uint64_t seed) const {
  const auto positions = subset.positions();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet_.size() - 1);
  std::vector<Tokens> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Tokens y(x.begin(), x.end());
    for (int p : positions) y[p - 1] = alphabet_[pick(rng)];
    out.push_back(std::move(y));
  }
  return out;
}

std::string UniformTokenSampler::name() const {
  return "uniform(|alphabet|=" + std::to_string(alphabet_.size()) + ")";
}

MarkovGibbsSampler::MarkovGibbsSampler(std::shared_ptr<const MarkovModel> model,
                                       GibbsOptions options)
    : model_(std::move(model)), options_(options) {
  if (!model_) throw std::invalid_argument("Gibbs sampler needs a model");
  if (options_.burn_in < 0 || options_.thinning < 1)
    throw std::invalid_argument("burn_in must be >= 0 and thinning >= 1");
}

std::vector<Tokens> MarkovGibbsSampler::sample(std::span<const TokenId> x,
                                               const IndexSet& subset, int count,
                                               std::uint64_t seed) const {
  const auto positions = subset.positions();
  const auto& alphabet = model_->alphabet();
  const std::size_t n = x.size();
  const std::size_t k = static_cast<std::size_t>(model_->order());
  Tokens state(x.begin(), x.end());
  Rng rng(seed);
  std::vector<double> logs(alphabet.size());

  auto sweep = [&] {
    for (int p : positions) {
      const std::size_t at = static_cast<std::size_t>(p - 1);
      const std::size_t last = std::min(at + k, n);
      for (std::size_t a = 0; a < alphabet.size(); ++a) {
        state[at] = alphabet[a];
        double l = 0.0;
        for (std::size_t j = at; j <= last; ++j) l += model_->log_conditional(state, j);
        logs[a] = l;
      }
      state[at] = alphabet[draw_index(weights_from_logs(logs), rng)];
    }
  };

  for (int b = 0; b < options_.burn_in; ++b) sweep();
  std::vector<Tokens> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    for (int t = 0; t < options_.thinning; ++t) sweep();
    out.push_back(state);
  }
  return out;
}

std::string MarkovGibbsSampler::name() const {
  return "gibbs(" + model_->name() + ",burn_in=" + std::to_string(options_.burn_in) +
         ",thinning=" + std::to_string(options_.thinning) + ")";
}

}  // namespace blocksens
