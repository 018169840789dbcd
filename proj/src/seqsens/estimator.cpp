// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "blocksens/boolfn.hpp"
#include "blocksens/parallel.hpp"
#include "blocksens/random.hpp"
#include "blocksens/seqsens.hpp"

namespace blocksens {

std::uint64_t subset_seed(std::uint64_t global_seed, std::string_view input_id,
                          const IndexSet& subset) {
  std::vector<std::uint64_t> parts;
  parts.push_back(fnv1a(input_id));
  parts.push_back(static_cast<std::uint64_t>(subset.length()));
  for (int p : subset.positions()) parts.push_back(static_cast<std::uint64_t>(p));
  return derive_seed(global_seed, parts);
}

void validate_samples(std::span<const TokenId> x, const IndexSet& subset,
                      std::span<const Tokens> samples) {
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& y = samples[s];
    if (y.size() != x.size())
      throw ProtocolViolation("sample " + std::to_string(s) + " has length " +
                              std::to_string(y.size()) + ", expected " +
                              std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
      if (y[i] != x[i] && !subset.contains(static_cast<int>(i) + 1))
        throw ProtocolViolation("sample " + std::to_string(s) + " changes position " +
                                std::to_string(i + 1) + " outside " +
                                subset.to_string());
  }
}

std::vector<double> clamp_scores(std::vector<double> scores, int num_classes,
                                 std::size_t& clamped) {
  if (static_cast<int>(scores.size()) != num_classes)
    throw ProtocolViolation("model returned " + std::to_string(scores.size()) +
                            " scores, expected " + std::to_string(num_classes));
  for (double& v : scores) {
    if (!std::isfinite(v)) throw ProtocolViolation("model returned a non-finite score");
    if (v > 1.0 || v < -1.0) {
      v = std::clamp(v, -1.0, 1.0);
      ++clamped;
    }
  }
  return scores;
}

SubsetScore estimate_subset_sensitivity(std::span<const TokenId> x,
                                        const IndexSet& subset,
                                        const SubsetFamilyConfig& config,
                                        EvalContext& context,
                                        const std::vector<double>* original_scores) {
  if (subset.empty()) throw std::invalid_argument("subset must be nonempty");
  if (subset.length() != static_cast<int>(x.size()))
    throw std::invalid_argument("subset length does not match the input");
  if (config.samples_per_subset < 2)
    throw std::invalid_argument("samples_per_subset must be >= 2");

  const int classes = context.model.num_classes();
  SubsetScore score;
  score.set = subset;
  score.seed = subset_seed(context.global_seed, context.input_id, subset);

  const auto samples =
      context.sampler.sample(x, subset, config.samples_per_subset, score.seed);
  if (samples.empty()) throw ProtocolViolation("sampler returned no samples");
  validate_samples(x, subset, samples);

  std::vector<std::vector<double>> columns(static_cast<std::size_t>(classes));
  auto push = [&](const std::vector<double>& scores) {
    for (int c = 0; c < classes; ++c) columns[c].push_back(scores[c]);
  };
  if (config.include_original) {
    if (original_scores) {
      push(*original_scores);
    } else {
      push(clamp_scores(context.model.evaluate(x), classes, context.clamped));
    }
  }
  for (const auto& y : samples)
    push(clamp_scores(context.model.evaluate(y), classes, context.clamped));

  score.samples_used = static_cast<int>(columns.front().size());
  for (const auto& column : columns) {
    const double v = population_variance(column);
    score.per_class_variances.push_back(v);
    score.variance = std::max(score.variance, v);
  }
  return score;
}

SensitivityReport estimate_block_sensitivity(std::string input_id, int length,
                                             std::vector<SubsetScore> scores,
                                             const PackingOptions& options) {
  SensitivityReport report;
  report.input_id = std::move(input_id);
  report.length = length;
  std::vector<IndexSet> sets;
  std::vector<double> weights;
  sets.reserve(scores.size());
  weights.reserve(scores.size());
  for (const auto& s : scores) {
    sets.push_back(s.set);
    weights.push_back(s.variance);
  }
  const auto packing = solve_packing(length, sets, weights, options);
  report.bs_estimate = packing.value;
  report.packing_mode = packing.mode;
  for (std::size_t i : packing.chosen) report.winning_packing.push_back(sets[i]);
  report.scores = std::move(scores);
  return report;
}

SensitivityReport estimate_input(const InputItem& item, const NeighborSampler& sampler,
                                 const TaskModel& model, const EstimatorConfig& config) {
  const int length = static_cast<int>(item.tokens.size());
  SensitivityReport report;
  try {
    if (length < 1) throw std::invalid_argument("input '" + item.id + "' is empty");
    const auto family = config.full_family ? full_subset_family(length)
                                           : build_subset_family(length, config.family);
    EvalContext context{sampler, model, config.seed, item.id, 0};
    const auto original =
        clamp_scores(model.evaluate(item.tokens), model.num_classes(), context.clamped);
    std::vector<SubsetScore> scores;
    scores.reserve(family.size());
    for (const auto& subset : family)
      scores.push_back(estimate_subset_sensitivity(item.tokens, subset, config.family,
                                                   context, &original));
    report = estimate_block_sensitivity(item.id, length, std::move(scores), config.packing);
    report.clamped_outputs = context.clamped;
  } catch (const ProtocolViolation& e) {
    report = SensitivityReport{};
    report.input_id = item.id;
    report.length = length;
    report.error = std::string("protocol violation: ") + e.what();
    report.protocol_violation = true;
  } catch (const std::exception& e) {
    report = SensitivityReport{};
    report.input_id = item.id;
    report.length = length;
    report.error = e.what();
  }
  report.sampler = sampler.name();
  report.model = model.name();
  report.seed = config.seed;
  return report;
}

DatasetSummary average_block_sensitivity_dataset(std::span<const InputItem> items,
                                                 const NeighborSampler& sampler,
                                                 const TaskModel& model,
                                                 const EstimatorConfig& config,
                                                 unsigned threads) {
  config.family.validate();
  if (sampler.serial_only() || model.serial_only()) threads = 1;

  DatasetSummary summary;
  summary.reports.resize(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    summary.reports[i] = estimate_input(items[i], sampler, model, config);
  });

  summary.inputs = items.size();
  std::vector<double> values;
  std::map<int, std::pair<std::size_t, double>> by_length;
  for (const auto& r : summary.reports) {
    if (r.error) {
      ++summary.failed;
      if (r.protocol_violation) ++summary.protocol_violations;
      continue;
    }
    values.push_back(r.bs_estimate);
    auto& bucket = by_length[r.length];
    ++bucket.first;
    bucket.second += r.bs_estimate;
  }
  if (!values.empty()) {
    double sum = 0.0;
    for (double v : values) sum += v;
    summary.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
      const double k = static_cast<double>(values.size());
      summary.std_error = std::sqrt(ss / (k - 1.0) / k);
    }
  }
  for (const auto& [len, bucket] : by_length)
    summary.per_length[len] =
        LengthBucket{bucket.first, bucket.second / static_cast<double>(bucket.first)};
  return summary;
}

}  // namespace blocksens
