// SPDX-License-Identifier: Apache-2.0
#include "blocksens/experiments.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "blocksens/parallel.hpp"
#include "blocksens/random.hpp"

namespace blocksens::rnn {

namespace {

constexpr int kMaxTabulatedArity = 10;
constexpr std::size_t kHeldInSample = 1024;

Eigen::MatrixXd input_matrix(int arity, std::span<const std::uint32_t> indices) {
  Eigen::MatrixXd m(arity, static_cast<Eigen::Index>(indices.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (int i = 0; i < arity; ++i) m(i, j) = TruthTable::input_value(indices[j], i + 1);
  return m;
}

std::vector<std::uint32_t> all_inputs(int arity) {
  std::vector<std::uint32_t> out(std::size_t{1} << arity);
  for (std::uint32_t x = 0; x < out.size(); ++x) out[x] = x;
  return out;
}

}  // namespace

std::vector<double> tabulate(const LstmParams& params, int arity) {
  if (arity < 1 || arity > kMaxArity) throw std::invalid_argument("arity out of range");
  const auto inputs = all_inputs(arity);
  const Eigen::VectorXd y = forward_batch(params, input_matrix(arity, inputs));
  return {y.data(), y.data() + y.size()};
}

InitDistResult random_init_bs_distribution(const InitDistConfig& config) {
  if (config.arity < 1 || config.arity > kMaxTabulatedArity)
    throw std::invalid_argument("init-dist needs 1 <= n <= 10");
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<double> lstm(trials), baseline(trials);
  std::vector<char> degenerate(trials, 0);
  parallel_for(trials, config.threads, [&](std::size_t t) {
    const auto params =
        init_params(config.mode, config.hidden, derive_seed(config.seed, {1, t}));
    const auto binarized = threshold_binarize(tabulate(params, config.arity));
    degenerate[t] = binarized.degenerate;
    lstm[t] = average_block_sensitivity(binarized.table).mean;
    const auto random = sample_random_boolean(config.arity, derive_seed(config.seed, {2, t}));
    baseline[t] = average_block_sensitivity(random).mean;
  });
  InitDistResult out;
  for (std::size_t t = 0; t < trials; ++t) {
    if (degenerate[t])
      ++out.degenerate;
    else
      out.lstm.push_back(lstm[t]);
  }
  out.baseline = std::move(baseline);
  double s = 0.0;
  for (double v : out.lstm) s += v;
  out.lstm_mean = out.lstm.empty() ? 0.0 : s / static_cast<double>(out.lstm.size());
  s = 0.0;
  for (double v : out.baseline) s += v;
  out.baseline_mean = s / static_cast<double>(out.baseline.size());
  return out;
}

void TrainConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (checkpoints.empty()) throw std::invalid_argument("at least one checkpoint required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    if (checkpoints[i] == 0 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw std::invalid_argument("checkpoints must be positive and ascending");
}

TrainResult train_fit(const TruthTable& target, LstmParams& params, const TrainConfig& config) {
  config.validate();
  const int n = target.arity();
  std::vector<std::uint32_t> eval_inputs;
  Rng rng(derive_seed(config.seed, {0x747261696eULL}));
  if (n <= kMaxTabulatedArity) {
    eval_inputs = all_inputs(n);
  } else {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(target.size() - 1));
    eval_inputs.resize(kHeldInSample);
    for (auto& x : eval_inputs) x = pick(rng);
  }
  const Eigen::MatrixXd eval_x = input_matrix(n, eval_inputs);
  Eigen::VectorXd eval_y(static_cast<Eigen::Index>(eval_inputs.size()));
  for (Eigen::Index j = 0; j < eval_y.size(); ++j) eval_y[j] = target[eval_inputs[j]];

  Adam adam(params.flat().size(), config.adam);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(target.size() - 1));
  std::vector<std::uint32_t> batch(static_cast<std::size_t>(config.batch_size));
  Eigen::VectorXd batch_y(config.batch_size);
  Eigen::VectorXd gradient;

  TrainResult out;
  std::uint64_t step = 0;
  for (std::uint64_t checkpoint : config.checkpoints) {
    for (; step < checkpoint; ++step) {
      for (int j = 0; j < config.batch_size; ++j) {
        batch[j] = pick(rng);
        batch_y[j] = target[batch[j]];
      }
      const double loss = mse_gradient(params, input_matrix(n, batch), batch_y, gradient);
      if (!std::isfinite(loss) || !gradient.allFinite()) {
        out.diverged = true;
        out.diverged_at = step + 1;
        return out;
      }
      adam.step(params.flat(), gradient);
    }
    const double mse = (forward_batch(params, eval_x) - eval_y).squaredNorm() /
                       static_cast<double>(eval_y.size());
    if (!std::isfinite(mse)) {
      out.diverged = true;
      out.diverged_at = step;
      return out;
    }
    out.checkpoints.push_back(checkpoint);
    out.mse.push_back(mse);
  }
  return out;
}

std::vector<SweepRow> learnability_sweep(const SweepConfig& config) {
  config.train.validate();
  if (config.arity < 1 || config.arity > kMaxArity) throw std::invalid_argument("arity out of range");
  if (config.functions_per_level < 1) throw std::invalid_argument("functions per level must be >= 1");
  if (config.seeds.empty()) throw std::invalid_argument("at least one seed required");

  struct Job {
    std::uint64_t seed;
    int level;
    int index;
  };
  std::vector<Job> jobs;
  for (auto seed : config.seeds)
    for (int level = 1; level <= config.arity; ++level)
      for (int j = 0; j < config.functions_per_level; ++j) jobs.push_back({seed, level, j});

  std::vector<std::vector<SweepRow>> results(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t k) {
    const Job& job = jobs[k];
    const auto lvl = static_cast<std::uint64_t>(job.level);
    const auto idx = static_cast<std::uint64_t>(job.index);
    const auto target =
        sample_spectrum_concentrated(config.arity, job.level, derive_seed(job.seed, {3, lvl, idx}));
    const double as = average_sensitivity(target);
    TrainConfig train = config.train;
    train.seed = derive_seed(job.seed, {4, lvl, idx});
    auto params = init_params(train.init, train.hidden, derive_seed(job.seed, {5, lvl, idx}));
    const auto fit = train_fit(target, params, train);
    for (std::size_t c = 0; c < train.checkpoints.size(); ++c) {
      SweepRow row{job.seed, job.level, job.index, as, train.checkpoints[c], 0.0, fit.diverged};
      row.mse = c < fit.mse.size() ? fit.mse[c] : std::nan("");
      results[k].push_back(row);
    }
  });
  std::vector<SweepRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "seed,level,function,target_as,checkpoint,mse,diverged\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.level << ',' << r.function_index << ',' << r.target_as << ','
        << r.checkpoint << ',' << r.mse << ',' << (r.diverged ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace blocksens::rnn
