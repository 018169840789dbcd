// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <memory>

#include "blocksens/cli.hpp"
#include "blocksens/experiments.hpp"
#include "blocksens/stats.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

struct InitDistArgs {
  int n = 7;
  int d = 32;
  std::string mode = "uniform";
  int trials = 200;
  std::uint64_t seed = 0;
  std::string out_prefix = "init_dist";
};

struct SweepArgs {
  int n = 7;
  int d = 32;
  std::string seeds = "0";
  int functions = 5;
  std::string checkpoints = "100,1000,10000";
  double lr = 0.003;
  int batch = 32;
  std::string init = "uniform";
  std::string out_prefix = "sweep";
};

int run_init_dist(const InitDistArgs& a, Globals& g) {
  rnn::InitDistConfig config;
  config.arity = a.n;
  config.hidden = a.d;
  config.mode = rnn::init_mode_from_string(a.mode);
  config.trials = a.trials;
  config.seed = a.seed;
  config.threads = g.threads;
  const auto result = rnn::random_init_bs_distribution(config);

  const nlohmann::json run_config = {{"command", "rnnlab init-dist"},
                                     {"version", BLOCKSENS_VERSION},
                                     {"seed", a.seed},
                                     {"n", a.n},
                                     {"d", a.d},
                                     {"mode", a.mode},
                                     {"trials", a.trials}};
  const nlohmann::json summary = {{"run_config", run_config},
                                  {"lstm_mean", result.lstm_mean},
                                  {"baseline_mean", result.baseline_mean},
                                  {"difference", result.baseline_mean - result.lstm_mean},
                                  {"degenerate", result.degenerate},
                                  {"lstm", result.lstm},
                                  {"baseline", result.baseline}};
  const std::string header = "# run_config " + run_config.dump() + "\n";
  atomic_write(a.out_prefix + ".summary.json", summary.dump(2) + "\n");
  atomic_write(a.out_prefix + ".lstm.csv",
               header + stats::histogram_csv(stats::histogram(result.lstm)));
  atomic_write(a.out_prefix + ".baseline.csv",
               header + stats::histogram_csv(stats::histogram(result.baseline)));
  g.out << "LSTM mean bs = " << result.lstm_mean << " over " << result.lstm.size()
        << " trial(s) (" << result.degenerate << " degenerate)\n"
        << "random Boolean mean bs = " << result.baseline_mean << "\n";
  return kExitOk;
}

int run_sweep(const SweepArgs& a, Globals& g) {
  rnn::SweepConfig config;
  config.arity = a.n;
  config.functions_per_level = a.functions;
  config.seeds = parse_u64_list(a.seeds);
  config.train.hidden = a.d;
  config.train.init = rnn::init_mode_from_string(a.init);
  config.train.adam.learning_rate = a.lr;
  config.train.batch_size = a.batch;
  config.train.checkpoints = parse_u64_list(a.checkpoints);
  config.threads = g.threads;
  const auto rows = rnn::learnability_sweep(config);

  const std::uint64_t last = config.train.checkpoints.back();
  std::vector<double> levels, finals;
  std::map<int, std::pair<double, int>> by_level;
  int diverged = 0;
  for (const auto& r : rows) {
    if (r.checkpoint != last) continue;
    if (r.diverged) {
      ++diverged;
      continue;
    }
    levels.push_back(r.level);
    finals.push_back(r.mse);
    by_level[r.level].first += r.mse;
    ++by_level[r.level].second;
  }
  nlohmann::json per_level = nlohmann::json::array();
  std::vector<double> level_keys, level_means;
  for (const auto& [level, acc] : by_level) {
    const double m = acc.first / acc.second;
    per_level.push_back({{"level", level}, {"runs", acc.second}, {"mean_final_mse", m}});
    level_keys.push_back(level);
    level_means.push_back(m);
  }
  const nlohmann::json run_config = {{"command", "rnnlab sweep"},
                                     {"version", BLOCKSENS_VERSION},
                                     {"seeds", config.seeds},
                                     {"n", a.n},
                                     {"d", a.d},
                                     {"functions", a.functions},
                                     {"checkpoints", config.train.checkpoints},
                                     {"lr", a.lr},
                                     {"batch", a.batch},
                                     {"init", a.init}};
  nlohmann::json summary = {{"run_config", run_config},
                            {"diverged", diverged},
                            {"per_level", per_level}};
  try {
    const auto pooled = stats::spearman(levels, finals);
    summary["spearman_pooled"] = {{"rho", pooled.r}, {"p", pooled.p}, {"n", pooled.n}};
    const auto means = stats::spearman(level_keys, level_means);
    summary["spearman_level_means"] = {{"rho", means.r}, {"p", means.p}, {"n", means.n}};
    g.out << "Spearman(level, final MSE) = " << pooled.r << " pooled, " << means.r
          << " over level means\n";
  } catch (const stats::StatsError& e) {
    g.err << "warning: no correlation: " << e.what() << "\n";
  }
  atomic_write(a.out_prefix + ".csv", "# run_config " + run_config.dump() + "\n" +
                                          rnn::sweep_csv(rows));
  atomic_write(a.out_prefix + ".summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

void register_rnnlab(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("rnnlab", "LSTM sensitivity experiments");
  cmd->require_subcommand(1);

  auto ia = std::make_shared<InitDistArgs>();
  auto* init = cmd->add_subcommand("init-dist", "Block sensitivity of randomly initialized LSTMs");
  init->add_option("--n", ia->n, "Input length")->check(CLI::Range(1, 10));
  init->add_option("--d", ia->d, "Hidden units")->check(CLI::Range(1, 4096));
  init->add_option("--mode", ia->mode, "uniform | gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  init->add_option("--trials", ia->trials, "Networks to sample")->check(CLI::Range(1, 1000000));
  init->add_option("--seed", ia->seed, "Seed");
  init->add_option("--out-prefix", ia->out_prefix, "Output path prefix");
  init->callback([ia, &g] { g.action = [ia, &g] { return run_init_dist(*ia, g); }; });

  auto sa = std::make_shared<SweepArgs>();
  auto* sweep = cmd->add_subcommand("sweep", "Fit LSTMs to targets of graded sensitivity");
  sweep->add_option("--n", sa->n, "Input length")->check(CLI::Range(1, kMaxArity));
  sweep->add_option("--d", sa->d, "Hidden units")->check(CLI::Range(1, 4096));
  sweep->add_option("--seeds", sa->seeds, "Comma-separated seeds");
  sweep->add_option("--functions", sa->functions, "Targets per level")
      ->check(CLI::Range(1, 1000));
  sweep->add_option("--checkpoints", sa->checkpoints, "Comma-separated ascending iterations");
  sweep->add_option("--lr", sa->lr, "Adam learning rate");
  sweep->add_option("--batch", sa->batch, "Batch size")->check(CLI::Range(1, 1 << 20));
  sweep->add_option("--init", sa->init, "uniform | gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  sweep->add_option("--out-prefix", sa->out_prefix, "Output path prefix");
  sweep->callback([sa, &g] { g.action = [sa, &g] { return run_sweep(*sa, g); }; });
}

}  // namespace blocksens::cli
