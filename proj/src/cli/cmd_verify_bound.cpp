// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <memory>

#include "blocksens/cli.hpp"
#include "blocksens/linbound.hpp"
#include "blocksens/parallel.hpp"
#include "blocksens/random.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

struct VerifyArgs {
  int trials = 100;
  int k = 1;
  int n = 0;
  int max_n = 12;
  int dim = 2;
  double cap = 1.0;
  std::string head = "mixed";
  int alphabet = 2;
  std::uint64_t seed = 0;
  std::string out;
  std::string models_out;
};

int run_verify(const VerifyArgs& a, Globals& g) {
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  if (a.k < 1) throw UsageError("--k must be >= 1");
  if (a.n != 0 && a.n <= a.k) throw UsageError("--n must exceed k");
  if (a.n == 0 && a.max_n <= a.k) throw UsageError("--max-n must exceed k");
  const Squash heads[] = {Squash::kTanh, Squash::kLogistic, Squash::kIdentity};

  struct Trial {
    int n = 0;
    Squash head = Squash::kTanh;
    std::uint64_t seed = 0;
    std::optional<KGramAveragingModel> model;
    Certificate cert;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(a.trials));
  for (std::size_t t = 0; t < trials.size(); ++t) {
    auto& trial = trials[t];
    trial.seed = derive_seed(a.seed, {static_cast<std::uint64_t>(t)});
    trial.n = a.n != 0 ? a.n
                       : a.k + 1 + static_cast<int>(mix64(trial.seed) %
                                                    static_cast<std::uint64_t>(a.max_n - a.k));
    trial.head = a.head == "mixed" ? heads[t % 3] : squash_from_string(a.head);
  }
  parallel_for(trials.size(), g.threads, [&](std::size_t t) {
    auto& trial = trials[t];
    RandomModelSpec spec;
    spec.k = a.k;
    spec.feature_dim = a.dim;
    spec.c_cap = a.cap;
    spec.squash = trial.head;
    spec.alphabet_size = a.alphabet;
    spec.max_length = trial.n;
    trial.model = random_model(spec, trial.seed);
    CertifyOptions options;
    options.seed = trial.seed;
    trial.cert = certify_bound(*trial.model, trial.n, options);
  });

  std::size_t violations = 0, block_violations = 0;
  double max_ratio = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  std::string models;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& trial = trials[t];
    violations += trial.cert.violations;
    block_violations += trial.cert.block_violations;
    max_ratio = std::max(max_ratio, trial.cert.ratio());
    auto row = trial.cert.to_json();
    row["trial"] = t;
    row["k"] = a.k;
    row["head"] = to_string(trial.head);
    row["C"] = trial.model->C();
    row["L"] = trial.model->L();
    row["model_seed"] = trial.seed;
    rows.push_back(row);
    if (!a.models_out.empty()) models += trial.model->to_json().dump() + "\n";
  }
  const bool pass = violations == 0 && block_violations == 0;
  const nlohmann::json run_config = {{"command", "verify-bound"}, {"version", BLOCKSENS_VERSION},
                                     {"seed", a.seed},            {"trials", a.trials},
                                     {"k", a.k},                  {"n", a.n},
                                     {"max_n", a.max_n},          {"feature_dim", a.dim},
                                     {"c_cap", a.cap},            {"head", a.head},
                                     {"alphabet_size", a.alphabet}};
  const nlohmann::json certificate = {{"run_config", run_config},
                                      {"trials", a.trials},
                                      {"violations", violations},
                                      {"block_violations", block_violations},
                                      {"max_ratio", max_ratio},
                                      {"pass", pass},
                                      {"results", rows}};
  if (!a.out.empty()) atomic_write(a.out, certificate.dump(2) + "\n");
  if (!a.models_out.empty()) atomic_write(a.models_out, models);
  g.out << "trials = " << a.trials << ", violations = " << violations
        << ", block violations = " << block_violations << ", max bs/bound = " << max_ratio
        << "\n"
        << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitInvalid;
}

}  // namespace

void register_verify_bound(CLI::App& app, Globals& g) {
  auto a = std::make_shared<VerifyArgs>();
  auto* cmd = app.add_subcommand(
      "verify-bound", "Check bs <= 2 L^2 C^2 k^2 on random windowed averaging models");
  cmd->add_option("--trials", a->trials, "Number of random models");
  cmd->add_option("--k", a->k, "Window size");
  cmd->add_option("--n", a->n, "Sequence length (default: random in k+1..max-n)");
  cmd->add_option("--max-n", a->max_n, "Largest random length")
      ->check(CLI::Range(2, kMaxCertifyLength));
  cmd->add_option("--dim", a->dim, "Feature dimension");
  cmd->add_option("--cap", a->cap, "Feature norm cap");
  cmd->add_option("--head", a->head, "tanh | logistic | identity | mixed")
      ->check(CLI::IsMember({"tanh", "logistic", "identity", "mixed"}));
  cmd->add_option("--alphabet", a->alphabet, "Alphabet size")->check(CLI::Range(2, 64));
  cmd->add_option("--seed", a->seed, "Seed");
  cmd->add_option("--out", a->out, "Write the JSON certificate");
  cmd->add_option("--models-out", a->models_out, "Write the generated models as JSON lines");
  cmd->callback([a, &g] { g.action = [a, &g] { return run_verify(*a, g); }; });
}

}  // namespace blocksens::cli
