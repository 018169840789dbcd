// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "blocksens/cli.hpp"
#include "blocksens/dataset.hpp"
#include "blocksens/oracle.hpp"
#include "blocksens/samplers.hpp"
#include "blocksens/stats.hpp"
#include "blocksens/table_io.hpp"
#include "blocksens/task_models.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

struct EstimateArgs {
  std::string dataset;
  std::string corpus;
  std::string sampler;
  std::string model;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string prefix = "estimate";
  int max_span = 8;
  int chunks = 7;
  int window_center = 0;
  int window_width = 7;
  int samples = 10;
  bool no_original = false;
  bool full_family = false;
  std::string packing = "auto";
  double timeout = 60.0;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, sep);) out.push_back(item);
  return out;
}

// "k=2,lambda=0.5" -> map
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double number(const std::map<std::string, std::string>& kv, const std::string& key,
              double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad value for " + key + ": '" + it->second + "'");
  }
}

std::pair<std::string, std::string> head_tail(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

bool is_external(const std::string& spec) {
  return spec == "mock" || spec.rfind("cmd:", 0) == 0 || spec.rfind("tcp:", 0) == 0;
}

struct Oracles {
  std::shared_ptr<NeighborSampler> sampler;
  std::shared_ptr<TaskModel> model;
  std::vector<std::shared_ptr<ExternalOracle>> external;
};

std::shared_ptr<ExternalOracle> connect(const std::string& spec, Vocabulary& vocab,
                                        double timeout) {
  std::unique_ptr<LineChannel> channel;
  if (spec == "mock")
    channel = std::make_unique<MockChannel>();
  else
    channel = open_channel(spec);
  return std::make_shared<ExternalOracle>(
      std::move(channel), vocab,
      std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0)));
}

std::vector<TokenId> alphabet_from(const std::string& list, Vocabulary& vocab,
                                   const std::vector<TokenId>& fallback) {
  if (list.empty()) return fallback;
  std::vector<TokenId> out;
  for (const auto& t : split(list, ',')) {
    if (t.empty()) throw UsageError("empty token in alphabet list");
    out.push_back(vocab.intern(t));
  }
  return out;
}

Oracles resolve(const EstimateArgs& a, Vocabulary& vocab, const std::vector<TokenId>& alphabet,
                const std::vector<Tokens>& corpus) {
  Oracles o;
  std::shared_ptr<ExternalOracle> shared;
  if (is_external(a.sampler)) {
    shared = connect(a.sampler, vocab, a.timeout);
    o.external.push_back(shared);
    o.sampler = std::make_shared<ExternalSampler>(shared);
  } else {
    const auto [name, rest] = head_tail(a.sampler);
    if (name == "uniform") {
      o.sampler = std::make_shared<UniformTokenSampler>(alphabet_from(rest, vocab, alphabet));
    } else if (name == "exhaustive") {
      o.sampler = std::make_shared<ExhaustiveSampler>(alphabet_from(rest, vocab, alphabet));
    } else if (name == "markov" || name == "exhaustive-markov") {
      const auto kv = parse_kv(rest);
      for (const auto& [key, value] : kv)
        if (key != "k" && key != "lambda" && key != "burn_in" && key != "thinning")
          throw UsageError("unknown sampler parameter '" + key + "'");
      const int order = static_cast<int>(number(kv, "k", 2));
      const double lambda = number(kv, "lambda", 0.1);
      if (order < 1) throw UsageError("markov order k must be >= 1");
      if (!(lambda > 0.0)) throw UsageError("markov smoothing lambda must be > 0");
      auto chain = std::make_shared<MarkovModel>(order, lambda, alphabet);
      chain->fit(corpus);
      if (name == "markov") {
        GibbsOptions gibbs;
        gibbs.burn_in = static_cast<int>(number(kv, "burn_in", gibbs.burn_in));
        gibbs.thinning = static_cast<int>(number(kv, "thinning", gibbs.thinning));
        if (gibbs.burn_in < 0 || gibbs.thinning < 1)
          throw UsageError("burn_in must be >= 0 and thinning >= 1");
        o.sampler = std::make_shared<MarkovGibbsSampler>(chain, gibbs);
      } else {
        o.sampler = std::make_shared<ExhaustiveSampler>(alphabet, chain);
      }
    } else {
      throw UsageError("unknown sampler '" + a.sampler +
                       "' (uniform, exhaustive, markov:k=.., exhaustive-markov:k=.., "
                       "cmd:.., tcp:.., mock)");
    }
  }

  if (is_external(a.model)) {
    if (!shared || a.model != a.sampler) {
      shared = connect(a.model, vocab, a.timeout);
      o.external.push_back(shared);
    }
    o.model = std::make_shared<ExternalModel>(shared);
    return o;
  }
  const auto [name, rest] = head_tail(a.model);
  if (name == "parity") {
    std::map<std::string, double> values = {{"1", 1.0}, {"-1", -1.0}};
    if (!rest.empty()) {
      values.clear();
      for (const auto& [token, v] : parse_kv(rest)) values[token] = number({{token, v}}, token, 0);
    }
    o.model = std::make_shared<ParityModel>(vocab, values);
  } else if (name == "lexicon") {
    int dim = 0;
    const auto lexicon = lexicon_from_json(read_json_file(rest), dim);
    o.model = std::make_shared<LexiconBoeModel>(vocab, lexicon, dim);
  } else if (name == "dfa") {
    o.model = std::make_shared<DfaModel>(vocab, dfa_from_json(read_json_file(rest)));
  } else if (name == "majority") {
    const auto tokens = split(rest, ',');
    if (tokens.size() != 2) throw UsageError("majority model needs two tokens: majority:a,b");
    o.model = std::make_shared<MajorityTokenModel>(vocab, tokens[0], tokens[1]);
  } else if (name == "table") {
    const auto data = read_table_file(rest);
    o.model = std::make_shared<TruthTableModel>(
        vocab, TruthTable::from_values(data.arity, data.values));
  } else {
    throw UsageError("unknown model '" + a.model +
                     "' (parity, lexicon:FILE, dfa:FILE, majority:a,b, table:FILE, cmd:.., "
                     "tcp:.., mock)");
  }
  return o;
}

int run_estimate(const EstimateArgs& a, Globals& g) {
  EstimatorConfig config;
  config.seed = a.seed;
  config.family.max_span_len = a.max_span;
  config.family.num_chunks = a.chunks;
  config.family.samples_per_subset = a.samples;
  config.family.include_original = !a.no_original;
  if (a.window_center > 0) config.family.window = FocusWindow{a.window_center, a.window_width};
  config.family.validate();
  config.full_family = a.full_family;
  config.packing.mode = packing_mode_from_string(a.packing);

  const auto records = read_dataset(a.dataset);
  if (records.empty()) throw UsageError("dataset " + a.dataset + " has no inputs");
  std::vector<DatasetRecord> corpus_records;
  if (!a.corpus.empty()) corpus_records = read_dataset(a.corpus);

  // Sorted so alphabet order never depends on file order.
  std::set<std::string> token_set;
  for (const auto& r : records) token_set.insert(r.tokens.begin(), r.tokens.end());
  for (const auto& r : corpus_records) token_set.insert(r.tokens.begin(), r.tokens.end());
  Vocabulary vocab;
  std::vector<TokenId> alphabet;
  for (const auto& t : token_set) alphabet.push_back(vocab.intern(t));

  std::vector<InputItem> items;
  for (const auto& r : records) items.push_back({r.id, vocab.encode(r.tokens)});
  std::vector<Tokens> corpus;
  for (const auto& r : (corpus_records.empty() ? records : corpus_records))
    corpus.push_back(vocab.encode(r.tokens));

  const auto oracles = resolve(a, vocab, alphabet, corpus);
  const auto summary =
      average_block_sensitivity_dataset(items, *oracles.sampler, *oracles.model, config, g.threads);
  for (const auto& o : oracles.external) o->shutdown();

  nlohmann::json family = {{"max_span_len", config.family.max_span_len},
                           {"num_chunks", config.family.num_chunks},
                           {"samples_per_subset", config.family.samples_per_subset},
                           {"include_original", config.family.include_original},
                           {"window", nullptr}};
  if (config.family.window)
    family["window"] = {{"center", config.family.window->center},
                        {"width", config.family.window->width}};
  const nlohmann::json run_config = {{"command", "estimate"},
                                     {"version", BLOCKSENS_VERSION},
                                     {"seed", a.seed},
                                     {"dataset", a.dataset},
                                     {"corpus", a.corpus},
                                     {"sampler", a.sampler},
                                     {"model", a.model},
                                     {"family", family},
                                     {"full_family", a.full_family},
                                     {"packing", a.packing}};

  std::string reports = nlohmann::json{{"run_config", run_config}}.dump() + "\n";
  std::size_t clamped = 0;
  std::vector<double> values;
  for (const auto& r : summary.reports) {
    reports += report_to_json(r).dump() + "\n";
    clamped += r.clamped_outputs;
    if (!r.error) values.push_back(r.bs_estimate);
    if (r.error) g.err << "input " << r.input_id << ": " << *r.error << "\n";
  }
  nlohmann::json per_length = nlohmann::json::array();
  for (const auto& [len, bucket] : summary.per_length)
    per_length.push_back({{"length", len}, {"count", bucket.count}, {"mean", bucket.mean}});
  const nlohmann::json summary_json = {{"run_config", run_config},
                                       {"inputs", summary.inputs},
                                       {"failed", summary.failed},
                                       {"protocol_violations", summary.protocol_violations},
                                       {"mean", summary.mean},
                                       {"std_error", summary.std_error},
                                       {"clamped_outputs", clamped},
                                       {"per_length", per_length}};
  const std::string histogram = "# run_config " + run_config.dump() + "\n" +
                                stats::histogram_csv(stats::histogram(values));

  const std::filesystem::path dir(a.out_dir);
  atomic_write(dir / (a.prefix + ".reports.jsonl"), reports);
  atomic_write(dir / (a.prefix + ".summary.json"), summary_json.dump(2) + "\n");
  atomic_write(dir / (a.prefix + ".histogram.csv"), histogram);

  g.out << "mean bs = " << summary.mean << " (std error " << summary.std_error << ") over "
        << values.size() << " input(s)";
  if (summary.failed) g.out << ", " << summary.failed << " failed";
  g.out << "\n";
  if (clamped) g.err << "warning: " << clamped << " model output(s) clamped into [-1, 1]\n";
  return summary.protocol_violations > 0 ? kExitProtocol : kExitOk;
}

}  // namespace

void register_estimate(CLI::App& app, Globals& g) {
  auto a = std::make_shared<EstimateArgs>();
  auto* cmd = app.add_subcommand("estimate", "Estimate block sensitivity over a dataset");
  cmd->add_option("--dataset", a->dataset, "JSON-lines (.jsonl) or plain-text dataset")
      ->required();
  cmd->add_option("--sampler", a->sampler,
                  "uniform[:toks] | exhaustive[:toks] | markov:k=K[,lambda,burn_in,thinning] | "
                  "exhaustive-markov:k=K | cmd:CMD | tcp:HOST:PORT | mock")
      ->required();
  cmd->add_option("--model", a->model,
                  "parity[:tok=v,..] | lexicon:FILE | dfa:FILE | majority:A,B | table:FILE | "
                  "cmd:CMD | tcp:HOST:PORT | mock")
      ->required();
  cmd->add_option("--corpus", a->corpus, "Corpus for fitting Markov samplers (default: dataset)");
  cmd->add_option("--seed", a->seed, "Global seed");
  cmd->add_option("--out-dir", a->out_dir, "Output directory");
  cmd->add_option("--prefix", a->prefix, "Output file prefix");
  cmd->add_option("--max-span", a->max_span, "Longest contiguous span in the family");
  cmd->add_option("--chunks", a->chunks, "Number of chunks whose unions join the family");
  cmd->add_option("--window-center", a->window_center,
                  "Add all subsets of a window around this 1-based position");
  cmd->add_option("--window-width", a->window_width, "Width of the focus window");
  cmd->add_option("--samples", a->samples, "Samples per subset");
  cmd->add_flag("--no-original", a->no_original, "Leave the original input out of variances");
  cmd->add_flag("--full-family", a->full_family, "Use every subset (length <= 20)");
  cmd->add_option("--packing", a->packing, "exact | greedy | auto")
      ->check(CLI::IsMember({"exact", "greedy", "auto"}));
  cmd->add_option("--timeout", a->timeout, "Seconds to wait for each external oracle reply");
  cmd->callback([a, &g] { g.action = [a, &g] { return run_estimate(*a, g); }; });
}

}  // namespace blocksens::cli
