// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <memory>
#include <sstream>

#include "blocksens/boolfn.hpp"
#include "blocksens/random.hpp"
#include "blocksens/table_io.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

struct BoolfnArgs {
  int parity = 0;
  int majority = 0;
  int random = 0;
  int spectrum = 0;
  int level = 1;
  std::string table;
  std::uint64_t seed = 0;
  bool binarize = false;
  bool stats = false;
  std::int64_t point = -1;
  std::string out;
  std::string spectrum_out;
  std::string report;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

std::string partition_text(const std::vector<SubsetMask>& blocks) {
  std::string text;
  for (const auto& b : blocks) {
    if (!text.empty()) text += ' ';
    text += '{';
    bool first = true;
    for (int p = 1; p <= 32; ++p)
      if (b.contains(p)) {
        if (!first) text += ',';
        text += std::to_string(p);
        first = false;
      }
    text += '}';
  }
  return text;
}

int run_boolfn(const BoolfnArgs& a, Globals& g) {
  const int sources = (a.parity > 0) + (a.majority > 0) + (a.random > 0) + (a.spectrum > 0) +
                      !a.table.empty();
  if (sources != 1)
    throw UsageError("choose exactly one of --parity, --majority, --random, --spectrum, --table");

  nlohmann::json config = {{"command", "boolfn"}, {"seed", a.seed}, {"binarize", a.binarize}};
  std::optional<TruthTable> f;
  if (a.parity > 0) {
    f = TruthTable::parity(a.parity);
    config["source"] = {{"parity", a.parity}};
  } else if (a.majority > 0) {
    f = TruthTable::majority(a.majority);
    config["source"] = {{"majority", a.majority}};
  } else if (a.random > 0) {
    f = sample_random_boolean(a.random, a.seed);
    config["source"] = {{"random", a.random}};
  } else if (a.spectrum > 0) {
    f = sample_spectrum_concentrated(a.spectrum, a.level, a.seed);
    config["source"] = {{"spectrum", a.spectrum}, {"level", a.level}};
  } else {
    const auto data = read_table_file(a.table);
    f = TruthTable::from_real_values(data.arity, data.values);
    config["source"] = {{"table", a.table}};
  }
  if (a.binarize) {
    const auto b = threshold_binarize(f->values());
    if (b.degenerate) g.err << "warning: binarized table is constant\n";
    f = b.table;
    config["threshold"] = b.threshold;
  }

  if (!a.out.empty()) atomic_write(a.out, encode_table_file(a.out, to_data(*f)));
  const auto spectrum = walsh_hadamard(*f);
  if (!a.spectrum_out.empty())
    atomic_write(a.spectrum_out, encode_table_file(a.spectrum_out, to_data(spectrum)));

  // JSON on stdout replaces the text summary.
  std::ostringstream discard;
  std::ostream& text = a.report == "-" ? discard : g.out;
  nlohmann::json stats;
  if (a.stats || !a.report.empty()) {
    const int n = f->arity();
    AverageBlockOptions options;
    options.seed = a.seed;
    options.threads = g.threads;
    std::vector<std::uint32_t> inputs;
    if (f->size() <= options.exhaustive_limit) {
      for (std::uint32_t x = 0; x < f->size(); ++x) inputs.push_back(x);
    } else {
      Rng rng(derive_seed(a.seed, {0x626f6f6cULL}));
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(f->size() - 1));
      for (std::size_t i = 0; i < options.sample_size; ++i) inputs.push_back(pick(rng));
    }
    double s_max = 0.0, s_sum = 0.0;
    for (auto x : inputs) {
      const double s = sensitivity_at(*f, x);
      s_max = std::max(s_max, s);
      s_sum += s;
    }
    stats = {{"arity", n},
             {"inputs", inputs.size()},
             {"sampled", inputs.size() != f->size()},
             {"s", s_max},
             {"s_mean", s_sum / static_cast<double>(inputs.size())},
             {"as", spectral_average_sensitivity(spectrum)}};
    if (n <= kMaxExactBlockArity) {
      double bs_max = 0.0, bs_sum = 0.0;
      for (auto x : inputs) {
        const double bs = block_sensitivity_exact(*f, x).value;
        bs_max = std::max(bs_max, bs);
        bs_sum += bs;
      }
      stats["bs"] = bs_max;
      stats["bs_mean"] = bs_sum / static_cast<double>(inputs.size());
    }
    if (a.stats) {
      text << "arity = " << n << "\n";
      text << "s = " << fmt(stats["s"].get<double>()) << "\n";
      text << "bs = " << (stats.contains("bs") ? fmt(stats["bs"].get<double>()) : "n/a") << "\n";
      text << "as = " << fmt(stats["as"].get<double>()) << "\n";
      text << "s_mean = " << fmt(stats["s_mean"].get<double>()) << "\n";
      if (stats.contains("bs_mean"))
        text << "bs_mean = " << fmt(stats["bs_mean"].get<double>()) << "\n";
      if (stats["sampled"].get<bool>())
        text << "(statistics over " << inputs.size() << " sampled inputs)\n";
    }
  }

  if (a.point >= 0) {
    if (static_cast<std::size_t>(a.point) >= f->size())
      throw UsageError("--point must be below 2^n = " + std::to_string(f->size()));
    const auto x = static_cast<std::uint32_t>(a.point);
    const double s = sensitivity_at(*f, x);
    text << "s(x) = " << fmt(s) << "\n";
    nlohmann::json point = {{"x", x}, {"s", s}};
    if (f->arity() <= kMaxExactBlockArity) {
      const auto bs = block_sensitivity_exact(*f, x);
      text << "bs(x) = " << fmt(bs.value) << "\n";
      text << "partition = " << partition_text(bs.partition) << "\n";
      point["bs"] = bs.value;
      nlohmann::json blocks = nlohmann::json::array();
      for (const auto& b : bs.partition) blocks.push_back(b.bits);
      point["partition_masks"] = blocks;
    }
    stats["point"] = point;
  }

  if (!a.report.empty()) {
    const auto body = nlohmann::json{{"run_config", config}, {"stats", stats}}.dump(2) + "\n";
    if (a.report == "-")
      g.out << body;
    else
      atomic_write(a.report, body);
  }
  return 0;
}

}  // namespace

void register_boolfn(CLI::App& app, Globals& g) {
  auto args = std::make_shared<BoolfnArgs>();
  auto* cmd = app.add_subcommand("boolfn", "Exact sensitivity of a function on {-1,1}^n");
  cmd->add_option("--parity", args->parity, "Parity on n inputs")->check(CLI::Range(1, kMaxArity));
  cmd->add_option("--majority", args->majority, "Majority on n inputs (ties +1)")
      ->check(CLI::Range(1, kMaxArity));
  cmd->add_option("--random", args->random, "Uniformly random Boolean function on n inputs")
      ->check(CLI::Range(1, kMaxArity));
  cmd->add_option("--spectrum", args->spectrum,
                  "Real function with spectrum on degrees level-1..level+1")
      ->check(CLI::Range(1, kMaxArity));
  cmd->add_option("--level", args->level, "Degree level for --spectrum");
  cmd->add_option("--table", args->table, "Read a table (.json or .bin)");
  cmd->add_option("--seed", args->seed, "Seed for random tables and input sampling");
  cmd->add_flag("--binarize", args->binarize, "Threshold outputs to +-1 maximizing variance");
  cmd->add_flag("--stats", args->stats, "Print s, bs, as and their means");
  cmd->add_option("--point", args->point, "Print s and bs at this table index");
  cmd->add_option("--out", args->out, "Write the table (.json or .bin)");
  cmd->add_option("--spectrum-out", args->spectrum_out, "Write the Fourier spectrum");
  cmd->add_option("--report", args->report, "Write statistics and run config as JSON (- for stdout)");
  cmd->callback([args, &g] { g.action = [args, &g] { return run_boolfn(*args, g); }; });
}

}  // namespace blocksens::cli
