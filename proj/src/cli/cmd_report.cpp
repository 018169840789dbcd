// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "blocksens/cli.hpp"
#include "blocksens/stats.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

struct ReportArgs {
  std::string reports;
  std::string compare;
  std::string out;
};

struct Loaded {
  nlohmann::json run_config;
  std::vector<std::string> ids;
  std::map<std::string, std::pair<int, double>> by_id;  // length, bs
  std::size_t failed = 0;
};

Loaded load_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  Loaded out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw UsageError(path + " line " + std::to_string(number) + ": malformed JSON");
    if (j.contains("run_config")) {
      out.run_config = j.at("run_config");
      continue;
    }
    if (!j.contains("input_id") || !j.contains("bs_estimate") || !j.contains("length"))
      throw UsageError(path + " line " + std::to_string(number) + ": not a report");
    if (j.contains("error")) {
      ++out.failed;
      continue;
    }
    const auto id = j.at("input_id").get<std::string>();
    if (!out.by_id.emplace(id, std::make_pair(j.at("length").get<int>(),
                                              j.at("bs_estimate").get<double>()))
             .second)
      throw UsageError(path + " line " + std::to_string(number) + ": duplicate id " + id);
    out.ids.push_back(id);
  }
  return out;
}

int run_report(const ReportArgs& a, Globals& g) {
  const auto main = load_reports(a.reports);
  if (main.ids.empty()) throw UsageError(a.reports + " holds no successful reports");
  std::vector<double> bs, lengths;
  for (const auto& id : main.ids) {
    lengths.push_back(main.by_id.at(id).first);
    bs.push_back(main.by_id.at(id).second);
  }
  nlohmann::json result = {{"run_config", {{"command", "report"},
                                           {"version", BLOCKSENS_VERSION},
                                           {"reports", a.reports},
                                           {"compare", a.compare},
                                           {"source_run_config", main.run_config}}},
                           {"inputs", bs.size()},
                           {"failed", main.failed},
                           {"mean", stats::mean(bs)},
                           {"std_error", stats::std_error(bs)}};
  g.out << "inputs = " << bs.size() << " (" << main.failed << " failed)\n"
        << "mean bs = " << stats::mean(bs) << " (std error " << stats::std_error(bs) << ")\n";

  if (std::set<double>(lengths.begin(), lengths.end()).size() >= 2 && bs.size() >= 3) {
    const auto fit = stats::ols_one_predictor(lengths, bs);
    result["length_regression"] = {
        {"slope", fit.slope}, {"intercept", fit.intercept}, {"slope_p", fit.slope_p}};
    g.out << "bs ~ length: slope = " << fit.slope << " (p = " << fit.slope_p << ")\n";
  }
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : stats::histogram(bs))
    bins.push_back({{"bin_lower", b.lower}, {"bin_upper", b.upper}, {"count", b.count}});
  result["histogram"] = bins;

  if (!a.compare.empty()) {
    const auto other = load_reports(a.compare);
    std::vector<double> x, y;
    std::size_t not_above = 0;
    for (const auto& id : main.ids) {
      auto it = other.by_id.find(id);
      if (it == other.by_id.end()) continue;
      x.push_back(main.by_id.at(id).second);
      y.push_back(it->second.second);
      if (x.back() <= y.back()) ++not_above;
    }
    nlohmann::json cmp = {{"matched", x.size()}, {"first_not_above_second", not_above}};
    try {
      const auto p = stats::pearson(x, y);
      const auto s = stats::spearman(x, y);
      cmp["pearson"] = {{"r", p.r}, {"p", p.p}};
      cmp["spearman"] = {{"rho", s.r}, {"p", s.p}};
      g.out << "matched = " << x.size() << ", pearson r = " << p.r << ", spearman rho = " << s.r
            << "\n";
    } catch (const stats::StatsError& e) {
      cmp["error"] = e.what();
      g.err << "warning: no correlation: " << e.what() << "\n";
    }
    result["comparison"] = cmp;
  }
  if (!a.out.empty()) atomic_write(a.out, result.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

void register_report(CLI::App& app, Globals& g) {
  auto a = std::make_shared<ReportArgs>();
  auto* cmd = app.add_subcommand("report", "Summarize and compare estimate report files");
  cmd->add_option("--reports", a->reports, "Reports written by estimate")->required();
  cmd->add_option("--compare", a->compare, "Second report file, matched by input id");
  cmd->add_option("--out", a->out, "Write the summary as JSON");
  cmd->callback([a, &g] { g.action = [a, &g] { return run_report(*a, g); }; });
}

}  // namespace blocksens::cli
