// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "common.hpp"

namespace blocksens::cli {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw UsageError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw UsageError("cannot move output into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw UsageError(path.string() + " is not valid JSON");
  return j;
}

nlohmann::json report_to_json(const SensitivityReport& report) {
  nlohmann::json packing = nlohmann::json::array();
  for (const auto& set : report.winning_packing) packing.push_back(set.positions());
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : report.scores)
    scores.push_back({{"set", s.set.positions()},
                      {"variance", s.variance},
                      {"per_class_variances", s.per_class_variances},
                      {"samples_used", s.samples_used},
                      {"seed", s.seed}});
  nlohmann::json j = {{"input_id", report.input_id},
                      {"length", report.length},
                      {"bs_estimate", report.bs_estimate},
                      {"winning_packing", packing},
                      {"packing_mode", report.packing_mode},
                      {"sampler", report.sampler},
                      {"model", report.model},
                      {"seed", report.seed},
                      {"clamped_outputs", report.clamped_outputs},
                      {"scores", scores}};
  if (report.error) {
    j["error"] = *report.error;
    j["protocol_violation"] = report.protocol_violation;
  }
  return j;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("expected a comma-separated list of integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

}  // namespace blocksens::cli
