// SPDX-License-Identifier: Apache-2.0
#include "blocksens/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace blocksens {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<DatasetRecord> parse_dataset_jsonl(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw DatasetError("line " + std::to_string(number) + ": malformed JSON object", number);
    DatasetRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.tokens = j.at("tokens").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("line " + std::to_string(number) +
                             ": needs string \"id\" and string array \"tokens\"",
                         number);
    }
    if (r.tokens.empty())
      throw DatasetError("line " + std::to_string(number) + ": empty token list", number);
    if (!ids.insert(r.id).second)
      throw DatasetError("line " + std::to_string(number) + ": duplicate id '" + r.id + "'",
                         number);
    if (j.contains("label")) r.label = j.at("label");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> parse_dataset_text(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    out.push_back({std::to_string(number), std::move(tokens), std::nullopt});
  }
  return out;
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  const auto ext = path.extension();
  if (ext == ".jsonl" || ext == ".json") return parse_dataset_jsonl(in);
  return parse_dataset_text(in);
}

}  // namespace blocksens
