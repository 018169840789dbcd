// SPDX-License-Identifier: Apache-2.0
//
// Dataset input. JSON-lines: {"id": string, "tokens": [string, ...],
// "label": optional}, one object per line, blank lines skipped. Plain text:
// one whitespace-tokenized sentence per line, ids "1", "2", ... by line.
#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace blocksens {

struct DatasetRecord {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<nlohmann::json> label;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<DatasetRecord> parse_dataset_jsonl(std::istream& in);
std::vector<DatasetRecord> parse_dataset_text(std::istream& in);

/// ".jsonl"/".json" files are JSON-lines, anything else plain text.
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

std::vector<std::string> split_whitespace(const std::string& line);

}  // namespace blocksens
