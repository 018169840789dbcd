// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "blocksens/seqsens.hpp"
#include "json.hpp"

namespace blocksens::cli {

/// Bad input from the user; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::ostream& out;
  std::ostream& err;
  unsigned threads = 1;
  std::function<int()> action;
};

void register_boolfn(CLI::App& app, Globals& g);
void register_estimate(CLI::App& app, Globals& g);
void register_verify_bound(CLI::App& app, Globals& g);
void register_rnnlab(CLI::App& app, Globals& g);
void register_oracle_check(CLI::App& app, Globals& g);
void register_report(CLI::App& app, Globals& g);
void register_mock_oracle(CLI::App& app, Globals& g);

/// Writes through a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json report_to_json(const SensitivityReport& report);

/// "1,2,3" -> {1,2,3}
std::vector<std::uint64_t> parse_u64_list(const std::string& text);

}  // namespace blocksens::cli
