// SPDX-License-Identifier: Apache-2.0
#include "blocksens/cli.hpp"

#include <algorithm>
#include <climits>
#include <iostream>
#include <set>
#include <unistd.h>

#include "blocksens/dataset.hpp"
#include "blocksens/oracle.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

const std::set<std::string> kCommands = {"boolfn",       "estimate", "verify-bound", "rnnlab",
                                         "oracle-check", "report",   "mock-oracle"};

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& e : v) {
      if (!joined.empty()) joined += ',';
      joined += json_scalar(e);
    }
    return joined;
  }
  return v.dump();
}

// Turns the --config file into flags placed right after the subcommand
// path, so explicit flags that follow win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto config = read_json_file(path);
  if (!config.is_object()) throw UsageError("config file must hold a JSON object");

  std::size_t at = args.size();
  for (std::size_t i = 0; i < args.size(); ++i)
    if (kCommands.count(args[i])) {
      at = i + 1;
      if (args[i] == "rnnlab" && at < args.size() && args[at].rfind("-", 0) != 0) ++at;
      break;
    }
  std::vector<std::string> flags;
  for (const auto& [key, value] : config.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back("--" + key);
      continue;
    }
    if (value.is_null() || value.is_object())
      throw UsageError("config key '" + key + "' must be a scalar or a list");
    flags.push_back("--" + key);
    flags.push_back(json_scalar(value));
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), flags.begin(), flags.end());
  return args;
}

}  // namespace

std::string self_executable() {
  char buf[PATH_MAX];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n <= 0) return "blocksens";
  return std::string(buf, static_cast<std::size_t>(n));
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Globals g{out, err, 1, {}};
  CLI::App app{"Block sensitivity analysis of Boolean functions and sequence classifiers",
               "blocksens"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string("blocksens ") + BLOCKSENS_VERSION);
  app.add_option("--threads", g.threads, "Worker threads (1 is the reference behaviour)")
      ->check(CLI::Range(1u, 1024u));
  std::string config_path;
  app.add_option("--config", config_path, "JSON file of flag values; explicit flags override");

  register_boolfn(app, g);
  register_estimate(app, g);
  register_verify_bound(app, g);
  register_rnnlab(app, g);
  register_oracle_check(app, g);
  register_report(app, g);
  register_mock_oracle(app, g);

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& v) {
    out << v.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  if (!g.action) {
    err << "error: incomplete command\n";
    return kExitInvalid;
  }
  try {
    return g.action();
  } catch (const ProtocolViolation& e) {
    err << "protocol violation: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const DatasetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace blocksens::cli
