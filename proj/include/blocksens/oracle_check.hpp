// SPDX-License-Identifier: Apache-2.0
//
// Conformance suite for oracle endpoints: drives hello, sample, classify,
// malformed requests and shutdown over a raw LineChannel and itemizes every
// deviation from the wire protocol.
#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "blocksens/oracle.hpp"
#include "json.hpp"

namespace blocksens {

struct CheckItem {
  std::string name;
  bool passed = true;
  std::vector<std::string> violations;
};

struct CheckReport {
  std::string endpoint;
  OracleInfo info;
  std::vector<CheckItem> items;

  std::size_t violation_count() const;
  bool passed() const { return violation_count() == 0; }
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct CheckOptions {
  std::chrono::milliseconds timeout{std::chrono::seconds(10)};
  /// Wait for replies that a conforming oracle may legitimately not send.
  std::chrono::milliseconds probe_timeout{std::chrono::seconds(2)};
};

CheckReport run_oracle_check(LineChannel& channel, const CheckOptions& options = {});

}  // namespace blocksens
