// SPDX-License-Identifier: Apache-2.0
#include "blocksens/oracle_check.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace blocksens {

using nlohmann::json;

std::size_t CheckReport::violation_count() const {
  std::size_t n = 0;
  for (const auto& item : items) n += item.violations.size();
  return n;
}

json CheckReport::to_json() const {
  json items_json = json::array();
  for (const auto& item : items)
    items_json.push_back(
        {{"check", item.name}, {"passed", item.passed}, {"violations", item.violations}});
  return {{"endpoint", endpoint},
          {"oracle", {{"name", info.name}, {"roles", info.roles},
                      {"num_classes", info.num_classes}, {"serial_only", info.serial_only}}},
          {"checks", items_json},
          {"violations", violation_count()},
          {"passed", passed()}};
}

std::string CheckReport::to_text() const {
  std::ostringstream out;
  out << "oracle-check " << endpoint << "\n";
  for (const auto& item : items) {
    out << (item.passed ? "PASS " : "FAIL ") << item.name << "\n";
    for (const auto& v : item.violations) out << "  - " << v << "\n";
  }
  out << violation_count() << " violation(s)\n";
  return out.str();
}

namespace {

const std::vector<std::string> kProbe = {"the", "film", "was", "not", "very", "good", "at", "all"};

class Session {
 public:
  Session(LineChannel& channel, const CheckOptions& options)
      : channel_(channel), options_(options) {}

  // Sends `request` and returns the parsed reply object, itemizing transport
  // and framing problems on `item`.
  std::optional<json> exchange(const std::string& request, CheckItem& item,
                               std::chrono::milliseconds timeout, bool reply_required = true) {
    channel_.send(request);
    auto line = channel_.receive(timeout);
    if (!line) {
      if (reply_required) fail(item, "no reply to " + request);
      return std::nullopt;
    }
    auto reply = json::parse(*line, nullptr, false);
    if (reply.is_discarded()) {
      fail(item, "unparseable reply (truncated or invalid JSON) to " + request + ": " + *line);
      return std::nullopt;
    }
    if (!reply.is_object()) {
      fail(item, "reply is not a JSON object: " + *line);
      return std::nullopt;
    }
    return reply;
  }

  std::optional<json> exchange(const json& request, CheckItem& item) {
    return exchange(request.dump(), item, options_.timeout);
  }

  static void fail(CheckItem& item, const std::string& what) {
    item.passed = false;
    item.violations.push_back(what);
  }

  // Common checks for replies to requests carrying an id.
  static bool answered(const json& reply, const std::string& id, CheckItem& item) {
    if (reply.contains("error")) {
      fail(item, "request " + id + " failed: " + reply.at("error").dump());
      return false;
    }
    if (!reply.contains("id") || reply.at("id") != id) {
      fail(item, "reply does not echo id \"" + id + "\": " + reply.dump());
      return false;
    }
    return true;
  }

  LineChannel& channel() { return channel_; }
  const CheckOptions& options() const { return options_; }

 private:
  LineChannel& channel_;
  const CheckOptions& options_;
};

std::optional<std::vector<std::vector<std::string>>> check_sample(
    Session& s, CheckItem& item, const std::string& id, const std::vector<int>& subset, int m,
    std::uint64_t seed) {
  const auto reply = s.exchange(protocol::sample(id, kProbe, subset, m, seed), item);
  if (!reply || !Session::answered(*reply, id, item)) return std::nullopt;
  if (!reply->contains("samples") || !reply->at("samples").is_array()) {
    Session::fail(item, id + ": reply lacks array \"samples\": " + reply->dump());
    return std::nullopt;
  }
  const auto& samples = reply->at("samples");
  bool ok = true;
  if (samples.size() != static_cast<std::size_t>(m)) {
    Session::fail(item, id + ": " + std::to_string(samples.size()) + " samples, expected " +
                            std::to_string(m));
    ok = false;
  }
  const std::set<int> inside(subset.begin(), subset.end());
  std::vector<std::vector<std::string>> out;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto& y = samples[j];
    const std::string tag = id + " sample " + std::to_string(j);
    bool strings = y.is_array();
    if (strings)
      for (const auto& t : y) strings = strings && t.is_string();
    if (!strings) {
      Session::fail(item, tag + " is not an array of strings: " + y.dump());
      ok = false;
      continue;
    }
    const auto tokens = y.get<std::vector<std::string>>();
    if (tokens.size() != kProbe.size()) {
      Session::fail(item, tag + " has length " + std::to_string(tokens.size()) + ", expected " +
                              std::to_string(kProbe.size()));
      ok = false;
    }
    for (std::size_t i = 0; i < std::min(tokens.size(), kProbe.size()); ++i)
      if (!inside.count(static_cast<int>(i) + 1) && tokens[i] != kProbe[i]) {
        Session::fail(item, tag + " changes position " + std::to_string(i + 1) +
                                " outside P (\"" + kProbe[i] + "\" -> \"" + tokens[i] + "\")");
        ok = false;
      }
    out.push_back(tokens);
  }
  if (!ok) return std::nullopt;
  return out;
}

std::optional<std::vector<double>> check_classify(Session& s, CheckItem& item,
                                                  const std::string& id,
                                                  const std::vector<std::string>& tokens,
                                                  int num_classes) {
  const auto reply = s.exchange(protocol::classify(id, tokens), item);
  if (!reply || !Session::answered(*reply, id, item)) return std::nullopt;
  if (!reply->contains("scores") || !reply->at("scores").is_array()) {
    Session::fail(item, id + ": reply lacks array \"scores\": " + reply->dump());
    return std::nullopt;
  }
  const auto& scores = reply->at("scores");
  bool ok = true;
  if (scores.size() != static_cast<std::size_t>(num_classes)) {
    Session::fail(item, id + ": " + std::to_string(scores.size()) + " scores, expected " +
                            std::to_string(num_classes));
    ok = false;
  }
  std::vector<double> out;
  for (const auto& v : scores) {
    if (!v.is_number()) {
      Session::fail(item, id + ": score is not a number: " + v.dump());
      ok = false;
      continue;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < -1.0 || d > 1.0) {
      Session::fail(item, id + ": score " + v.dump() + " outside [-1, 1]");
      ok = false;
    }
    out.push_back(d);
  }
  if (!ok) return std::nullopt;
  return out;
}

void check_error_reply(Session& s, CheckItem& item, const std::string& request,
                       const std::optional<std::string>& id) {
  const std::size_t before = item.violations.size();
  const auto reply = s.exchange(request, item, s.options().probe_timeout, false);
  if (!reply) {
    if (item.violations.size() == before) Session::fail(item, "no error reply to " + request);
    return;
  }
  if (!reply->contains("error") || !reply->at("error").is_string()) {
    Session::fail(item, "expected {\"error\": string} for " + request + ", got " + reply->dump());
    return;
  }
  if (id && (!reply->contains("id") || reply->at("id") != *id))
    Session::fail(item, "error reply does not echo id \"" + *id + "\": " + reply->dump());
}

}  // namespace

CheckReport run_oracle_check(LineChannel& channel, const CheckOptions& options) {
  Session s(channel, options);
  CheckReport report;
  report.endpoint = channel.describe();

  CheckItem hello{"hello", true, {}};
  bool hello_ok = false;
  if (const auto reply = s.exchange(protocol::hello(), hello)) {
    try {
      report.info = parse_hello(*reply);
      hello_ok = true;
    } catch (const std::exception& e) {
      Session::fail(hello, e.what());
    }
  }
  report.items.push_back(hello);

  if (hello_ok && report.info.has_role("sampler")) {
    CheckItem sample{"sample", true, {}};
    check_sample(s, sample, "s1", {2}, 3, 11);
    const auto reference = check_sample(s, sample, "s2", {1, 4, 6}, 5, 12);
    check_sample(s, sample, "s3", {1, 2, 3, 4, 5, 6, 7, 8}, 4, 13);
    check_sample(s, sample, "s4", {8}, 1, 14);
    report.items.push_back(sample);

    CheckItem determinism{"sample-determinism", true, {}};
    const auto again = check_sample(s, determinism, "s5", {1, 4, 6}, 5, 12);
    if (reference && again && *reference != *again)
      Session::fail(determinism, "same (tokens, subset, m, seed) gave different samples");
    else if (!reference && determinism.violations.empty())
      Session::fail(determinism, "no valid reference reply to compare against");
    report.items.push_back(determinism);
  }

  if (hello_ok && report.info.has_role("model")) {
    CheckItem classify{"classify", true, {}};
    const int d = report.info.num_classes;
    auto variant = kProbe;
    variant[5] = "bad";
    const auto reference = check_classify(s, classify, "c1", kProbe, d);
    check_classify(s, classify, "c2", variant, d);
    check_classify(s, classify, "c3", {"good"}, d);
    report.items.push_back(classify);

    CheckItem determinism{"classify-determinism", true, {}};
    const auto again = check_classify(s, determinism, "c4", kProbe, d);
    if (reference && again && *reference != *again)
      Session::fail(determinism, "same tokens gave different scores");
    else if (!reference && determinism.violations.empty())
      Session::fail(determinism, "no valid reference reply to compare against");
    report.items.push_back(determinism);
  }

  CheckItem malformed{"malformed-requests", true, {}};
  check_error_reply(s, malformed, "{\"op\": \"classify\", \"tokens\": [", std::nullopt);
  check_error_reply(s, malformed, json{{"op", "frobnicate"}, {"id", "m2"}}.dump(), "m2");
  if (hello_ok && report.info.has_role("sampler"))
    check_error_reply(s, malformed,
                      protocol::sample("m3", {"a", "b"}, {5}, 1, 0).dump(), "m3");
  report.items.push_back(malformed);

  CheckItem shutdown{"shutdown", true, {}};
  channel.send(protocol::shutdown().dump());
  if (!channel.wait_closed(options.timeout))
    Session::fail(shutdown, "endpoint did not close after shutdown");
  report.items.push_back(shutdown);
  return report;
}

}  // namespace blocksens
