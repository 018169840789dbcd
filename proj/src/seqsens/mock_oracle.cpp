// SPDX-License-Identifier: Apache-2.0
#include <istream>
#include <ostream>

#include "blocksens/oracle.hpp"
#include "blocksens/random.hpp"

namespace blocksens {

using nlohmann::json;

namespace {

constexpr int kMaxSamplesPerRequest = 100000;

json error_reply(const json& request, const std::string& message) {
  json reply = {{"error", message}};
  if (request.is_object() && request.contains("id")) reply["id"] = request.at("id");
  return reply;
}

bool string_array(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& t : j)
    if (!t.is_string()) return false;
  return true;
}

}  // namespace

MockOracle::MockOracle(MockFaults faults) : faults_(faults) {}

const std::vector<std::string>& MockOracle::vocabulary() {
  static const std::vector<std::string> words = {"the", "a",   "film", "plot", "was",
                                                 "not", "good", "bad", "very", "dull"};
  return words;
}

double MockOracle::score(const std::vector<std::string>& tokens) {
  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined.push_back(' ');
    joined += t;
  }
  const double u = static_cast<double>(mix64(fnv1a(joined)) >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

json MockOracle::handle(const json& request) {
  if (!request.is_object() || !request.contains("op") || !request.at("op").is_string())
    return error_reply(request, "request needs a string \"op\"");
  const auto op = request.at("op").get<std::string>();
  if (op == "hello")
    return {{"name", "blocksens-mock"},
            {"roles", {"sampler", "model"}},
            {"num_classes", 1},
            {"serial_only", true}};
  if (op == "shutdown") {
    shutdown_ = true;
    return nullptr;
  }
  if (op != "sample" && op != "classify") return error_reply(request, "unknown op '" + op + "'");
  if (!request.contains("id") || !request.at("id").is_string())
    return error_reply(request, "request needs a string \"id\"");
  if (!request.contains("tokens") || !string_array(request.at("tokens")))
    return error_reply(request, "\"tokens\" must be an array of strings");
  auto tokens = request.at("tokens").get<std::vector<std::string>>();
  json reply = {{"id", request.at("id")}};
  if (faults_.wrong_id) reply["id"] = request.at("id").get<std::string>() + "-stale";

  if (op == "classify") {
    reply["scores"] = {faults_.score_out_of_range ? 1.5 : score(tokens)};
    return reply;
  }

  const auto& subset = request.contains("subset") ? request.at("subset") : json();
  if (!subset.is_array()) return error_reply(request, "\"subset\" must be an array");
  std::vector<std::size_t> positions;
  std::vector<bool> inside(tokens.size(), false);
  for (const auto& p : subset) {
    if (!p.is_number_integer() || p.get<long long>() < 1 ||
        p.get<long long>() > static_cast<long long>(tokens.size()))
      return error_reply(request, "subset positions must be integers in [1, n]");
    positions.push_back(p.get<std::size_t>() - 1);
    inside[positions.back()] = true;
  }
  if (!request.contains("m") || !request.at("m").is_number_integer() ||
      request.at("m").get<long long>() < 1 ||
      request.at("m").get<long long>() > kMaxSamplesPerRequest)
    return error_reply(request, "\"m\" must be a positive integer");
  if (!request.contains("seed") || !request.at("seed").is_number_unsigned())
    return error_reply(request, "\"seed\" must be a non-negative integer");

  const auto& words = vocabulary();
  Rng rng(mix64(request.at("seed").get<std::uint64_t>()));
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  json samples = json::array();
  const int m = request.at("m").get<int>();
  for (int k = 0; k < m; ++k) {
    auto y = tokens;
    for (auto i : positions) y[i] = words[pick(rng)];
    if (faults_.mutate_outside) {
      for (std::size_t i = 0; i < y.size(); ++i)
        if (!inside[i]) {
          y[i] = y[i] == words[0] ? words[1] : words[0];
          break;
        }
    }
    if (faults_.wrong_length && !y.empty()) y.pop_back();
    samples.push_back(std::move(y));
  }
  reply["samples"] = std::move(samples);
  return reply;
}

std::optional<std::string> MockOracle::handle_line(const std::string& line) {
  const auto request = json::parse(line, nullptr, false);
  json reply;
  if (request.is_discarded()) {
    if (faults_.silent_on_malformed) return std::nullopt;
    reply = {{"error", "malformed JSON"}};
  } else {
    reply = handle(request);
  }
  if (reply.is_null()) return std::nullopt;
  auto text = reply.dump();
  if (faults_.truncate_replies) text.resize(text.size() / 2);
  return text;
}

int serve_mock(std::istream& in, std::ostream& out, MockFaults faults) {
  MockOracle oracle(faults);
  std::string line;
  while (!oracle.shutdown_requested() && std::getline(in, line)) {
    if (auto reply = oracle.handle_line(line)) out << *reply << '\n' << std::flush;
  }
  return 0;
}

MockChannel::MockChannel(MockFaults faults) : oracle_(faults) {}

void MockChannel::send(const std::string& line) {
  if (oracle_.shutdown_requested()) return;
  if (auto reply = oracle_.handle_line(line)) pending_.push_back(std::move(*reply));
}

std::optional<std::string> MockChannel::receive(std::chrono::milliseconds) {
  if (pending_.empty()) return std::nullopt;
  auto line = std::move(pending_.front());
  pending_.pop_front();
  return line;
}

bool MockChannel::wait_closed(std::chrono::milliseconds) {
  return oracle_.shutdown_requested();
}

}  // namespace blocksens
