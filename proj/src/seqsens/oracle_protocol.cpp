// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "blocksens/oracle.hpp"

namespace blocksens {

using nlohmann::json;

bool OracleInfo::has_role(const std::string& role) const {
  for (const auto& r : roles)
    if (r == role) return true;
  return false;
}

OracleInfo parse_hello(const json& reply) {
  if (!reply.is_object()) throw ProtocolViolation("hello reply is not an object");
  if (reply.contains("error"))
    throw OracleError("oracle refused hello: " + reply.at("error").dump());
  OracleInfo info;
  if (!reply.contains("name") || !reply.at("name").is_string())
    throw ProtocolViolation("hello reply lacks string \"name\"");
  info.name = reply.at("name").get<std::string>();
  if (!reply.contains("roles") || !reply.at("roles").is_array())
    throw ProtocolViolation("hello reply lacks array \"roles\"");
  for (const auto& r : reply.at("roles")) {
    if (!r.is_string()) throw ProtocolViolation("hello roles must be strings");
    info.roles.push_back(r.get<std::string>());
  }
  if (reply.contains("num_classes")) {
    if (!reply.at("num_classes").is_number_integer() || reply.at("num_classes").get<int>() < 1)
      throw ProtocolViolation("hello \"num_classes\" must be a positive integer");
    info.num_classes = reply.at("num_classes").get<int>();
  } else if (info.has_role("model")) {
    throw ProtocolViolation("hello reply of a model lacks \"num_classes\"");
  }
  if (reply.contains("serial_only")) {
    if (!reply.at("serial_only").is_boolean())
      throw ProtocolViolation("hello \"serial_only\" must be a boolean");
    info.serial_only = reply.at("serial_only").get<bool>();
  }
  return info;
}

namespace protocol {

json hello() { return {{"op", "hello"}}; }

json sample(const std::string& id, const std::vector<std::string>& tokens,
            const std::vector<int>& subset, int m, std::uint64_t seed) {
  return {{"op", "sample"}, {"id", id},  {"tokens", tokens},
          {"subset", subset}, {"m", m}, {"seed", seed}};
}

json classify(const std::string& id, const std::vector<std::string>& tokens) {
  return {{"op", "classify"}, {"id", id}, {"tokens", tokens}};
}

json shutdown() { return {{"op", "shutdown"}}; }

}  // namespace protocol

RecordingChannel::RecordingChannel(std::unique_ptr<LineChannel> inner)
    : inner_(std::move(inner)) {}

void RecordingChannel::send(const std::string& line) {
  events_.push_back({{"send", line}});
  inner_->send(line);
}

std::optional<std::string> RecordingChannel::receive(std::chrono::milliseconds timeout) {
  auto line = inner_->receive(timeout);
  if (line)
    events_.push_back({{"recv", *line}});
  else
    events_.push_back({{"eof", true}});
  return line;
}

bool RecordingChannel::wait_closed(std::chrono::milliseconds timeout) {
  const bool closed = inner_->wait_closed(timeout);
  if (closed) events_.push_back({{"eof", true}});
  return closed;
}

std::string RecordingChannel::describe() const { return inner_->describe(); }

TranscriptChannel::TranscriptChannel(std::vector<json> events)
    : events_(events.begin(), events.end()) {}

void TranscriptChannel::send(const std::string& line) {
  if (events_.empty() || !events_.front().contains("send")) {
    divergences_.push_back("transcript has no request matching " + line);
    events_.clear();
    return;
  }
  const auto recorded = events_.front().at("send").get<std::string>();
  events_.pop_front();
  if (recorded != line) {
    divergences_.push_back("request " + line + " differs from recorded " + recorded);
    events_.clear();
  }
}

std::optional<std::string> TranscriptChannel::receive(std::chrono::milliseconds) {
  if (events_.empty() || !events_.front().contains("recv")) {
    if (!events_.empty() && events_.front().contains("eof")) events_.pop_front();
    return std::nullopt;
  }
  auto line = events_.front().at("recv").get<std::string>();
  events_.pop_front();
  return line;
}

bool TranscriptChannel::wait_closed(std::chrono::milliseconds) {
  if (events_.empty()) return true;
  if (events_.front().contains("eof")) {
    events_.pop_front();
    return true;
  }
  return false;
}

std::vector<json> read_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read transcript " + path);
  std::vector<json> events;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() ||
        !(j.contains("send") || j.contains("recv") || j.contains("eof")))
      throw std::runtime_error("transcript line " + std::to_string(number) +
                               " is not a send/recv/eof event");
    events.push_back(std::move(j));
  }
  return events;
}

ExternalOracle::ExternalOracle(std::unique_ptr<LineChannel> channel, Vocabulary& vocab,
                               std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), vocab_(vocab), timeout_(timeout) {
  endpoint_ = channel_->describe();
  channel_->send(protocol::hello().dump());
  auto line = channel_->receive(timeout_);
  if (!line) throw ProtocolViolation("no hello reply from " + endpoint_);
  auto reply = json::parse(*line, nullptr, false);
  if (reply.is_discarded()) throw ProtocolViolation("unparseable hello reply: " + *line);
  info_ = parse_hello(reply);
}

ExternalOracle::~ExternalOracle() {
  try {
    shutdown();
  } catch (...) {
  }
}

json ExternalOracle::call(json request) {
  std::lock_guard lock(mutex_);
  if (shut_down_) throw std::logic_error("oracle already shut down");
  const std::string id = "q" + std::to_string(next_id_++);
  request["id"] = id;
  channel_->send(request.dump());
  auto line = channel_->receive(timeout_);
  if (!line)
    throw ProtocolViolation("no reply to " + request.at("op").get<std::string>() +
                            " request " + id + " from " + endpoint_);
  auto reply = json::parse(*line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object())
    throw ProtocolViolation("unparseable reply: " + *line);
  if (reply.contains("error"))
    throw OracleError("oracle error for " + id + ": " + reply.at("error").dump());
  if (!reply.contains("id") || reply.at("id") != id)
    throw ProtocolViolation("reply does not echo id " + id + ": " + *line);
  return reply;
}

std::vector<Tokens> ExternalOracle::sample(std::span<const TokenId> x, const IndexSet& subset,
                                           int count, std::uint64_t seed) {
  const auto reply =
      call(protocol::sample("", vocab_.decode(x), subset.positions(), count, seed));
  if (!reply.contains("samples") || !reply.at("samples").is_array())
    throw ProtocolViolation("sample reply lacks array \"samples\"");
  const auto& samples = reply.at("samples");
  if (samples.size() != static_cast<std::size_t>(count))
    throw ProtocolViolation("sampler returned " + std::to_string(samples.size()) +
                            " samples, expected " + std::to_string(count));
  std::vector<Tokens> out;
  for (const auto& s : samples) {
    if (!s.is_array()) throw ProtocolViolation("sample is not a token array");
    Tokens ids;
    for (const auto& t : s) {
      if (!t.is_string()) throw ProtocolViolation("sample token is not a string");
      ids.push_back(vocab_.intern(t.get<std::string>()));
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<double> ExternalOracle::classify(std::span<const TokenId> x) {
  const auto reply = call(protocol::classify("", vocab_.decode(x)));
  if (!reply.contains("scores") || !reply.at("scores").is_array())
    throw ProtocolViolation("classify reply lacks array \"scores\"");
  std::vector<double> scores;
  for (const auto& s : reply.at("scores")) {
    if (!s.is_number()) throw ProtocolViolation("score is not a number");
    scores.push_back(s.get<double>());
  }
  return scores;
}

void ExternalOracle::shutdown() {
  std::lock_guard lock(mutex_);
  if (shut_down_) return;
  shut_down_ = true;
  channel_->send(protocol::shutdown().dump());
  channel_->wait_closed(std::chrono::seconds(5));
}

ExternalSampler::ExternalSampler(std::shared_ptr<ExternalOracle> oracle)
    : oracle_(std::move(oracle)) {
  if (!oracle_->info().has_role("sampler"))
    throw std::invalid_argument("oracle '" + oracle_->info().name + "' is not a sampler");
}

std::vector<Tokens> ExternalSampler::sample(std::span<const TokenId> x, const IndexSet& subset,
                                            int count, std::uint64_t seed) const {
  return oracle_->sample(x, subset, count, seed);
}

std::string ExternalSampler::name() const { return "external(" + oracle_->info().name + ")"; }

ExternalModel::ExternalModel(std::shared_ptr<ExternalOracle> oracle)
    : oracle_(std::move(oracle)) {
  if (!oracle_->info().has_role("model"))
    throw std::invalid_argument("oracle '" + oracle_->info().name + "' is not a model");
}

std::vector<double> ExternalModel::evaluate(std::span<const TokenId> x) const {
  return oracle_->classify(x);
}

std::string ExternalModel::name() const { return "external(" + oracle_->info().name + ")"; }

}  // namespace blocksens
