// SPDX-License-Identifier: Apache-2.0
//
// Oracle wire protocol: newline-delimited JSON over a subprocess's standard
// streams or a TCP socket.
//
//   {"op":"hello"}                 -> {"name", "roles", "num_classes", "serial_only"}
//   {"op":"sample","id","tokens","subset":[1-based],"m","seed"}
//                                  -> {"id", "samples":[[tokens], ...]}
//   {"op":"classify","id","tokens"} -> {"id", "scores":[reals]}
//   {"op":"shutdown"}              (no reply)
//
// Replies echo "id". A reply carrying {"error": string} fails the request.
#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "blocksens/seqsens.hpp"
#include "json.hpp"

namespace blocksens {

/// Line-oriented duplex transport. Lines exclude the trailing newline.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send(const std::string& line) = 0;
  /// Next line, or nullopt on end-of-stream or timeout.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
  /// True once the peer has hung up, waiting up to `timeout`.
  virtual bool wait_closed(std::chrono::milliseconds timeout) = 0;
  virtual std::string describe() const = 0;
};

/// Spawns `/bin/sh -c command` and talks over its stdin/stdout.
std::unique_ptr<LineChannel> spawn_channel(const std::string& command);
std::unique_ptr<LineChannel> tcp_channel(const std::string& host, int port);
/// "cmd:<shell command>" or "tcp:<host>:<port>".
std::unique_ptr<LineChannel> open_channel(const std::string& endpoint);

/// Records every line crossing `inner` as transcript events:
/// {"send": line}, {"recv": line}, {"eof": true}.
class RecordingChannel : public LineChannel {
 public:
  explicit RecordingChannel(std::unique_ptr<LineChannel> inner);
  void send(const std::string& line) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;
  bool wait_closed(std::chrono::milliseconds timeout) override;
  std::string describe() const override;
  const std::vector<nlohmann::json>& events() const { return events_; }

 private:
  std::unique_ptr<LineChannel> inner_;
  std::vector<nlohmann::json> events_;
};

/// Replays a recorded transcript. Sent lines must match the recording; a
/// mismatch is kept in divergences() and ends the replay.
class TranscriptChannel : public LineChannel {
 public:
  explicit TranscriptChannel(std::vector<nlohmann::json> events);
  void send(const std::string& line) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;
  bool wait_closed(std::chrono::milliseconds timeout) override;
  std::string describe() const override { return "transcript"; }
  const std::vector<std::string>& divergences() const { return divergences_; }

 private:
  std::deque<nlohmann::json> events_;
  std::vector<std::string> divergences_;
};

/// Reads a transcript file (one event object per line).
std::vector<nlohmann::json> read_transcript(const std::string& path);

/// Raised when the oracle answers with {"error": ...}.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleInfo {
  std::string name;
  std::vector<std::string> roles;
  int num_classes = 1;
  bool serial_only = false;
  bool has_role(const std::string& role) const;
};

/// Parses a hello reply; throws ProtocolViolation on a malformed one.
OracleInfo parse_hello(const nlohmann::json& reply);

namespace protocol {
nlohmann::json hello();
nlohmann::json sample(const std::string& id, const std::vector<std::string>& tokens,
                      const std::vector<int>& subset, int m, std::uint64_t seed);
nlohmann::json classify(const std::string& id, const std::vector<std::string>& tokens);
nlohmann::json shutdown();
}  // namespace protocol

/// Client side of the protocol. Requests are serialized on one channel.
class ExternalOracle {
 public:
  ExternalOracle(std::unique_ptr<LineChannel> channel, Vocabulary& vocab,
                 std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalOracle();

  const OracleInfo& info() const { return info_; }
  const std::string& endpoint() const { return endpoint_; }

  std::vector<Tokens> sample(std::span<const TokenId> x, const IndexSet& subset, int count,
                             std::uint64_t seed);
  std::vector<double> classify(std::span<const TokenId> x);
  void shutdown();

 private:
  nlohmann::json call(nlohmann::json request);

  std::mutex mutex_;
  std::unique_ptr<LineChannel> channel_;
  Vocabulary& vocab_;
  std::chrono::milliseconds timeout_;
  std::string endpoint_;
  OracleInfo info_;
  std::uint64_t next_id_ = 0;
  bool shut_down_ = false;
};

class ExternalSampler : public NeighborSampler {
 public:
  explicit ExternalSampler(std::shared_ptr<ExternalOracle> oracle);
  std::vector<Tokens> sample(std::span<const TokenId> x, const IndexSet& subset, int count,
                             std::uint64_t seed) const override;
  std::string name() const override;
  bool serial_only() const override { return oracle_->info().serial_only; }

 private:
  std::shared_ptr<ExternalOracle> oracle_;
};

class ExternalModel : public TaskModel {
 public:
  explicit ExternalModel(std::shared_ptr<ExternalOracle> oracle);
  int num_classes() const override { return oracle_->info().num_classes; }
  std::vector<double> evaluate(std::span<const TokenId> x) const override;
  std::string name() const override;
  bool serial_only() const override { return oracle_->info().serial_only; }

 private:
  std::shared_ptr<ExternalOracle> oracle_;
};

/// Deliberate misbehaviour for exercising conformance checks.
struct MockFaults {
  bool mutate_outside = false;   // sampler also rewrites a position outside P
  bool wrong_length = false;     // sampler drops the last token
  bool wrong_id = false;         // replies echo a different id
  bool score_out_of_range = false;
  bool truncate_replies = false; // replies cut mid-object
  bool silent_on_malformed = false;
};

/// In-process reference oracle: seeded random vocabulary tokens inside P,
/// hash-based scores in [-1,1]. Serial-only.
class MockOracle {
 public:
  explicit MockOracle(MockFaults faults = {});
  /// Reply line for one request line, or nullopt when no reply is due.
  std::optional<std::string> handle_line(const std::string& line);
  bool shutdown_requested() const { return shutdown_; }

  static const std::vector<std::string>& vocabulary();
  static double score(const std::vector<std::string>& tokens);

 private:
  nlohmann::json handle(const nlohmann::json& request);

  MockFaults faults_;
  bool shutdown_ = false;
};

/// Serves MockOracle over the given streams until shutdown or end of input.
int serve_mock(std::istream& in, std::ostream& out, MockFaults faults = {});

/// Channel that answers through an in-process MockOracle.
class MockChannel : public LineChannel {
 public:
  explicit MockChannel(MockFaults faults = {});
  void send(const std::string& line) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;
  bool wait_closed(std::chrono::milliseconds timeout) override;
  std::string describe() const override { return "in-process mock"; }

 private:
  MockOracle oracle_;
  std::deque<std::string> pending_;
};

}  // namespace blocksens
