#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "blocksens/oracle.hpp"
#include "blocksens/oracle_check.hpp"
#include "blocksens/samplers.hpp"
#include "doctest.h"

using namespace blocksens;
using nlohmann::json;

namespace {

const std::string kFixtures = BLOCKSENS_FIXTURES;
const std::string kCli = BLOCKSENS_CLI;

json reply_to(MockOracle& oracle, const json& request) {
  const auto line = oracle.handle_line(request.dump());
  REQUIRE(line);
  return json::parse(*line);
}

// Accepts one connection on 127.0.0.1 and answers it with a MockOracle.
class MockServer {
 public:
  MockServer() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    REQUIRE(::listen(fd_, 1) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~MockServer() {
    thread_.join();
    ::close(fd_);
  }
  int port() const { return port_; }

 private:
  void serve() {
    const int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) return;
    MockOracle oracle;
    std::string buffer;
    char chunk[4096];
    while (!oracle.shutdown_requested()) {
      const ssize_t n = ::read(conn, chunk, sizeof chunk);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
        const auto line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (auto reply = oracle.handle_line(line)) {
          const auto out = *reply + "\n";
          if (::write(conn, out.data(), out.size()) < 0) break;
        }
        if (oracle.shutdown_requested()) break;
      }
    }
    ::close(conn);
  }

  int fd_ = -1;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("mock hello and classify") {
  MockOracle oracle;
  const auto hello = reply_to(oracle, protocol::hello());
  CHECK(hello.at("name") == "blocksens-mock");
  CHECK(hello.at("num_classes") == 1);
  CHECK(hello.at("serial_only") == true);
  const auto info = parse_hello(hello);
  CHECK(info.has_role("sampler"));
  CHECK(info.has_role("model"));

  const std::vector<std::string> tokens = {"the", "plot", "was", "dull"};
  const auto a = reply_to(oracle, protocol::classify("c", tokens));
  const auto b = reply_to(oracle, protocol::classify("d", tokens));
  CHECK(a.at("id") == "c");
  CHECK(a.at("scores") == b.at("scores"));
  const double s = a.at("scores")[0].get<double>();
  CHECK(s == MockOracle::score(tokens));
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);
}

TEST_CASE("mock samples stay inside the subset and are seeded") {
  MockOracle oracle;
  const std::vector<std::string> tokens = {"a", "film", "was", "good", "."};
  const auto r = reply_to(oracle, protocol::sample("s", tokens, {2, 4}, 20, 8));
  const auto& samples = r.at("samples");
  REQUIRE(samples.size() == 20);
  for (const auto& s : samples) {
    REQUIRE(s.size() == tokens.size());
    CHECK(s[0] == "a");
    CHECK(s[2] == "was");
    CHECK(s[4] == ".");
  }
  CHECK(reply_to(oracle, protocol::sample("t", tokens, {2, 4}, 20, 8)).at("samples") == samples);
  CHECK(reply_to(oracle, protocol::sample("u", tokens, {2, 4}, 20, 9)).at("samples") != samples);
}

TEST_CASE("mock rejects malformed requests with error replies") {
  MockOracle oracle;
  const auto bad_json = oracle.handle_line("{\"op\":");
  REQUIRE(bad_json);
  CHECK(json::parse(*bad_json).contains("error"));
  auto err = reply_to(oracle, {{"op", "frobnicate"}, {"id", "m2"}});
  CHECK(err.contains("error"));
  CHECK(err.at("id") == "m2");
  err = reply_to(oracle, protocol::sample("m3", {"a", "b"}, {3}, 2, 1));
  CHECK(err.contains("error"));
  err = reply_to(oracle, {{"op", "sample"}, {"id", "m4"}, {"tokens", {"a"}}, {"subset", {1}}, {"m", 0}, {"seed", 1}});
  CHECK(err.contains("error"));
  CHECK_FALSE(oracle.handle_line(protocol::shutdown().dump()));
  CHECK(oracle.shutdown_requested());
}

TEST_CASE("serve_mock answers until shutdown") {
  std::istringstream in(protocol::hello().dump() + "\n" +
                        protocol::classify("c1", {"good"}).dump() + "\n" +
                        protocol::shutdown().dump() + "\n" +
                        protocol::classify("c2", {"bad"}).dump() + "\n");
  std::ostringstream out;
  CHECK(serve_mock(in, out) == 0);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 2);
}

TEST_CASE("external oracle over the in-process mock") {
  Vocabulary vocab;
  auto oracle = std::make_shared<ExternalOracle>(std::make_unique<MockChannel>(), vocab);
  ExternalSampler sampler(oracle);
  ExternalModel model(oracle);
  CHECK(sampler.serial_only());
  CHECK(model.num_classes() == 1);
  CHECK(sampler.name() == "external(blocksens-mock)");

  std::vector<std::string> words = {"the", "film", "was", "very", "good"};
  const auto x = vocab.encode(words);
  const auto P = IndexSet::range(5, 4, 5);
  const auto samples = sampler.sample(x, P, 6, 1);
  CHECK(samples.size() == 6);
  CHECK_NOTHROW(validate_samples(x, P, samples));
  CHECK(model.evaluate(x) == std::vector<double>{MockOracle::score(words)});

  std::vector<InputItem> items = {{"a", x}, {"b", vocab.encode(std::vector<std::string>{"a", "plot"})}};
  EstimatorConfig config;
  const auto summary = average_block_sensitivity_dataset(items, sampler, model, config, 4);
  CHECK(summary.failed == 0);
  CHECK(summary.inputs == 2);
}

TEST_CASE("external oracle surfaces contract violations") {
  Vocabulary vocab;
  std::vector<std::string> words = {"the", "film", "was", "good"};
  const auto x = vocab.encode(words);
  const auto P = IndexSet::range(4, 2, 2);

  auto run = [&](MockFaults faults) {
    auto oracle = std::make_shared<ExternalOracle>(std::make_unique<MockChannel>(faults), vocab,
                                                   std::chrono::milliseconds(200));
    ExternalSampler sampler(oracle);
    ExternalModel model(oracle);
    return estimate_input({"x", x}, sampler, model, EstimatorConfig{});
  };
  for (auto fault : {&MockFaults::mutate_outside, &MockFaults::wrong_length, &MockFaults::wrong_id}) {
    MockFaults faults;
    faults.*fault = true;
    const auto report = run(faults);
    CHECK(report.protocol_violation);
    CHECK(report.error);
  }
  MockFaults truncated;
  truncated.truncate_replies = true;
  CHECK_THROWS_AS(ExternalOracle(std::make_unique<MockChannel>(truncated), vocab), ProtocolViolation);

  MockFaults range;
  range.score_out_of_range = true;
  const auto clamped = run(range);
  CHECK_FALSE(clamped.error);
  CHECK(clamped.clamped_outputs > 0);

  auto oracle = std::make_shared<ExternalOracle>(std::make_unique<MockChannel>(), vocab);
  CHECK_THROWS_AS(oracle->sample(x, IndexSet::range(4, 1, 1), 0, 1), OracleError);
}

TEST_CASE("hello parsing") {
  CHECK_THROWS_AS(parse_hello(json::array()), ProtocolViolation);
  CHECK_THROWS_AS(parse_hello({{"roles", {"model"}}, {"num_classes", 1}}), ProtocolViolation);
  CHECK_THROWS_AS(parse_hello({{"name", "m"}, {"roles", {"model"}}}), ProtocolViolation);
  CHECK_THROWS_AS(parse_hello({{"name", "m"}, {"roles", {"sampler"}}, {"serial_only", "yes"}}),
                  ProtocolViolation);
  CHECK_THROWS_AS(parse_hello({{"error", "busy"}}), OracleError);
  const auto info = parse_hello({{"name", "s"}, {"roles", {"sampler"}}});
  CHECK_FALSE(info.serial_only);
  Vocabulary vocab;
  auto sampler_only = std::make_shared<ExternalOracle>(std::make_unique<TranscriptChannel>(std::vector<json>{
      {{"send", protocol::hello().dump()}},
      {{"recv", json{{"name", "s"}, {"roles", {"sampler"}}}.dump()}}}), vocab);
  CHECK_THROWS_AS(ExternalModel{sampler_only}, std::invalid_argument);
}

TEST_CASE("endpoint parsing") {
  CHECK_THROWS_AS(open_channel("http://x"), std::invalid_argument);
  CHECK_THROWS_AS(open_channel("cmd:"), std::invalid_argument);
  CHECK_THROWS_AS(open_channel("tcp:localhost"), std::invalid_argument);
  CHECK_THROWS_AS(open_channel("tcp:localhost:99999"), std::invalid_argument);
  CHECK_THROWS_AS(open_channel("tcp:localhost:80x"), std::invalid_argument);
}

TEST_CASE("oracle check passes the in-process mock") {
  MockChannel channel;
  const auto report = run_oracle_check(channel);
  CHECK(report.passed());
  CHECK(report.items.size() == 7);
  for (const auto& item : report.items) CHECK_MESSAGE(item.passed, item.name);
  CHECK(report.to_json().at("passed") == true);
}

TEST_CASE("oracle check itemizes each mock fault") {
  CheckOptions options;
  options.timeout = std::chrono::milliseconds(200);
  options.probe_timeout = std::chrono::milliseconds(50);
  const std::vector<std::pair<bool MockFaults::*, std::string>> cases = {
      {&MockFaults::mutate_outside, "sample"}, {&MockFaults::wrong_length, "sample"},
      {&MockFaults::wrong_id, "sample"},       {&MockFaults::score_out_of_range, "classify"},
      {&MockFaults::truncate_replies, "hello"}, {&MockFaults::silent_on_malformed, "malformed-requests"}};
  for (const auto& [fault, failing] : cases) {
    MockFaults faults;
    faults.*fault = true;
    MockChannel channel(faults);
    const auto report = run_oracle_check(channel, options);
    CHECK_FALSE(report.passed());
    bool found = false;
    for (const auto& item : report.items)
      if (item.name == failing) found = !item.passed && !item.violations.empty();
    CHECK_MESSAGE(found, failing);
  }
}

TEST_CASE("spawned mock oracle passes the check") {
  auto channel = spawn_channel("'" + kCli + "' mock-oracle");
  const auto report = run_oracle_check(*channel);
  CHECK(report.passed());
  CHECK(report.endpoint.rfind("cmd:", 0) == 0);
}

TEST_CASE("spawned command that exits early is a clean failure") {
  Vocabulary vocab;
  CHECK_THROWS_AS(ExternalOracle(spawn_channel("exit 0"), vocab, std::chrono::seconds(2)),
                  ProtocolViolation);
  auto channel = spawn_channel("exit 0");
  CHECK_FALSE(run_oracle_check(*channel).passed());
}

TEST_CASE("mock served over TCP") {
  MockServer server;
  auto channel = open_channel("tcp:127.0.0.1:" + std::to_string(server.port()));
  CHECK(channel->describe() == "tcp:127.0.0.1:" + std::to_string(server.port()));
  const auto report = run_oracle_check(*channel);
  CHECK(report.passed());
}

TEST_CASE("recorded transcript replays and matches the golden fixture") {
  RecordingChannel recorder(std::make_unique<MockChannel>());
  CHECK(run_oracle_check(recorder).passed());
  const auto golden = read_transcript(kFixtures + "/mock_transcript.jsonl");
  CHECK(recorder.events() == golden);

  TranscriptChannel replay(golden);
  CHECK(run_oracle_check(replay).passed());
  CHECK(replay.divergences().empty());
}

TEST_CASE("corrupted transcripts produce violations") {
  for (const char* name : {"corrupt_wrong_id", "corrupt_outside_p", "corrupt_wrong_length",
                           "corrupt_score_range", "corrupt_truncated"}) {
    TranscriptChannel replay(read_transcript(kFixtures + "/" + name + ".jsonl"));
    CheckOptions options;
    options.probe_timeout = std::chrono::milliseconds(1);
    const auto report = run_oracle_check(replay, options);
    CHECK_MESSAGE(!report.passed(), name);
    CHECK_MESSAGE(report.violation_count() > 0, name);
  }
}

TEST_CASE("transcript replay reports divergent requests") {
  std::vector<json> events = {{{"send", protocol::hello().dump()}},
                              {{"recv", json{{"name", "t"}, {"roles", {"model"}}, {"num_classes", 1}}.dump()}},
                              {{"send", "{\"op\":\"other\"}"}}};
  TranscriptChannel replay(events);
  replay.send(protocol::hello().dump());
  CHECK(replay.receive(std::chrono::milliseconds(0)));
  replay.send("{\"op\":\"different\"}");
  CHECK(replay.divergences().size() == 1);
  CHECK_FALSE(replay.receive(std::chrono::milliseconds(0)));

  const auto dir = std::filesystem::temp_directory_path() / "blocksens_bad_transcript.jsonl";
  std::ofstream(dir) << "{\"send\":\"x\"}\n[1]\n";
  CHECK_THROWS(read_transcript(dir.string()));
  std::filesystem::remove(dir);
}
