// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <memory>

#include "blocksens/cli.hpp"
#include "blocksens/oracle.hpp"
#include "blocksens/oracle_check.hpp"
#include "common.hpp"

namespace blocksens::cli {

namespace {

const std::map<std::string, bool MockFaults::*> kFaults = {
    {"mutate-outside", &MockFaults::mutate_outside},
    {"wrong-length", &MockFaults::wrong_length},
    {"wrong-id", &MockFaults::wrong_id},
    {"score-out-of-range", &MockFaults::score_out_of_range},
    {"truncate-replies", &MockFaults::truncate_replies},
    {"silent-on-malformed", &MockFaults::silent_on_malformed},
};

MockFaults faults_from(const std::vector<std::string>& names) {
  MockFaults faults;
  for (const auto& name : names) {
    auto it = kFaults.find(name);
    if (it == kFaults.end()) throw UsageError("unknown fault '" + name + "'");
    faults.*(it->second) = true;
  }
  return faults;
}

struct CheckArgs {
  std::string cmd;
  std::string tcp;
  bool mock = false;
  std::string transcript;
  std::vector<std::string> faults;
  std::string record;
  std::string json_out;
  double timeout = 10.0;
  double probe_timeout = 2.0;
};

int run_check(const CheckArgs& a, Globals& g) {
  const int endpoints = !a.cmd.empty() + !a.tcp.empty() + a.mock + !a.transcript.empty();
  if (endpoints != 1) throw UsageError("choose exactly one of --cmd, --tcp, --mock, --transcript");
  if (!a.faults.empty() && !a.mock) throw UsageError("--fault applies to --mock only");

  std::unique_ptr<LineChannel> channel;
  TranscriptChannel* replay = nullptr;
  if (!a.cmd.empty()) {
    channel = spawn_channel(a.cmd);
  } else if (!a.tcp.empty()) {
    channel = open_channel("tcp:" + a.tcp);
  } else if (a.mock) {
    channel = std::make_unique<MockChannel>(faults_from(a.faults));
  } else {
    auto t = std::make_unique<TranscriptChannel>(read_transcript(a.transcript));
    replay = t.get();
    channel = std::move(t);
  }
  RecordingChannel* recorder = nullptr;
  if (!a.record.empty()) {
    auto r = std::make_unique<RecordingChannel>(std::move(channel));
    recorder = r.get();
    channel = std::move(r);
  }

  CheckOptions options;
  options.timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout * 1000));
  options.probe_timeout = std::chrono::milliseconds(static_cast<long long>(a.probe_timeout * 1000));
  auto report = run_oracle_check(*channel, options);
  if (replay) {
    report.endpoint = "transcript:" + a.transcript;
    if (!replay->divergences().empty())
      report.items.push_back({"transcript-replay", false, replay->divergences()});
  }

  if (recorder) {
    std::string lines;
    for (const auto& e : recorder->events()) lines += e.dump() + "\n";
    atomic_write(a.record, lines);
  }
  if (!a.json_out.empty()) atomic_write(a.json_out, report.to_json().dump(2) + "\n");
  g.out << report.to_text();
  return report.passed() ? kExitOk : kExitProtocol;
}

}  // namespace

void register_oracle_check(CLI::App& app, Globals& g) {
  auto a = std::make_shared<CheckArgs>();
  auto* cmd = app.add_subcommand("oracle-check", "Conformance suite for oracle endpoints");
  cmd->add_option("--cmd", a->cmd, "Spawn this shell command and talk over its stdio");
  cmd->add_option("--tcp", a->tcp, "Connect to HOST:PORT");
  cmd->add_flag("--mock", a->mock, "Check the built-in in-process mock");
  cmd->add_option("--transcript", a->transcript, "Replay a recorded transcript");
  cmd->add_option("--fault", a->faults, "Inject a fault into --mock (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--record", a->record, "Write the session transcript");
  cmd->add_option("--json", a->json_out, "Write the report as JSON");
  cmd->add_option("--timeout", a->timeout, "Seconds to wait for required replies");
  cmd->add_option("--probe-timeout", a->probe_timeout,
                  "Seconds to wait for replies to malformed requests");
  cmd->callback([a, &g] { g.action = [a, &g] { return run_check(*a, g); }; });
}

void register_mock_oracle(CLI::App& app, Globals& g) {
  auto faults = std::make_shared<std::vector<std::string>>();
  auto* cmd = app.add_subcommand("mock-oracle", "Serve the mock oracle on stdin/stdout");
  cmd->group("");
  cmd->add_option("--fault", *faults, "Inject a fault (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->callback([faults, &g] {
    g.action = [faults] { return serve_mock(std::cin, std::cout, faults_from(*faults)); };
  });
}

}  // namespace blocksens::cli
