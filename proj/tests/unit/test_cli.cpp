#include <filesystem>
#include <fstream>
#include <sstream>

#include "blocksens/cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using blocksens::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kDataset =
    "{\"id\":\"a\",\"tokens\":[\"1\",\"-1\",\"1\",\"1\",\"-1\"]}\n"
    "{\"id\":\"b\",\"tokens\":[\"-1\",\"-1\",\"1\"]}\n"
    "{\"id\":\"c\",\"tokens\":[\"1\",\"1\",\"1\",\"-1\",\"1\",\"1\"]}\n";

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = invoke({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out == "blocksens 0.3.0\n");
  CHECK(invoke({}).code == blocksens::cli::kExitInvalid);
  CHECK(invoke({"frobnicate"}).code == blocksens::cli::kExitInvalid);
  CHECK(invoke({"boolfn", "--parity", "3", "--majority", "3"}).code == blocksens::cli::kExitInvalid);
}

TEST_CASE("boolfn statistics") {
  const auto r = invoke({"boolfn", "--parity", "6", "--stats"});
  CHECK(r.code == 0);
  CHECK(r.out.find("bs = 6") != std::string::npos);
  CHECK(r.out.find("as = 6") != std::string::npos);

  TempDir dir("blocksens_cli_boolfn");
  const auto table = (dir / "maj.json").string();
  CHECK(invoke({"boolfn", "--majority", "3", "--out", table}).code == 0);
  const auto j = nlohmann::json::parse(slurp(table));
  CHECK(j.at("arity") == 3);
  CHECK(j.at("values").size() == 8);
  const auto point = invoke({"boolfn", "--table", table, "--point", "0", "--report", "-"});
  CHECK(point.code == 0);
  CHECK(nlohmann::json::parse(point.out).at("stats").at("point").at("bs") == 1.0);
}

TEST_CASE("estimate output is independent of the thread count") {
  TempDir dir("blocksens_cli_estimate");
  write(dir / "data.jsonl", kDataset);
  for (const char* threads : {"1", "3"})
    CHECK(invoke({"--threads", threads, "estimate", "--dataset", (dir / "data.jsonl").string(),
                  "--sampler", "uniform", "--model", "parity", "--seed", "4", "--out-dir",
                  (dir / ("t" + std::string(threads))).string()})
              .code == 0);
  for (const char* leaf : {"estimate.reports.jsonl", "estimate.summary.json", "estimate.histogram.csv"}) {
    const auto a = slurp(dir / "t1" / leaf);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "t3" / leaf));
  }
}

TEST_CASE("malformed dataset reports its line and exits 1") {
  TempDir dir("blocksens_cli_bad");
  write(dir / "bad.jsonl", "{\"id\":\"a\",\"tokens\":[\"1\"]}\n\n{\"id\":\"b\" oops\n");
  const auto r = invoke({"estimate", "--dataset", (dir / "bad.jsonl").string(), "--sampler",
                         "uniform", "--model", "parity", "--out-dir", dir.str()});
  CHECK(r.code == blocksens::cli::kExitInvalid);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "estimate.summary.json"));
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir dir("blocksens_cli_config");
  write(dir / "data.jsonl", kDataset);
  write(dir / "config.json", "{\"seed\": 9, \"samples\": 4}");
  CHECK(invoke({"--config", (dir / "config.json").string(), "estimate", "--dataset",
                (dir / "data.jsonl").string(), "--sampler", "uniform", "--model", "parity",
                "--seed", "5", "--out-dir", dir.str()})
            .code == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "estimate.summary.json"));
  CHECK(summary.at("run_config").at("seed") == 5);
  CHECK(summary.at("run_config").at("family").at("samples_per_subset") == 4);
}

TEST_CASE("verify-bound passes on small random models") {
  TempDir dir("blocksens_cli_verify");
  const auto r = invoke({"verify-bound", "--trials", "20", "--k", "2", "--max-n", "8", "--out",
                         (dir / "cert.json").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "cert.json"));
  CHECK(j.is_object());
}

TEST_CASE("oracle-check against the mock and a faulty mock") {
  CHECK(invoke({"oracle-check", "--mock"}).code == 0);
  const auto bad = invoke({"oracle-check", "--mock", "--fault", "wrong-id", "--timeout", "0.2",
                           "--probe-timeout", "0.05"});
  CHECK(bad.code == blocksens::cli::kExitProtocol);
  CHECK(bad.out.find("FAIL sample") != std::string::npos);
}

TEST_CASE("report summarizes a reports file") {
  TempDir dir("blocksens_cli_report");
  write(dir / "data.jsonl", kDataset);
  REQUIRE(invoke({"estimate", "--dataset", (dir / "data.jsonl").string(), "--sampler",
                  "exhaustive", "--model", "parity", "--out-dir", dir.str()})
              .code == 0);
  const auto r = invoke({"report", "--reports", (dir / "estimate.reports.jsonl").string(),
                         "--compare", (dir / "estimate.reports.jsonl").string()});
  CHECK(r.code == 0);
  CHECK_FALSE(r.out.empty());
}
