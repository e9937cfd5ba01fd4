#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SQUID_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string stderr_of(const std::string& args) {
  const std::string cmd = std::string(SQUID_CLI) + " " + args + " 2>&1 >/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  pclose(pipe);
  return out;
}

/// Six-pair corpus plus a labelled set whose questions are the indexed ones.
fs::path fixture() {
  const auto dir = fs::temp_directory_path() / "squid_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"what is the capital of france", "paris"},  {"capital city of germany", "berlin"},
      {"who wrote hamlet", "william shakespeare"}, {"largest ocean on earth", "pacific ocean"},
      {"what currency does japan use", "yen"},     {"tallest mountain in the world", "everest"}};
  std::ofstream corpus(dir / "corpus.jsonl"), labelled(dir / "dev.jsonl");
  for (const auto& [q, a] : pairs) {
    corpus << json{{"question", q}, {"answer", a}}.dump() << '\n';
    labelled << json{{"question", q}, {"answers", {a}}}.dump() << '\n';
  }
  return dir;
}

}  // namespace

TEST_CASE("CLI end to end on a fixture") {
  const auto dir = fixture();
  const auto d = dir.string();
  const std::string enc = " --hash-dim 256 --dim 8";

  auto ingest = run("ingest --corpus " + d + "/corpus.jsonl --out " + d + "/clean.jsonl");
  REQUIRE(ingest.status == 0);
  CHECK(json::parse(ingest.out)["pairs"] == 6);

  REQUIRE(run("build-sparse --corpus " + d + "/clean.jsonl --out " + d + "/index.sqix").status == 0);
  REQUIRE(run("embed --corpus " + d + "/clean.jsonl --out " + d + "/vectors.sqem" + enc).status == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  const auto manifest = json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(manifest["artifacts"].contains("corpus"));
  CHECK(manifest["artifacts"].contains("sparse-index"));
  CHECK(manifest["artifacts"].contains("vectors"));

  const std::string m = "--manifest " + d + "/manifest.json ";

  SECTION("retrieve prints a cascade result") {
    const auto r = run(m + "retrieve --q \"who wrote hamlet\" --k 50" + enc);
    REQUIRE(r.status == 0);
    const auto body = json::parse(r.out);
    CHECK(body.contains("answer"));
    CHECK(body.contains("chosen_id"));
    CHECK(body["candidates"].is_array());
    CHECK(body["answer"] == "william shakespeare");
  }

  SECTION("eval with a perfect oracle reports 100") {
    const auto r = run(m + "eval --dataset " + d + "/dev.jsonl --k 1" + enc);
    REQUIRE(r.status == 0);
    CHECK(json::parse(r.out)["em"] == 100.0);
    const auto s1 = run(m + "eval --stage1-only --dataset " + d + "/dev.jsonl" + enc);
    CHECK(json::parse(s1.out)["em"] == 100.0);
  }

  SECTION("recall and bench") {
    const auto r = run(m + "recall --dataset " + d + "/dev.jsonl --ks 5,1");
    REQUIRE(r.status == 0);
    CHECK(json::parse(r.out)["recall_at_k"]["1"] == 100.0);
    const auto b = run(m + "bench --queries " + d + "/dev.jsonl --warmup 2 --mode concurrent" + enc);
    REQUIRE(b.status == 0);
    const auto body = json::parse(b.out);
    CHECK(body["total_queries"] == 6);
    CHECK(body["trials"].size() == 3);
    const auto sweep = run(m + "bench --queries " + d + "/dev.jsonl --ks 1,5 --csv " + d + "/tradeoff.csv" + enc);
    REQUIRE(sweep.status == 0);
    CHECK(json::parse(sweep.out).size() == 2);
    CHECK(fs::exists(dir / "tradeoff.csv"));
  }

  SECTION("tampered artifacts are refused") {
    std::ofstream(dir / "index.sqix", std::ios::app) << "x";
    const auto r = run(m + "eval --dataset " + d + "/dev.jsonl" + enc);
    CHECK(r.status == 1);
  }
}

TEST_CASE("CLI exit codes") {
  CHECK(run("ingest --corpus /nonexistent/corpus.jsonl").status == 2);
  CHECK(stderr_of("ingest --corpus /nonexistent/corpus.jsonl").find("/nonexistent/corpus.jsonl") != std::string::npos);
  CHECK(run("ingest --corpus x --bogus-flag").status == 1);
  CHECK(run("no-such-command").status == 1);
  CHECK(run("").status == 1);
  CHECK(run("--help").status == 0);

  const auto dir = fixture();
  std::ofstream(dir / "bad.jsonl") << "{\"question\":\"q\"}\n";
  CHECK(run("ingest --corpus " + (dir / "bad.jsonl").string()).status == 1);
}

TEST_CASE("options can come from a TOML config file") {
  const auto dir = fixture();
  std::ofstream(dir / "run.toml") << "[build-sparse]\nk1 = 0.9\nb = 0.4\n";
  const auto r = run("--config " + (dir / "run.toml").string() + " build-sparse --corpus " + (dir / "corpus.jsonl").string() +
                     " --out " + (dir / "i.sqix").string());
  REQUIRE(r.status == 0);
  const auto manifest = json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(manifest["config"]["k1"] == 0.9);
  CHECK(manifest["config"]["b"] == 0.4);
}
