#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bed/io.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BED_CLI_PATH) + " " + args +
                          " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "bed_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli exit codes") {
  // Unknown subcommand and unknown flag -> usage (2).
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("gen-data --no-such-flag 1") == 2);
  CHECK(run_cli("") == 2);

  // Missing input file -> io error (3).
  CHECK(run_cli("candidates --kb-entities /no/e.jsonl --kb-relations /no/r.jsonl"
                " --data /no/d.jsonl --out /tmp/bed_cli_x") == 3);

  // Malformed data -> data error (4).
  auto dir = work_dir();
  std::ofstream(dir / "bad.jsonl") << "{broken\n";
  std::ofstream(dir / "rels.jsonl") << R"({"id":"R0","name":"r"})" << "\n";
  CHECK(run_cli("candidates --kb-entities " + (dir / "bad.jsonl").string() +
                " --kb-relations " + (dir / "rels.jsonl").string() +
                " --data " + (dir / "bad.jsonl").string() + " --out " +
                (dir / "out").string()) == 4);
}

TEST_CASE("cli pipeline end to end on a tiny fixture") {
  auto dir = work_dir() / "pipeline";
  fs::remove_all(dir);
  const std::string fixture = (dir / "fixture").string();
  const std::string run = (dir / "run").string();

  REQUIRE(run_cli("gen-data --out " + fixture +
                  " --seed 7 --entities 40 --relations 4 --sentences 30") == 0);
  for (const char* f : {"entities.jsonl", "relations.jsonl", "train.jsonl",
                        "dev.jsonl", "test.jsonl", "config.json"}) {
    CHECK(fs::exists(fs::path(fixture) / f));
  }

  const std::string kb_flags = " --kb-entities " + fixture +
                               "/entities.jsonl --kb-relations " + fixture +
                               "/relations.jsonl";

  REQUIRE(run_cli("build-index" + kb_flags + " --out " + run) == 0);
  CHECK(fs::exists(fs::path(run) / "bm25_index.json"));

  REQUIRE(run_cli("candidates" + kb_flags + " --data " + fixture +
                  "/train.jsonl --out " + run) == 0);
  CHECK(fs::exists(fs::path(run) / "candidates.jsonl"));

  REQUIRE(run_cli("train" + kb_flags + " --data " + fixture +
                  "/train.jsonl --out " + run +
                  " --epochs 3 --hidden 16 --embed 8 --seed 7 --quiet") == 0);
  CHECK(fs::exists(fs::path(run) / "checkpoint.bed"));
  CHECK(fs::exists(fs::path(run) / "metrics.csv"));

  REQUIRE(run_cli("predict" + kb_flags + " --data " + fixture +
                  "/test.jsonl --checkpoint " + run + "/checkpoint.bed" +
                  " --out " + run + " --quiet") == 0);
  CHECK(fs::exists(fs::path(run) / "predictions.jsonl"));

  REQUIRE(run_cli("eval --data " + fixture + "/test.jsonl --pred " + run +
                  "/predictions.jsonl --out " + run) == 0);
  REQUIRE(fs::exists(fs::path(run) / "report.json"));
  auto report = nlohmann::json::parse(bed::read_file(run + "/report.json"));
  CHECK(report.contains("f1"));
  CHECK(report.contains("precision"));
  CHECK(report.contains("recall"));

  REQUIRE(run_cli("encode-entities" + kb_flags + " --checkpoint " + run +
                  "/checkpoint.bed --out " + run) == 0);
  REQUIRE(fs::exists(fs::path(run) / "embeddings.jsonl"));
  {
    std::ifstream in(fs::path(run) / "embeddings.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("id"));
    CHECK(j.at("vector").size() == 16);
  }

  // The run directory keeps every subcommand's resolved config.
  auto config = nlohmann::json::parse(bed::read_file(run + "/config.json"));
  for (const char* key : {"train", "predict", "eval", "candidates"}) {
    CHECK(config.contains(key));
  }
  CHECK(config["train"].contains("seed"));
}

TEST_CASE("cli grad-check runs at small dims") {
  CHECK(run_cli("grad-check --dims 3 --seeds 2") == 0);
}
