// Copyright 2026 The boundedplay Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "boundedplay/llm.hpp"
#include "boundedplay/persistence.hpp"
#include "cli.hpp"
#include "test_util.hpp"

namespace boundedplay::cli {
namespace {

using boundedplay::testing::read_csv;
using boundedplay::testing::read_file;
using boundedplay::testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
  // Last stdout line is the JSON summary.
  Json summary() const {
    auto end = out.find_last_not_of('\n');
    auto start = out.rfind('\n', end);
    return Json::parse(out.substr(start == std::string::npos ? 0 : start + 1, end - start));
  }
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "boundedplay");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

TEST(CliTest, ExpandAgents) {
  EXPECT_EQ(expand_agents({"wslu", "mock*3"}),
            (std::vector<std::string>{"wslu", "mock", "mock", "mock"}));
  EXPECT_THROW(expand_agents({"mock*0"}), ConfigError);
  EXPECT_THROW(expand_agents({"mock*x"}), ConfigError);
}

TEST(CliTest, SolvePrintsNash) {
  auto r = invoke({"solve", "--policies", "wslu,wdls"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0.250000 0.500000 0.250000 value 2.000000"), std::string::npos);
  auto s = r.summary();
  EXPECT_DOUBLE_EQ(s["equilibria"][0]["row"][1].get<double>(), 0.5);
  EXPECT_EQ(s["stationary"].size(), 4u);
}

TEST(CliTest, SolveWritesCsv) {
  TempDir dir;
  auto r = invoke({"solve", "--out", dir.path().string(), "--policies", "wslu,wdls"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto eq = read_csv(dir / "equilibria.csv");
  ASSERT_FALSE(eq.empty());
  EXPECT_EQ(read_csv(dir / "stationary.csv").size(), 4u);
}

TEST(CliTest, RunBotsWritesLogManifestAndDifferentials) {
  TempDir dir;
  auto r = invoke({"run-bots", "--agent", "nash_rps", "--bots", "wslu,wdls", "--reps", "3",
                   "--rounds", "50", "--seed", "7", "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto s = r.summary();
  EXPECT_EQ(s["matches"], 6);
  EXPECT_EQ(s["rounds"], 300);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  auto rows = read_csv(dir / "differentials.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["bot"], "wslu");
  EXPECT_EQ(rows[0]["matches"], "3");
  auto m = read_manifest(dir / "manifest.json");
  EXPECT_EQ(m.command, "run-bots");
  EXPECT_EQ(m.master_seed, 7u);
}

TEST(CliTest, ReplayReproducesTheLog) {
  TempDir dir;
  ASSERT_EQ(invoke({"run-rps", "--agents", "wslu,mock,nash_rps", "--reps", "1", "--rounds", "8",
                    "--seed", "11", "--jobs", "3", "--out", dir.path().string()})
                .code,
            0);
  auto r = invoke({"replay", "--manifest", (dir / "manifest.json").string()});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(r.summary()["identical"].get<bool>());
}

TEST(CliTest, ReplayReportsTamperedLog) {
  TempDir dir;
  ASSERT_EQ(invoke({"run-bots", "--agent", "wslc", "--reps", "1", "--rounds", "5", "--out",
                    dir.path().string()})
                .code,
            0);
  auto text = read_file(dir / "log.jsonl");
  auto at = text.find("\"Rock\"");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 6, "\"Paper\"");
  std::ofstream(dir / "log.jsonl", std::ios::trunc) << text;
  auto r = invoke({"replay", "--manifest", (dir / "manifest.json").string()});
  EXPECT_NE(r.code, 0);
}

TEST(CliTest, RunPdSmokePreset) {
  TempDir dir;
  auto r = invoke({"--preset", "smoke", "run-pd", "--seed", "2", "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto s = r.summary();
  EXPECT_EQ(s["session"], "pd-dice-normal");
  EXPECT_EQ(s["matches"], 9);
  EXPECT_EQ(read_csv(dir / "cooperation.csv").size(), 3u);
}

TEST(CliTest, AnalyzeHumanReference) {
  auto fixture = data_dir() / "fixtures" / "human_pd.jsonl";
  auto r = invoke({"analyze", "--log", fixture.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("37.640000"), std::string::npos);
  // 6 rows plus the header.
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
  EXPECT_NE(r.err.find("\"rows\":6"), std::string::npos);
}

TEST(CliTest, ExportWritesEveryRpsReport) {
  TempDir dir;
  ASSERT_EQ(invoke({"run-rps", "--agents", "wslu,wdls", "--reps", "2", "--rounds", "20", "--out",
                    (dir / "run").string()})
                .code,
            0);
  auto r = invoke({"export", "--log", (dir / "run" / "log.jsonl").string(), "--out",
                   (dir / "rep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"differentials.csv", "proportions.csv", "independence.csv",
                        "profiles.csv", "ternary.csv", "strategies.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "rep" / f)) << f;
  }
}

TEST(CliTest, ValidateBundledData) {
  auto r = invoke({"validate"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.summary()["failed"], 0);
}

TEST(CliTest, ValidateFlagsBadMatrix) {
  TempDir dir;
  std::ofstream(dir / "bad.txt") << "this is not a matrix\n";
  auto r = invoke({"validate", "--matrix", (dir / "bad.txt").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(CliTest, InvalidInvocationsExitTwo) {
  EXPECT_EQ(invoke({}).code, kExitInvalidConfig);
  EXPECT_EQ(invoke({"solve", "--bogus"}).code, kExitInvalidConfig);
  EXPECT_EQ(invoke({"run-pd", "--mode", "forever"}).code, kExitInvalidConfig);
  EXPECT_EQ(invoke({"--preset", "huge", "solve"}).code, kExitInvalidConfig);
  TempDir dir;
  auto r = invoke({"run-rps", "--agents", "nosuch", "--out", dir.path().string()});
  EXPECT_EQ(r.code, kExitInvalidConfig);
  EXPECT_EQ(r.summary()["status"], "error");
  // Odd subject count for the rotation design.
  EXPECT_EQ(invoke({"run-pd", "--agents", "mock*5", "--out", dir.path().string()}).code,
            kExitInvalidConfig);
  EXPECT_EQ(invoke({"solve", "--matrix", "nope"}).code, kExitInvalidConfig);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(CliTest, ConfigFileSitsBetweenPresetAndFlags) {
  TempDir dir;
  std::ofstream(dir / "run.toml") << "preset = \"smoke\"\n[run-bots]\nreps = 2\nrounds = 4\n";
  auto r = invoke({"--config", (dir / "run.toml").string(), "run-bots", "--rounds", "6",
                   "--agent", "wslc", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto s = r.summary();
  EXPECT_EQ(s["matches"], 4);   // reps from the file, two bots
  EXPECT_EQ(s["rounds"], 24);  // rounds from the flag

  std::ofstream(dir / "bad.toml") << "[run-bots]\nbogus = 1\n";
  EXPECT_EQ(invoke({"--config", (dir / "bad.toml").string(), "run-bots"}).code,
            kExitInvalidConfig);
}

TEST(CliTest, EndpointsFileOverridesAndRejectsJunk) {
  TempDir dir;
  std::ofstream(dir / "ep.json")
      << R"({"endpoints":[{"name":"fixed","backend":"mock","mock_style":"fixed","mock_choice":"Paper","backoff_ms":0}]})";
  auto r = invoke({"run-bots", "--agent", "fixed", "--reps", "1", "--rounds", "3", "--endpoints",
                   (dir / "ep.json").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  auto m = read_manifest(dir / "out" / "manifest.json");
  ASSERT_EQ(m.endpoints.size(), 1u);
  EXPECT_EQ(m.endpoints[0].name, "fixed");

  std::ofstream(dir / "junk.json") << "{";
  EXPECT_EQ(invoke({"run-bots", "--endpoints", (dir / "junk.json").string(), "--out",
                    (dir / "out2").string()})
                .code,
            kExitInvalidConfig);
}

}  // namespace
}  // namespace boundedplay::cli
