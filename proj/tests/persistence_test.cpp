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

#include "boundedplay/persistence.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "boundedplay/errors.hpp"
#include "test_util.hpp"

namespace boundedplay {
namespace {

using testing::TempDir;
using testing::read_file;

RoundRecord sample_round(const std::string& match, int index, const std::string& treatment,
                         Action a = kCooperate, Action b = kDefect) {
  RoundRecord r = make_round_record(a.game() == Game::Pd ? pd_matrix() : rps_modified_matrix(),
                                    a, b);
  r.session_id = "s1";
  r.match_id = match;
  r.round_index = index;
  r.treatment = treatment;
  r.agent_ids = {"titfortat", "alld"};
  if (a.game() == Game::Pd) {
    r.roles = {Role::Red, Role::Blue};
    r.continues = true;
    r.die_face = 2;
  }
  r.timestamp = "2026-01-01T00:00:00Z";
  return r;
}

TEST(AppendTest, SequenceNumbersAreAssigned) {
  TempDir dir;
  LogWriter w(dir / "log.jsonl");
  EXPECT_EQ(w.append(round_envelope(sample_round("m1", 1, "dice:0.5"))).seq, 1);
  EXPECT_EQ(w.append(round_envelope(sample_round("m1", 2, "dice:0.5"))).seq, 2);
  EXPECT_EQ(w.append(round_envelope(sample_round("m2", 1, "dice:0.5"))).seq, 1);
}

TEST(AppendTest, MissingMatchIdRejected) {
  TempDir dir;
  LogWriter w(dir / "log.jsonl");
  auto e = round_envelope(sample_round("", 1, "dice:0.5"));
  try {
    w.append(e);
    FAIL();
  } catch (const SchemaError& ex) {
    EXPECT_NE(std::string(ex.what()).find("match"), std::string::npos);
  }
  EXPECT_EQ(read_file(dir / "log.jsonl"), "");
}

TEST(AppendTest, DuplicateAndGapRejected) {
  TempDir dir;
  LogWriter w(dir / "log.jsonl");
  auto e = round_envelope(sample_round("m1", 1, "dice:0.5"));
  e.seq = 1;
  w.append(e);
  EXPECT_THROW(w.append(e), SchemaError);
  e.seq = 3;
  EXPECT_THROW(w.append(e), SchemaError);
  e.seq = 2;
  EXPECT_EQ(w.append(e).seq, 2);
}

TEST(AppendTest, SchemaViolations) {
  TempDir dir;
  LogWriter w(dir / "log.jsonl");
  auto e = round_envelope(sample_round("m1", 1, "dice:0.5"));
  e.data["actions"] = {"Cooperate", "Lizard"};
  EXPECT_THROW(w.append(e), SchemaError);
  e = round_envelope(sample_round("m1", 1, "dice:0.5"));
  e.data.erase("payoffs");
  EXPECT_THROW(w.append(e), SchemaError);
  e = round_envelope(sample_round("m1", 1, "dice:0.5"));
  e.data["round"] = 0;
  EXPECT_THROW(w.append(e), SchemaError);
  e = round_envelope(sample_round("m1", 1, "rounds:50", kRock, kPaper));
  e.data.erase("outcomes");
  EXPECT_THROW(w.append(e), SchemaError);
  e = round_envelope(sample_round("m1", 1, "dice:0.5"));
  e.session.clear();
  EXPECT_THROW(w.append(e), SchemaError);
  // A rejected record does not consume a number.
  EXPECT_EQ(w.append(round_envelope(sample_round("m1", 1, "dice:0.5"))).seq, 1);
}

TEST(AppendTest, ResumeAppending) {
  TempDir dir;
  {
    LogWriter w(dir / "log.jsonl");
    w.append(round_envelope(sample_round("m1", 1, "dice:0.5")));
  }
  LogWriter w(dir / "log.jsonl", true);
  EXPECT_EQ(w.append(round_envelope(sample_round("m1", 2, "dice:0.5"))).seq, 2);
  EXPECT_EQ(load_log(dir / "log.jsonl").size(), 2u);
}

TEST(AppendTest, ConcurrentWritersKeepPerMatchOrder) {
  TempDir dir;
  LogWriter w(dir / "log.jsonl");
  std::vector<std::thread> threads;
  for (int m = 0; m < 4; ++m) {
    threads.emplace_back([&, m] {
      for (int i = 1; i <= 50; ++i) {
        w.append(round_envelope(sample_round("m" + std::to_string(m), i, "dice:0.5")));
      }
    });
  }
  for (auto& t : threads) t.join();
  auto all = load_log(dir / "log.jsonl");
  ASSERT_EQ(all.size(), 200u);
  std::map<std::string, int> last;
  for (const auto& e : all) {
    EXPECT_EQ(e.seq, ++last[e.match]);
    EXPECT_EQ(e.data["round"].get<int>(), e.seq);
  }
}

std::vector<Envelope> mixed_records() {
  MatchHeader h{"s1", "m1", Game::Pd, "dice:0.5", {"titfortat", "alld"},
                {Role::Red, Role::Blue}, {"red-00", "blue-03"}, "2"};
  ChatTranscript t;
  t.add("system", "sys");
  t.add("user", "Trial 1");
  t.add("assistant", "Choice: U");
  t.parsed_choices.push_back(kCooperate);
  t.tokens_used = 12;
  t.latencies_ms = {3.5};
  return {
      match_start_envelope(h),
      round_envelope(sample_round("m1", 1, "dice:0.5")),
      round_envelope(sample_round("m1", 2, "dice:0.5", kDefect, kDefect)),
      transcript_envelope("s1", "m1", 0, "titfortat", t),
      match_end_envelope("s1", "m1", {"dice_ended", 2, {45, 135}, false, ""}),
      reference_envelope("ref", {"human reference", "cooperation_pct", "human", "", "dice:0.75",
                                 37.64, 0}),
  };
}

TEST(LoadTest, RoundTripIsByteEquivalent) {
  TempDir dir;
  std::vector<std::string> written;
  {
    LogWriter w(dir / "log.jsonl");
    for (auto e : mixed_records()) {
      e.seq = w.append(e).seq;
      written.push_back(serialize(e));
    }
  }
  auto loaded = load_log(dir / "log.jsonl");
  ASSERT_EQ(loaded.size(), written.size());
  std::string again;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(serialize(loaded[i]), written[i]);
    again += serialize(loaded[i]) + "\n";
  }
  EXPECT_EQ(again, read_file(dir / "log.jsonl"));
  // Typed views survive the trip.
  EXPECT_EQ(match_header_from(loaded[0]).subjects[1], "blue-03");
  EXPECT_EQ(round_from_json(loaded[1].data, "s1", "m1").die_face, 2);
  auto r = round_from_json(loaded[1].data, "s1", "m1");
  r.timestamp = loaded[1].timestamp;
  EXPECT_EQ(r, sample_round("m1", 1, "dice:0.5"));
  EXPECT_EQ(transcript_from(loaded[3]).parsed_choices, std::vector<Action>{kCooperate});
  EXPECT_EQ(match_footer_from(loaded[4]).totals[1], 135);
  EXPECT_EQ(reference_from(loaded[5]).value, 37.64);
}

TEST(LoadTest, Filters) {
  TempDir dir;
  {
    LogWriter w(dir / "log.jsonl");
    for (int m = 0; m < 3; ++m) {
      std::string t = m == 1 ? "dice:0.5" : "dice:0.75";
      std::string id = "m" + std::to_string(m);
      MatchHeader h{"s1", id, Game::Pd, t, {"titfortat", m == 2 ? "grim" : "alld"},
                    {Role::Red, Role::Blue}, {"red-00", "blue-00"}, ""};
      w.append(match_start_envelope(h));
      auto r = sample_round(id, 1, t);
      r.agent_ids[1] = h.agents[1];
      w.append(round_envelope(r));
    }
  }
  auto half = load_log(dir / "log.jsonl", {.treatment = "dice:0.5"});
  ASSERT_EQ(half.size(), 2u);
  for (const auto& e : half) EXPECT_EQ(e.match, "m1");
  EXPECT_EQ(load_log(dir / "log.jsonl", {.agent = "grim"}).size(), 2u);
  EXPECT_EQ(load_log(dir / "log.jsonl", {.agent = "titfortat"}).size(), 6u);
  EXPECT_EQ(load_log(dir / "log.jsonl", {.match = "m2"}).size(), 2u);
  EXPECT_TRUE(load_log(dir / "log.jsonl", {.session = "other"}).empty());
}

TEST(LoadTest, TruncatedFinalLineNamesTheLine) {
  TempDir dir;
  {
    LogWriter w(dir / "log.jsonl");
    for (int i = 1; i <= 3; ++i) w.append(round_envelope(sample_round("m1", i, "dice:0.5")));
  }
  auto text = read_file(dir / "log.jsonl");
  text.resize(text.size() - 20);
  std::ofstream(dir / "cut.jsonl", std::ios::binary) << text;
  try {
    load_log(dir / "cut.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("cut.jsonl:3:"), std::string::npos) << e.what();
  }
}

TEST(LoadTest, CorruptionIsNeverSkipped) {
  auto line = serialize([] {
    auto e = round_envelope(sample_round("m1", 1, "dice:0.5"));
    e.seq = 1;
    return e;
  }());
  EXPECT_THROW(parse_log(line + "\n\n", "x"), SchemaError);          // blank line
  EXPECT_THROW(parse_log(line + "\n" + line + "\n", "x"), SchemaError);  // repeated seq
  EXPECT_THROW(parse_log("[1,2]\n", "x"), SchemaError);
  EXPECT_EQ(parse_log(line, "x").size(), 1u);  // missing final newline is fine
}

TEST(LoadTest, AnalysisViewDropsAbortedMatches) {
  std::vector<Envelope> env;
  for (auto m : {"ok", "bad"}) {
    auto e = round_envelope(sample_round(m, 1, "dice:0.5"));
    e.seq = 1;
    env.push_back(e);
    auto end = match_end_envelope("s1", m, {m == std::string("ok") ? "dice_ended" :
                                            "protocol_violation", 1, {10, 100},
                                            m == std::string("bad"), ""});
    end.seq = 2;
    env.push_back(end);
  }
  env.push_back(mixed_records().back());
  auto log = to_analysis_log(env);
  ASSERT_EQ(log.rounds.size(), 1u);
  EXPECT_EQ(log.rounds[0].match_id, "ok");
  EXPECT_EQ(log.references.size(), 1u);
  EXPECT_EQ(to_analysis_log(env, true).rounds.size(), 2u);
}

TEST(CanonicalTest, VolatileFieldsDropped) {
  auto records = mixed_records();
  records[3].seq = 1;
  auto a = serialize(records[3]);
  records[3].timestamp = "later";
  records[3].data["latencies_ms"] = {99.0};
  auto b = serialize(records[3]);
  EXPECT_NE(a, b);
  EXPECT_EQ(canonical_line(a), canonical_line(b));
  EXPECT_EQ(canonical_line(a).find("latencies"), std::string::npos);
}

TEST(ManifestTest, RoundTripWithoutSecrets) {
  TempDir dir;
  ::setenv("BOUNDEDPLAY_MANIFEST_TOKEN", "secret-value-xyz", 1);
  RunManifest m;
  m.created_at = utc_timestamp();
  m.command = "run-rps";
  m.master_seed = 18446744073709551615ULL;
  m.config = {{"agents", {"uniform", "wslu"}}, {"reps", 3}};
  ModelEndpoint e;
  e.name = "remote";
  e.backend = BackendKind::Http;
  e.base_url = "https://api.example.com/v1";
  e.model = "model-x";
  e.auth_token_env = "BOUNDEDPLAY_MANIFEST_TOKEN";
  m.endpoints.push_back(e);
  write_manifest(m, dir / "manifest.json");
  auto text = read_file(dir / "manifest.json");
  EXPECT_EQ(text.find("secret-value"), std::string::npos);
  auto back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(back.master_seed, m.master_seed);
  EXPECT_EQ(back.config, m.config);
  ASSERT_EQ(back.endpoints.size(), 1u);
  EXPECT_EQ(back.endpoints[0], e);
}

TEST(ManifestTest, UnknownEndpointKeyRejected) {
  Json j{{"name", "x"}, {"backend", "mock"}, {"api_key", "oops"}};
  EXPECT_THROW(endpoint_from_json(j), ConfigError);
}

TEST(CsvTest, CooperationReportShape) {
  CooperationReport r;
  for (auto [t, v] : std::vector<std::pair<std::string, double>>{
           {"dice:0", 9.17}, {"dice:0.5", 27.41}, {"dice:0.75", 37.64},
           {"finite:1", 10.34}, {"finite:2", 10.11}, {"finite:4", 21.43}}) {
    r.rows.push_back({t, "human reference", 0, 0, v});
  }
  TempDir dir;
  EXPECT_EQ(export_csv(cooperation_csv(r), dir / "coop.csv"), 6u);
  auto text = read_file(dir / "coop.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "grouping,group,source,cooperate,choices,percentage");
  EXPECT_NE(text.find("treatment,dice:0.75,human reference,0,0,37.640000\n"), std::string::npos);
}

TEST(CsvTest, EmptyDifferentialsIsHeaderOnly) {
  EXPECT_EQ(to_csv(differentials_csv({})),
            "agent,bot,source,matches,win_differential,payoff_differential\n");
}

TEST(CsvTest, TransitionProfileColumns) {
  TransitionProfile p;
  p.proportions << 0.8, 0.1, 0.1, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.1, 0.8, 0.1;
  p.sample_sizes << 10, 3, 10;
  auto t = transition_profile_csv({{"wslu", p}});
  ASSERT_EQ(t.header.size(), 13u);
  EXPECT_EQ(t.header[4], "win_stay");
  EXPECT_EQ(t.header[12], "lose_downgrade");
  EXPECT_EQ(t.rows[0][7], "0.333333");
  auto tern = ternary_csv({{"wslu", p}});
  EXPECT_EQ(tern.rows.size(), 3u);
}

TEST(CsvTest, ExportIsByteStable) {
  DifferentialReport d{"nash_rps", "wslu", "log", 3, 1.0 / 3, -2.0 / 3};
  TempDir dir;
  export_csv(differentials_csv({d}), dir / "a.csv");
  export_csv(differentials_csv({d}), dir / "b.csv");
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
  EXPECT_NE(read_file(dir / "a.csv").find("0.333333,-0.666667"), std::string::npos);
}

TEST(CsvTest, QuotingAndUnwritablePath) {
  CsvTable t{{"a"}, {{"x,y"}, {"say \"hi\""}}};
  EXPECT_EQ(to_csv(t), "a\n\"x,y\"\n\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(export_csv(t, "/nonexistent-dir/x.csv"), std::runtime_error);
}

}  // namespace
}  // namespace boundedplay
