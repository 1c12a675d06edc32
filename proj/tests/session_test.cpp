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

#include "boundedplay/session.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

#include "boundedplay/errors.hpp"
#include "test_util.hpp"

namespace boundedplay {
namespace {

using Clock = std::chrono::steady_clock;

SessionError::Kind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no SessionError";
  return SessionError::Kind::BadRequest;
}

Json without_version(Json v) {
  v.erase("version");
  return v;
}

TEST(FragmentTest, Shapes) {
  auto rps = plan_from_fragment(
      Json::parse(R"({"game":"rps","agents":["human","wslu","wdls"],"rounds":10})"), {}, "x");
  EXPECT_EQ(rps.matches.size(), 2u);
  EXPECT_EQ(rps.session_id, "x");
  auto pair = plan_from_fragment(
      Json::parse(R"({"game":"pd","agents":["human","titfortat"],"session":"p",
                      "treatments":["dice:0","dice:0.75"],"matches_per_block":2,"seed":9})"),
      {}, "x");
  EXPECT_EQ(pair.matches.size(), 4u);
  EXPECT_EQ(pair.participants[0].role, Role::Red);
  EXPECT_EQ(pair.matches[2].rule, ContinuationRule::dice(0.75));
  EXPECT_EQ(pair.master_seed, 9u);
  auto full = plan_from_fragment(
      Json::parse(R"({"game":"pd","agents":["human","allc","alld","human","grim","titfortat"],
                      "mode":"finite","ordering":"usd"})"),
      {}, "x");
  EXPECT_EQ(full.matches.size(), 9u);
  EXPECT_EQ(full.matches[0].rule, ContinuationRule::finite(4));
  auto llm = plan_from_fragment(Json::parse(R"({"game":"rps","agents":["human","m"]})"), {"m"},
                                "x");
  EXPECT_EQ(llm.participants[1].agent.kind(), AgentKind::Llm);

  for (const char* bad : {R"({"game":"rps","agents":["human","wslu"],"colour":1})",
                          R"({"game":"rps","agents":["human","alld"]})",
                          R"({"game":"rps","agents":["human","nobody"]})",
                          R"({"game":"rps","agents":["human"]})",
                          R"({"game":"pd","agents":["human","alld"],"treatments":["dice:0.3"]})",
                          R"({"agents":["human","wslu"]})", R"([1,2])"}) {
    EXPECT_THROW(plan_from_fragment(Json::parse(bad), {}, "x"), ConfigError) << bad;
  }
}

class RegistryTest : public ::testing::Test {
 protected:
  RegistryTest() : registry_(&pool_, options()) {}

  SessionOptions options() {
    SessionOptions o;
    o.idle_timeout = std::chrono::minutes(5);
    o.clock = [this] { return now_; };
    return o;
  }

  GatewayPool pool_;
  Clock::time_point now_{};
  SessionRegistry registry_;
};

TEST_F(RegistryTest, RpsAgainstBot) {
  auto created = registry_.create(
      Json::parse(R"({"game":"rps","agents":["human","wslu"],"rounds":50,"session":"r1"})"));
  EXPECT_EQ(created["session"], "r1");
  EXPECT_EQ(created["slots"], Json::array({"human"}));
  const auto system = created["instructions"]["human"]["system"].get<std::string>();
  EXPECT_EQ(system.rfind("Rock-Paper-Scissors\nYou have been randomly paired with a computer "
                         "algorithm", 0),
            0u);

  auto v = registry_.state("r1", "human");
  EXPECT_EQ(v["phase"], "awaiting_choice");
  EXPECT_EQ(v["round"], 1);
  EXPECT_EQ(v["actions"], Json::array({"Rock", "Paper", "Scissors"}));
  ASSERT_EQ(v["messages"].size(), 2u);
  EXPECT_EQ(v["messages"][0]["text"], system);
  EXPECT_EQ(v["messages"][1]["text"].get<std::string>().rfind("Trial 1\n", 0), 0u);
  EXPECT_FALSE(v.contains("feedback"));

  auto r = registry_.submit("r1", "human", "Paper");
  EXPECT_TRUE(r.accepted);
  EXPECT_TRUE(r.round_complete);
  EXPECT_EQ(r.round, 1);
  v = registry_.state("r1", "human");
  EXPECT_EQ(v["round"], 2);
  EXPECT_EQ(v["history"]["own"], Json::array({"Paper"}));
  ASSERT_EQ(v["history"]["opponent"].size(), 1u);
  const auto feedback = v["feedback"].get<std::string>();
  EXPECT_EQ(feedback.rfind("Feedback in the previous trial:\n", 0), 0u);
  EXPECT_NE(feedback.find("You chose Paper"), std::string::npos);
  EXPECT_NE(feedback.find("your opponent chose " + v["history"]["opponent"][0].get<std::string>()),
            std::string::npos);
  EXPECT_EQ(v["messages"][2]["text"], "Choice: Paper");
  EXPECT_EQ(v["messages"][3]["text"], feedback);

  EXPECT_EQ(error_kind([&] { registry_.submit("r1", "human", "Lizard"); }),
            SessionError::Kind::Invalid);
  EXPECT_EQ(error_kind([&] { registry_.submit("r1", "human", "Rock", 1); }),
            SessionError::Kind::Conflict);
  EXPECT_EQ(error_kind([&] { registry_.submit("r1", "wslu", "Rock"); }),
            SessionError::Kind::BadRequest);
  EXPECT_EQ(error_kind([&] { registry_.submit("r1", "ghost", "Rock"); }),
            SessionError::Kind::NotFound);
  EXPECT_EQ(error_kind([&] { registry_.state("r2", "human"); }), SessionError::Kind::NotFound);

  for (int t = 2; t <= 50; ++t) registry_.submit("r1", "human", t % 2 ? "rock" : "Scissors", t);
  v = registry_.state("r1", "human");
  EXPECT_EQ(v["state"], "finished");
  EXPECT_EQ(v["phase"], "session_ended");
  EXPECT_EQ(v["termination"], "horizon_reached");
  EXPECT_EQ(v["history"]["own"].size(), 50u);
  EXPECT_EQ(error_kind([&] { registry_.submit("r1", "human", "Rock"); }),
            SessionError::Kind::Gone);

  auto log = to_analysis_log(registry_.log("r1"));
  EXPECT_EQ(log.rounds.size(), 50u);
  EXPECT_EQ(log.rounds[0].actions[0], kPaper);
}

TEST_F(RegistryTest, DuplicateAndRejectedCreates) {
  const char* body = R"({"game":"rps","agents":["human","wslu"],"session":"dup"})";
  registry_.create(Json::parse(body));
  EXPECT_EQ(error_kind([&] { registry_.create(Json::parse(body)); }),
            SessionError::Kind::Conflict);
  EXPECT_EQ(error_kind([&] {
              registry_.create(Json::parse(R"({"game":"rps","agents":["wslu","wdls"]})"));
            }),
            SessionError::Kind::BadRequest);
  EXPECT_EQ(error_kind([&] {
              registry_.create(
                  Json::parse(R"({"game":"rps","agents":["human","wslu"],"session":"a/b"})"));
            }),
            SessionError::Kind::BadRequest);
  auto generated = registry_.create(Json::parse(R"({"game":"rps","agents":["human","wslu"]})"));
  EXPECT_EQ(generated["session"].get<std::string>().rfind("live-", 0), 0u);
  EXPECT_EQ(registry_.list()["sessions"].size(), 2u);
}

TEST_F(RegistryTest, PdRedHumanAgainstTitForTat) {
  // Find a seed whose dice match lasts at least three rounds.
  for (int seed = 0;; ++seed) {
    const std::string id = "pd" + std::to_string(seed);
    Json f = {{"game", "pd"}, {"agents", {"human", "titfortat"}}, {"session", id},
              {"treatments", {"dice:0.75"}}, {"seed", seed}};
    auto created = registry_.create(f);
    const auto& ins = created["instructions"]["human"];
    EXPECT_NE(ins["system"].get<std::string>().find("Remember that you are a Red participant."),
              std::string::npos);
    EXPECT_NE(ins["intro"].get<std::string>().find("after each round we will roll a four sided "
                                                   "dice"),
              std::string::npos);
    auto v = registry_.state(id, "human");
    EXPECT_EQ(v["actions"], Json::array({"U", "D"}));
    EXPECT_EQ(v["role"], "red");
    EXPECT_EQ(error_kind([&] { registry_.submit(id, "human", "L"); }),
              SessionError::Kind::Invalid);
    int rounds = 0;
    while (registry_.state(id, "human")["phase"] == "awaiting_choice") {
      registry_.submit(id, "human", rounds == 0 ? "D" : "U");
      ++rounds;
    }
    v = registry_.state(id, "human");
    if (rounds < 3) continue;
    EXPECT_EQ(v["phase"], "session_ended");
    EXPECT_EQ(v["termination"], "dice_ended");
    EXPECT_EQ(v["continuation"]["continues"], false);
    EXPECT_EQ(v["continuation"]["die_face"], 4);
    const auto closing = v["closing"].get<std::string>();
    EXPECT_EQ(closing.rfind("A 4 appeared therefore this match ended. You have earned ", 0), 0u);
    EXPECT_EQ(v["messages"].back()["text"], closing);
    // titfortat answers D with D in round 2, then cooperates after U.
    EXPECT_EQ(v["history"]["opponent"][0], "L");
    EXPECT_EQ(v["history"]["opponent"][1], "R");
    EXPECT_EQ(v["history"]["opponent"][2], "L");
    EXPECT_EQ(v["totals"]["own"], v["session_points"]);
    bool continued = false;
    for (const auto& m : v["messages"]) {
      continued |= m["text"].get<std::string>().find("appeared therefore this match continues. "
                                                     "Now you are in Round 2") !=
                   std::string::npos;
    }
    EXPECT_TRUE(continued);
    break;
  }
}

TEST_F(RegistryTest, TwoHumansAndInformationHiding) {
  registry_.create(Json::parse(R"({"game":"rps","agents":["human","human"],"session":"hh",
                                   "rounds":3})"));
  auto a0 = registry_.state("hh", "human");
  auto b0 = registry_.state("hh", "human#2");
  EXPECT_EQ(a0["phase"], "awaiting_choice");
  EXPECT_EQ(b0["phase"], "awaiting_choice");

  auto r = registry_.submit("hh", "human", "Rock");
  EXPECT_FALSE(r.round_complete);
  auto a1 = registry_.state("hh", "human");
  auto b1 = registry_.state("hh", "human#2");
  EXPECT_EQ(a1["phase"], "waiting_for_opponent");
  EXPECT_TRUE(a1["actions"].empty());
  // The opponent sees nothing of the committed choice.
  EXPECT_EQ(without_version(b1), without_version(b0));
  EXPECT_EQ(error_kind([&] { registry_.submit("hh", "human", "Paper"); }),
            SessionError::Kind::Conflict);

  r = registry_.submit("hh", "human#2", "Paper");
  EXPECT_TRUE(r.round_complete);
  auto a2 = registry_.state("hh", "human");
  EXPECT_EQ(a2["history"]["opponent"], Json::array({"Paper"}));
  EXPECT_NE(a2["feedback"].get<std::string>().find("\nYou lost!\n"), std::string::npos);
}

TEST_F(RegistryTest, LlmOpponentCommitsUnseen) {
  ModelEndpoint e;
  e.name = "mock";
  e.mock_style = MockStyle::Fixed;
  e.mock_choice = "Scissors";
  pool_.add(e);
  registry_.create(Json::parse(R"({"game":"rps","agents":["human","mock"],"session":"l",
                                   "rounds":2})"));
  auto v = registry_.state("l", "human");
  EXPECT_TRUE(v["history"]["opponent"].empty());
  EXPECT_EQ(v["messages"].size(), 2u);
  auto text = v.dump();
  EXPECT_EQ(text.find("Choice: Scissors"), std::string::npos);
  registry_.submit("l", "human", "Rock");
  v = registry_.state("l", "human");
  EXPECT_EQ(v["history"]["opponent"], Json::array({"Scissors"}));
}

TEST_F(RegistryTest, IdleSessionsExpire) {
  registry_.create(Json::parse(R"({"game":"rps","agents":["human","wslu"],"session":"idle",
                                   "rounds":5})"));
  registry_.submit("idle", "human", "Rock");
  now_ += std::chrono::minutes(4);
  EXPECT_EQ(registry_.expire_idle(), 0);
  registry_.submit("idle", "human", "Rock");
  now_ += std::chrono::minutes(6);
  EXPECT_EQ(registry_.expire_idle(), 1);
  EXPECT_EQ(registry_.expire_idle(), 0);
  EXPECT_EQ(error_kind([&] { registry_.submit("idle", "human", "Rock"); }),
            SessionError::Kind::Gone);
  auto v = registry_.state("idle", "human");
  EXPECT_EQ(v["state"], "abandoned");
  EXPECT_EQ(v["termination"], "human_abandoned");
  EXPECT_EQ(v["phase"], "session_ended");

  auto env = registry_.log("idle");
  auto footer = match_footer_from(env.back());
  EXPECT_TRUE(footer.aborted);
  EXPECT_EQ(footer.rounds, 2);
  EXPECT_EQ(footer.termination, "human_abandoned");
  EXPECT_TRUE(to_analysis_log(env).rounds.empty());
  EXPECT_EQ(to_analysis_log(env, true).rounds.size(), 2u);
}

TEST_F(RegistryTest, StateReadsAreIdempotent) {
  registry_.create(Json::parse(R"({"game":"rps","agents":["human","wdls"],"session":"i"})"));
  registry_.submit("i", "human", "Rock");
  EXPECT_EQ(registry_.state("i", "human").dump(), registry_.state("i", "human").dump());
}

TEST_F(RegistryTest, MultiHumanPdSessionRunsMatchesSideBySide) {
  auto created = registry_.create(Json::parse(R"({"game":"pd","session":"lab","mode":"finite",
      "agents":["human","human","human","alld","allc","titfortat"]})"));
  const auto slots = created["slots"].get<std::vector<std::string>>();
  EXPECT_EQ(slots, (std::vector<std::string>{"red-00", "red-01", "red-02"}));
  for (const auto& slot : slots) {
    auto v = registry_.state("lab", slot);
    EXPECT_EQ(v["phase"], "awaiting_choice") << slot;
    EXPECT_EQ(v["match_count"], 3);
  }
  // Play everything; each human always cooperates.
  for (int guard = 0; guard < 100; ++guard) {
    bool any = false;
    for (const auto& slot : slots) {
      if (registry_.state("lab", slot)["phase"] == "awaiting_choice") {
        registry_.submit("lab", slot, "U");
        any = true;
      }
    }
    if (!any) break;
  }
  EXPECT_EQ(registry_.list()["sessions"][0]["state"], "finished");
  auto log = to_analysis_log(registry_.log("lab"));
  EXPECT_EQ(log.rounds.size(), 3u * (1 + 2 + 4));
}

TEST(SessionLogTest, SchemaIdenticalToAutomatedRuns) {
  testing::TempDir dir;
  GatewayPool pool;
  SessionOptions o;
  o.log_dir = dir.path();
  SessionRegistry registry(&pool, o);
  registry.create(Json::parse(R"({"game":"rps","agents":["human","wslu"],"session":"same",
                                  "rounds":8,"seed":3})"));
  EXPECT_TRUE(std::filesystem::exists(dir / "same.manifest.json"));
  EXPECT_EQ(read_manifest(dir / "same.manifest.json").command, "serve");
  const std::vector<Action> script{kRock, kRock, kPaper, kScissors, kPaper, kPaper, kRock, kRock};
  for (auto a : script) registry.submit("same", "human", std::string(to_string(a.label())));

  // The same plan with a scripted stand-in on the human seat.
  AgentSpec scripted{"human", Game::Rps, ReplayParams{script}, "human"};
  auto plan = plan_bot_series(scripted, {lookup_agent("wslu")}, 1, 8, "same", 3);
  auto automated = run_match(plan, plan.matches[0], pool);

  auto live = load_log(dir / "same.jsonl");
  std::vector<std::string> live_rounds, cli_rounds;
  for (const auto& e : live) {
    if (e.type == EnvelopeType::Round) live_rounds.push_back(canonical_line(serialize(e)));
  }
  std::int64_t seq = 0;
  for (auto e : automated.envelopes()) {
    e.seq = ++seq;
    if (e.type == EnvelopeType::Round) cli_rounds.push_back(canonical_line(serialize(e)));
  }
  EXPECT_EQ(live_rounds, cli_rounds);
  EXPECT_EQ(live.front().type, EnvelopeType::MatchStart);
  EXPECT_EQ(live.back().type, EnvelopeType::MatchEnd);
  auto d = differentials(to_analysis_log(live), "human", "wslu");
  EXPECT_EQ(d.matches, 1);
}

TEST(SessionConcurrencyTest, ParallelSessions) {
  GatewayPool pool;
  SessionRegistry registry(&pool, {});
  constexpr int kSessions = 8;
  std::vector<std::thread> players;
  for (int i = 0; i < kSessions; ++i) {
    players.emplace_back([&registry, i] {
      const std::string id = "c" + std::to_string(i);
      registry.create(Json{{"game", "rps"}, {"agents", {"human", "wdls"}}, {"session", id},
                           {"rounds", 20}});
      for (int t = 1; t <= 20; ++t) {
        (void)registry.state(id, "human");
        registry.submit(id, "human", t % 3 == 0 ? "Rock" : "Paper", t);
      }
    });
  }
  // Concurrent readers against the snapshots.
  std::thread reader([&] {
    for (int k = 0; k < 200; ++k) (void)registry.list();
  });
  for (auto& t : players) t.join();
  reader.join();
  for (const auto& s : registry.list()["sessions"]) EXPECT_EQ(s["state"], "finished");
  EXPECT_EQ(registry.list()["sessions"].size(), static_cast<std::size_t>(kSessions));
}

class ServerTest : public ::testing::Test {
 protected:
  ServerTest() : registry_(&pool_, {}), server_(registry_, server_options()) {
    port_ = server_.start();
  }

  static ServerOptions server_options() {
    ServerOptions o;
    o.port = 0;
    o.token = "s3cret";
    return o;
  }

  httplib::Client client(bool with_token = true) {
    httplib::Client c("127.0.0.1", port_);
    if (with_token) c.set_default_headers({{"X-Session-Token", "s3cret"}});
    return c;
  }

  GatewayPool pool_;
  SessionRegistry registry_;
  SessionServer server_;
  int port_ = 0;
};

TEST_F(ServerTest, EndToEnd) {
  auto c = client();
  auto created = c.Post("/sessions",
                        R"({"game":"rps","agents":["human","wslu"],"session":"web","rounds":2})",
                        "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(Json::parse(created->body)["session"], "web");

  auto s1 = c.Get("/sessions/web/state?slot=human");
  auto s2 = c.Get("/sessions/web/state?slot=human");
  ASSERT_TRUE(s1 && s2);
  EXPECT_EQ(s1->status, 200);
  EXPECT_EQ(s1->body, s2->body);
  EXPECT_EQ(Json::parse(s1->body)["phase"], "awaiting_choice");

  auto bad = c.Post("/sessions/web/choices", R"({"slot":"human","action":"Lizard"})",
                    "application/json");
  EXPECT_EQ(bad->status, 422);
  auto ok = c.Post("/sessions/web/choices", R"({"slot":"human","action":"Paper","round":1})",
                   "application/json");
  EXPECT_EQ(ok->status, 200);
  auto body = Json::parse(ok->body);
  EXPECT_EQ(body["accepted"], true);
  EXPECT_EQ(body["round_complete"], true);
  auto dup = c.Post("/sessions/web/choices", R"({"slot":"human","action":"Paper","round":1})",
                    "application/json");
  EXPECT_EQ(dup->status, 409);
  c.Post("/sessions/web/choices", R"({"slot":"human","action":"Rock"})", "application/json");
  auto gone = c.Post("/sessions/web/choices", R"({"slot":"human","action":"Rock"})",
                     "application/json");
  EXPECT_EQ(gone->status, 410);

  auto list = c.Get("/sessions");
  EXPECT_EQ(Json::parse(list->body)["sessions"][0]["state"], "finished");
  EXPECT_EQ(c.Get("/sessions/nope/state?slot=human")->status, 404);
  EXPECT_EQ(c.Get("/sessions/web/state")->status, 400);
  EXPECT_EQ(c.Post("/sessions", "{not json", "application/json")->status, 400);
  EXPECT_EQ(c.Post("/sessions", R"({"game":"rps","agents":["wslu","wdls"]})",
                   "application/json")->status,
            400);
}

TEST_F(ServerTest, SharedToken) {
  auto c = client(false);
  auto r = c.Get("/sessions");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 401);
  c.set_default_headers({{"X-Session-Token", "wrong"}});
  EXPECT_EQ(c.Get("/sessions")->status, 401);
  EXPECT_EQ(client().Get("/sessions")->status, 200);
}

}  // namespace
}  // namespace boundedplay
