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

#include "cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "boundedplay/analysis.hpp"
#include "boundedplay/equilibrium.hpp"
#include "boundedplay/errors.hpp"
#include "boundedplay/llm.hpp"
#include "boundedplay/session.hpp"

namespace boundedplay::cli {
namespace fs = std::filesystem;

namespace {

// Built-in defaults; a config file and then flags override them.
struct Preset {
  int rounds = 50;
  int reps = 3;
  std::string matrix = "rps_modified";
  std::vector<std::string> rps_agents;
  std::string bots_agent;
  std::vector<std::string> bots;
  std::vector<std::string> pd_agents;
  std::string mode = "dice";
  std::string ordering = "normal";
};

const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> p{
      {"paper",
       {50, 3, "rps_modified", {"uniform", "nash_rps", "wslu", "wdls", "wslc", "mock"}, "mock",
        {"wslu", "wdls"}, {"mock*24"}, "dice", "normal"}},
      {"smoke",
       {5, 1, "rps_modified", {"wslu", "wdls", "mock"}, "mock", {"wslu", "wdls"},
        {"titfortat*3", "mock*3"}, "dice", "normal"}},
  };
  return p;
}

// --preset must be known before the other defaults are registered.
// A preset named in the config file counts too; the command line wins.
std::string scan_preset(int argc, const char* const* argv) {
  std::string config;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--preset" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--preset=", 0) == 0) return a.substr(9);
    if (a == "--config" && i + 1 < argc) config = argv[i + 1];
    if (a.rfind("--config=", 0) == 0) config = a.substr(9);
  }
  if (!config.empty()) {
    std::ifstream in(config);
    static const std::regex re(R"re(^\s*preset\s*=\s*"?([A-Za-z0-9_-]+)"?\s*$)re");
    std::smatch m;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line[0] == '[') break;
      if (std::regex_match(line, m, re)) return m[1];
    }
  }
  return "paper";
}

std::vector<ModelEndpoint> load_endpoints(const std::string& path) {
  std::vector<ModelEndpoint> out{builtin_mock_endpoint()};
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read endpoints file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("endpoints")) j = j["endpoints"];
  if (!j.is_array()) throw ConfigError(path + ": expected a list of endpoints");
  for (const auto& item : j) {
    auto e = endpoint_from_json(item);
    std::erase_if(out, [&](const ModelEndpoint& x) { return x.name == e.name; });
    out.push_back(std::move(e));
  }
  return out;
}

std::set<std::string> names_of(const std::vector<ModelEndpoint>& endpoints) {
  std::set<std::string> out;
  for (const auto& e : endpoints) out.insert(e.name);
  return out;
}

PayoffMatrix resolve_matrix(const std::string& spec) {
  if (auto m = bundled_matrix(spec)) return *m;
  if (fs::is_regular_file(spec)) return load_matrix_file(spec);
  std::string known;
  for (const auto& n : bundled_matrix_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown matrix '" + spec + "' (bundled: " + known + ")");
}

std::vector<AgentSpec> resolve_all(const std::vector<std::string>& names, Game game,
                                   const std::set<std::string>& endpoints) {
  std::vector<AgentSpec> out;
  for (const auto& n : names) out.push_back(resolve_agent(n, game, endpoints));
  return out;
}

TransitionPolicyTable policy_table(const std::string& name) {
  auto spec = lookup_agent(name);
  if (spec.kind() != AgentKind::TransitionBot) {
    throw ConfigError("'" + name + "' is not a transition bot");
  }
  return std::get<TransitionBotParams>(spec.params).table;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

bool is_config_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
         dynamic_cast<const TemplateError*>(&e);
}

// ---------------------------------------------------------------- reports

struct AnalyzeOptions {
  std::vector<std::string> logs;
  std::string report = "cooperation";
  std::string grouping = "treatment";
  std::string agent;
  std::vector<std::string> bots;
  bool runs = false;
  bool all_subjects = false;
  bool include_aborted = false;
  std::string out;
  std::string session, match, agent_filter, treatment;
  std::uint64_t seed = kClusterSeed;
};

AnalysisLog load_inputs(const std::vector<std::string>& paths, const LogFilter& filter,
                        bool include_aborted) {
  if (paths.empty()) throw ConfigError("no --log given");
  std::vector<Envelope> all;
  for (const auto& p : paths) {
    auto part = load_log(p, filter);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return to_analysis_log(all, include_aborted);
}

CooperationGrouping parse_grouping(const std::string& g) {
  if (g == "treatment") return CooperationGrouping::Treatment;
  if (g == "round") return CooperationGrouping::Round;
  if (g == "agent") return CooperationGrouping::Agent;
  throw ConfigError("unknown grouping '" + g + "' (treatment, round, agent)");
}

std::vector<Subject> rps_subjects(const AnalysisLog& log, bool runs) {
  return subjects(log.rounds, runs);
}

// Subjects whose next choice depends on the previous outcome.
std::vector<std::pair<std::string, TransitionProfile>> profiles(const AnalysisLog& log,
                                                                 bool runs,
                                                                 bool outcome_based_only) {
  std::vector<std::pair<std::string, TransitionProfile>> out;
  for (const auto& s : rps_subjects(log, runs)) {
    auto table = transition_contingency(log.rounds, s);
    if (outcome_based_only) {
      if (table.total() == 0 || !chi_square_independence(table).significant) continue;
    }
    out.emplace_back(s.key(), transition_profile(table));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> differential_pairs(const AnalysisLog& log) {
  std::vector<std::pair<std::string, std::string>> pairs;
  auto add = [&](const std::string& a, const std::string& b) {
    if (a == b) return;
    if (std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) == pairs.end()) {
      pairs.emplace_back(a, b);
    }
  };
  for (const auto& r : log.rounds) add(r.agent_ids[0], r.agent_ids[1]);
  for (const auto& ref : log.references) {
    if (ref.metric == "differential") add(ref.agent, ref.opponent);
  }
  return pairs;
}

CsvTable build_report(const std::string& report, const AnalysisLog& log,
                      const AnalyzeOptions& o) {
  if (report == "cooperation") {
    return cooperation_csv(cooperation_rates(log, parse_grouping(o.grouping)));
  }
  if (report == "differentials") {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!o.agent.empty()) {
      if (o.bots.empty()) throw ConfigError("--agent needs --bots");
      for (const auto& b : o.bots) pairs.emplace_back(o.agent, b);
    } else {
      pairs = differential_pairs(log);
    }
    std::vector<DifferentialReport> reps;
    for (const auto& [a, b] : pairs) reps.push_back(differentials(log, a, b));
    return differentials_csv(reps);
  }
  if (report == "proportions") {
    std::vector<std::pair<std::string, ChoiceProportions>> rows;
    for (const auto& s : rps_subjects(log, o.runs)) {
      rows.emplace_back(s.key(), choice_proportions(log.rounds, s));
    }
    return choice_proportions_csv(rows);
  }
  if (report == "independence") {
    std::vector<IndependenceRow> rows;
    for (const auto& s : rps_subjects(log, o.runs)) {
      IndependenceRow row{s.key(), transition_contingency(log.rounds, s), std::nullopt};
      if (row.table.total() > 0) row.test = chi_square_independence(row.table);
      rows.push_back(std::move(row));
    }
    return independence_csv(rows);
  }
  if (report == "profiles") return transition_profile_csv(profiles(log, o.runs, false));
  if (report == "ternary") return ternary_csv(profiles(log, o.runs, !o.all_subjects));
  if (report == "strategies") {
    return strategies_csv(classify_strategies(profiles(log, o.runs, !o.all_subjects), o.seed));
  }
  throw ConfigError("unknown report '" + report + "'");
}

const std::vector<std::string> kReports{"cooperation",  "differentials", "proportions",
                                        "independence", "profiles",      "ternary",
                                        "strategies"};

// Every report that applies to the log, as file name -> table.
std::vector<std::pair<std::string, CsvTable>> all_reports(const AnalysisLog& log,
                                                          const AnalyzeOptions& o) {
  std::vector<std::pair<std::string, CsvTable>> out;
  bool rps = false, pd = false, coop_refs = false;
  for (const auto& r : log.rounds) (r.game == Game::Rps ? rps : pd) = true;
  for (const auto& r : log.references) coop_refs |= r.metric == "cooperation_pct";
  if (pd || coop_refs) {
    for (const char* g : {"treatment", "round", "agent"}) {
      if (!pd && std::string(g) == "round") continue;
      AnalyzeOptions x = o;
      x.grouping = g;
      out.emplace_back(std::string("cooperation_") + g + ".csv", build_report("cooperation", log, x));
    }
  }
  AnalysisLog rps_log{{}, log.references};
  for (const auto& r : log.rounds) {
    if (r.game == Game::Rps) rps_log.rounds.push_back(r);
  }
  if (!differential_pairs(rps_log).empty()) {
    out.emplace_back("differentials.csv", build_report("differentials", rps_log, o));
  }
  if (rps) {
    for (const char* r : {"proportions", "independence", "profiles", "ternary", "strategies"}) {
      out.emplace_back(std::string(r) + ".csv", build_report(r, log, o));
    }
  }
  return out;
}

// ------------------------------------------------------------------ validate

struct Finding {
  std::string item;
  std::string problem;  // empty when fine
};

std::vector<Finding> validate_bundled(const std::vector<std::string>& logs,
                                      const std::vector<std::string>& manifests,
                                      const std::vector<std::string>& matrices) {
  std::vector<Finding> out;
  auto check = [&](const std::string& item, const std::function<void()>& f) {
    try {
      f();
      out.push_back({item, ""});
    } catch (const std::exception& e) {
      out.push_back({item, e.what()});
    }
  };
  auto matrix_check = [](const fs::path& p) {
    auto m = load_matrix_file(p);
    auto v = validate_matrix(m);
    if (!v.empty()) throw ConfigError(v.front().message);
  };
  const fs::path dir = data_dir();
  for (const auto& name : bundled_matrix_names()) {
    auto p = dir / "matrices" / (name + ".txt");
    check("matrix " + p.string(), [&] { matrix_check(p); });
  }
  for (const auto& p : matrices) check("matrix " + p, [&] { matrix_check(p); });

  const std::map<Game, std::vector<std::string>> required{
      {Game::Rps, {"system", "decision", "feedback", "reminder"}},
      {Game::Pd,
       {"system", "intro", "rule_dice", "rule_single", "rule_finite", "duration_dice",
        "duration_single", "duration_finite", "new_match", "feedback", "dice_continue",
        "finite_continue", "dice_end", "finite_end", "reminder"}}};
  for (const auto& [game, parts] : required) {
    auto p = dir / "templates" / (std::string(to_string(game)) + ".tmpl");
    check("template " + p.string(), [&, game = game, parts = parts] {
      auto t = PromptTemplate::load(game, p);
      for (const auto& part : parts) {
        if (!t.has_part(part)) throw TemplateError("missing part [" + part + "]");
      }
      for (const auto& part : t.parts()) {
        Bindings b;
        for (const auto& slot : t.placeholders(part)) b[slot] = "x";
        if (unreplaced_markers(t.render(part, b)) != 0) {
          throw TemplateError("part [" + part + "] leaves markers after rendering");
        }
      }
    });
  }
  for (const char* bot : {"wslu", "wdls", "wslc", "uniform"}) {
    check(std::string("table ") + bot, [&] {
      auto v = TransitionPolicyTable::uniform().violations();
      if (std::string(bot) != "uniform") v = policy_table(bot).violations();
      if (!v.empty()) throw ConfigError(v.front());
    });
  }
  std::vector<fs::path> fixtures;
  if (fs::is_directory(dir / "fixtures")) {
    for (const auto& e : fs::directory_iterator(dir / "fixtures")) {
      if (e.path().extension() == ".jsonl") fixtures.push_back(e.path());
    }
  }
  std::sort(fixtures.begin(), fixtures.end());
  for (const auto& p : logs) fixtures.emplace_back(p);
  for (const auto& p : fixtures) {
    check("log " + p.string(), [&] {
      auto env = load_log(p);
      if (env.empty()) throw SchemaError("empty log");
      to_analysis_log(env, true);
    });
  }
  for (const auto& p : manifests) check("manifest " + p, [&] { read_manifest(p); });
  return out;
}

// --------------------------------------------------------------------- serve

int serve(const ServerOptions& server_options, const SessionOptions& session_options,
          const std::vector<ModelEndpoint>& endpoints, std::ostream& out) {
  GatewayPool pool(endpoints);
  SessionRegistry registry(&pool, session_options);
  // Signals go to sigwait below, not to the worker threads.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  SessionServer server(registry, server_options);
  const int port = server.start();
  out << Json{{"verb", "serve"}, {"status", "listening"}, {"host", server_options.host},
              {"port", port}}
             .dump()
      << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  out << Json{{"verb", "serve"}, {"status", "ok"}, {"signal", sig}}.dump() << std::endl;
  return kExitOk;
}

}  // namespace

std::vector<std::string> expand_agents(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    auto star = n.find('*');
    if (star == std::string::npos) {
      out.push_back(n);
      continue;
    }
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(n.substr(star + 1), &used);
      if (used != n.size() - star - 1) count = 0;
    } catch (const std::exception&) {
      count = 0;
    }
    if (count < 1) throw ConfigError("bad agent repeat '" + n + "' (use name*count)");
    out.insert(out.end(), static_cast<std::size_t>(count), n.substr(0, star));
  }
  return out;
}

ModelEndpoint builtin_mock_endpoint() {
  ModelEndpoint e;
  e.name = "mock";
  e.backend = BackendKind::Mock;
  e.mock_style = MockStyle::Uniform;
  e.backoff_ms = 0;
  return e;
}

SessionPlan plan_from_config(const Json& config, const std::set<std::string>& endpoints) {
  SessionPlan plan;
  try {
    const auto verb = config.at("verb").get<std::string>();
    const auto session = config.at("session").get<std::string>();
    const auto seed = config.at("seed").get<std::uint64_t>();
    if (verb == "run-rps" || verb == "run-bots") {
      const int reps = config.at("reps").get<int>();
      const int rounds = config.at("rounds").get<int>();
      if (verb == "run-rps") {
        plan = plan_rps_tournament(
            resolve_all(config.at("agents").get<std::vector<std::string>>(), Game::Rps, endpoints),
            reps, rounds, config.at("self_play").get<bool>(), session, seed);
      } else {
        plan = plan_bot_series(
            resolve_agent(config.at("agent").get<std::string>(), Game::Rps, endpoints),
            resolve_all(config.at("bots").get<std::vector<std::string>>(), Game::Rps, endpoints),
            reps, rounds, session, seed);
      }
      plan.matrix = parse_matrix(config.at("matrix_text").get<std::string>());
    } else if (verb == "run-pd") {
      plan = plan_pd_session(
          resolve_all(config.at("agents").get<std::vector<std::string>>(), Game::Pd, endpoints),
          parse_ordering(config.at("ordering").get<std::string>()),
          parse_pd_mode(config.at("mode").get<std::string>()), session, seed);
    } else {
      throw ConfigError("manifest command '" + verb + "' cannot be re-run");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run configuration: ") + e.what());
  }
  validate_plan(plan);
  return plan;
}

Json execute_run(const Json& config, const std::vector<ModelEndpoint>& endpoints,
                 const fs::path& dir, int jobs, const std::optional<fs::path>& replay_log) {
  auto plan = plan_from_config(config, names_of(endpoints));
  const auto verb = config.at("verb").get<std::string>();
  std::vector<ModelEndpoint> used;
  GatewayPool pool;
  for (const auto& p : plan.participants) {
    if (p.agent.kind() != AgentKind::Llm) continue;
    const auto& name = std::get<LlmParams>(p.agent.params).endpoint;
    if (pool.contains(name)) continue;
    const auto& e = *std::find_if(endpoints.begin(), endpoints.end(),
                                  [&](const ModelEndpoint& x) { return x.name == name; });
    used.push_back(e);
    if (replay_log && e.backend == BackendKind::Http) {
      pool.add(e, ReplayBackend::from_log(*replay_log));
    } else {
      pool.add(e);
    }
  }

  fs::create_directories(dir);
  RunManifest manifest;
  manifest.created_at = utc_timestamp();
  manifest.command = verb;
  manifest.master_seed = plan.master_seed;
  manifest.config = config;
  manifest.plan = plan_to_json(plan);
  manifest.endpoints = used;
  write_manifest(manifest, dir / "manifest.json");

  LogWriter writer(dir / "log.jsonl");
  int aborted = 0;
  std::size_t rounds = 0;
  auto results = run_session(plan, pool, &writer,
                             {jobs, [&](const MatchResult& r) {
                                aborted += r.aborted();
                                rounds += r.rounds.size();
                              }});
  Json summary{{"verb", verb},
               {"status", "ok"},
               {"session", plan.session_id},
               {"matches", results.size()},
               {"rounds", rounds},
               {"aborted", aborted},
               {"manifest", (dir / "manifest.json").string()},
               {"log", (dir / "log.jsonl").string()}};
  auto log = to_analysis_log(load_log(dir / "log.jsonl"));
  if (verb == "run-bots") {
    std::vector<DifferentialReport> reps;
    Json diffs = Json::array();
    for (const auto& bot : config.at("bots")) {
      try {
        auto d = differentials(log, config.at("agent").get<std::string>(), bot.get<std::string>());
        diffs.push_back({{"bot", d.bot},
                         {"matches", d.matches},
                         {"win_differential", d.win_differential},
                         {"payoff_differential", d.payoff_differential}});
        reps.push_back(std::move(d));
      } catch (const DomainError&) {
        diffs.push_back({{"bot", bot}, {"matches", 0}});
      }
    }
    export_csv(differentials_csv(reps), dir / "differentials.csv");
    summary["differentials"] = diffs;
    summary["report"] = (dir / "differentials.csv").string();
  } else if (verb == "run-pd") {
    auto report = cooperation_rates(log, CooperationGrouping::Treatment);
    export_csv(cooperation_csv(report), dir / "cooperation.csv");
    Json coop = Json::object();
    for (const auto& r : report.rows) coop[r.group] = r.percentage;
    summary["cooperation_pct"] = coop;
    summary["report"] = (dir / "cooperation.csv").string();
  }
  return summary;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::string preset_name = scan_preset(argc, argv);
  auto preset_it = presets().find(preset_name);
  if (preset_it == presets().end()) {
    err << "error: unknown preset '" << preset_name << "' (paper, smoke)\n";
    return kExitInvalidConfig;
  }
  const Preset& P = preset_it->second;

  CLI::App app{"Repeated-game experiment harness for rule bots, equilibrium players, LLMs "
               "and humans.",
               "boundedplay"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option values; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  std::string data_dir_opt;
  std::string preset = preset_name;
  app.add_option("--data-dir", data_dir_opt, "Directory with matrices/, templates/, fixtures/");
  app.add_option("--preset", preset, "Built-in defaults: paper (default) or smoke")
      ->check(CLI::IsMember({"paper", "smoke"}));

  // Options shared by the run verbs.
  struct RunFlags {
    std::string session;
    std::uint64_t seed = 0;
    int rounds = 0;
    int reps = 0;
    std::string matrix;
    std::string out;
    int jobs = 1;
    std::string endpoints;
  };
  RunFlags rps_flags{"rps-tournament", 0, P.rounds, P.reps, P.matrix, "runs/rps-tournament", 1, ""},
      bots_flags{"rps-bots", 0, P.rounds, P.reps, P.matrix, "runs/rps-bots", 1, ""},
      pd_flags{"", 0, 0, 0, "", "", 1, ""};
  auto add_run_flags = [](CLI::App* sub, RunFlags& f, bool rps) {
    sub->add_option("--session", f.session, "Session id")->capture_default_str();
    sub->add_option("--seed", f.seed, "Master seed")->capture_default_str();
    if (rps) {
      sub->add_option("--rounds", f.rounds, "Rounds per match")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
      sub->add_option("--reps", f.reps, "Repetitions of every pairing")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
      sub->add_option("--matrix", f.matrix, "Bundled matrix name or matrix file")
          ->capture_default_str();
    }
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", f.jobs, "Matches played in parallel")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--endpoints", f.endpoints, "JSON file with LLM endpoint definitions");
  };

  auto* solve = app.add_subcommand("solve", "Nash equilibria and bot-vs-bot stationary payoffs");
  std::string solve_matrix = P.matrix, solve_format = "text", solve_out;
  std::vector<std::string> solve_policies;
  solve->add_option("--matrix", solve_matrix, "Bundled matrix name or matrix file")
      ->capture_default_str();
  solve->add_option("--format", solve_format, "text or csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "csv"}));
  solve->add_option("--policies", solve_policies,
                    "Transition bots whose ordered pairs get stationary payoffs")
      ->delimiter(',');
  solve->add_option("--out", solve_out, "Write equilibria.csv (and stationary.csv) here");

  auto* run_rps = app.add_subcommand("run-rps", "Fully crossed RPS tournament");
  std::vector<std::string> rps_agents = P.rps_agents;
  bool no_self_play = false;
  add_run_flags(run_rps, rps_flags, true);
  run_rps->add_option("--agents", rps_agents, "Agents (bots, 'human' is not allowed, endpoints)")
      ->delimiter(',')
      ->capture_default_str();
  run_rps->add_flag("--no-self-play", no_self_play, "Skip pairings of an agent with itself");

  auto* run_bots = app.add_subcommand("run-bots", "One agent against each bot in turn");
  std::string bots_agent = P.bots_agent;
  std::vector<std::string> bots = P.bots;
  add_run_flags(run_bots, bots_flags, true);
  run_bots->add_option("--agent", bots_agent, "Agent under test")->capture_default_str();
  run_bots->add_option("--bots", bots, "Opponent bots")->delimiter(',')->capture_default_str();

  auto* run_pd = app.add_subcommand("run-pd", "Prisoner's dilemma session with rotation matching");
  std::vector<std::string> pd_agents = P.pd_agents;
  std::string pd_mode = P.mode, pd_ordering = P.ordering;
  add_run_flags(run_pd, pd_flags, false);
  run_pd->add_option("--agents", pd_agents, "N agents (name*count allowed); first half play Red")
      ->delimiter(',')
      ->capture_default_str();
  run_pd->add_option("--mode", pd_mode, "dice or finite")
      ->capture_default_str()
      ->check(CLI::IsMember({"dice", "finite"}));
  run_pd->add_option("--ordering", pd_ordering, "normal or usd")
      ->capture_default_str()
      ->check(CLI::IsMember({"normal", "usd"}));

  AnalyzeOptions an;
  auto add_log_inputs = [](CLI::App* sub, AnalyzeOptions& o) {
    sub->add_option("--log", o.logs, "Round log(s)")->required();
    sub->add_option("--session", o.session, "Keep one session");
    sub->add_option("--match", o.match, "Keep one match");
    sub->add_option("--agent-id", o.agent_filter, "Keep matches seating this agent");
    sub->add_option("--treatment", o.treatment, "Keep one treatment, e.g. dice:0.75");
    sub->add_flag("--include-aborted", o.include_aborted, "Keep rounds of aborted matches");
    sub->add_flag("--runs", o.runs, "One subject per (match, seat) instead of per agent");
    sub->add_flag("--all-subjects", o.all_subjects,
                  "Cluster every subject, not only outcome-dependent ones");
    sub->add_option("--cluster-seed", o.seed, "k-means seed")->capture_default_str();
  };
  auto* analyze = app.add_subcommand("analyze", "One report from round logs as CSV");
  add_log_inputs(analyze, an);
  analyze->add_option("--report", an.report, "Report name")
      ->capture_default_str()
      ->check(CLI::IsMember(kReports));
  analyze->add_option("--grouping", an.grouping, "treatment, round or agent (cooperation)")
      ->capture_default_str()
      ->check(CLI::IsMember({"treatment", "round", "agent"}));
  analyze->add_option("--agent", an.agent, "Agent for differentials");
  analyze->add_option("--bots", an.bots, "Bots for differentials")->delimiter(',');
  analyze->add_option("--out", an.out, "CSV file; stdout when omitted");

  AnalyzeOptions ex;
  std::string export_out = "reports";
  auto* exp = app.add_subcommand("export", "Every applicable report into a directory");
  add_log_inputs(exp, ex);
  exp->add_option("--out", export_out, "Output directory")->capture_default_str();

  auto* serve_cmd = app.add_subcommand("serve", "HTTP session service for live participants");
  ServerOptions server_options;
  SessionOptions session_options;
  std::string token_env, serve_endpoints, log_dir = "sessions";
  double idle_seconds = 1800;
  serve_cmd->add_option("--host", server_options.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", server_options.port, "Port (0 picks one)")->capture_default_str();
  serve_cmd->add_option("--token-env", token_env,
                        "Environment variable holding the shared X-Session-Token");
  serve_cmd->add_option("--idle-timeout", idle_seconds, "Seconds before an idle session expires")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--log-dir", log_dir, "Directory for session logs and manifests")
      ->capture_default_str();
  serve_cmd->add_option("--endpoints", serve_endpoints, "JSON file with LLM endpoint definitions");

  auto* replay = app.add_subcommand("replay", "Re-run a logged run and compare logs byte for byte");
  std::string replay_manifest, replay_log, replay_out;
  replay->add_option("--manifest", replay_manifest, "manifest.json of the original run")
      ->required();
  replay->add_option("--log", replay_log, "Original log (default: log.jsonl next to the manifest)");
  replay->add_option("--out", replay_out, "Keep the re-run here instead of a temporary directory");

  auto* validate = app.add_subcommand("validate", "Check bundled matrices, tables, templates, "
                                                  "fixtures and any given files");
  std::vector<std::string> v_logs, v_manifests, v_matrices;
  validate->add_option("--log", v_logs, "Extra logs to check");
  validate->add_option("--manifest", v_manifests, "Manifests to check");
  validate->add_option("--matrix", v_matrices, "Matrix files to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  std::string verb = app.get_subcommands().front()->get_name();
  try {
    if (!data_dir_opt.empty()) set_data_dir(data_dir_opt);

    auto run_config = [&](const RunFlags& f, Json extra) {
      Json c{{"verb", verb}, {"session", f.session}, {"seed", f.seed}};
      if (verb != "run-pd") {
        c["rounds"] = f.rounds;
        c["reps"] = f.reps;
        c["matrix"] = f.matrix;
        c["matrix_text"] = format_matrix(resolve_matrix(f.matrix));
      }
      for (auto& [k, v] : extra.items()) c[k] = v;
      return c;
    };

    if (verb == "solve") {
      auto m = resolve_matrix(solve_matrix);
      auto eqs = support_enumeration_nash(m);
      Json summary{{"verb", verb}, {"status", "ok"}, {"matrix", m.name()}};
      Json list = Json::array();
      for (const auto& e : eqs) {
        list.push_back({{"row", vector_json(e.row.weights())},
                        {"col", vector_json(e.col.weights())},
                        {"values", {e.row_value, e.col_value}}});
      }
      summary["equilibria"] = list;
      std::vector<std::pair<std::array<std::string, 2>, StationaryPayoffs>> stationary;
      for (const auto& a : solve_policies) {
        for (const auto& b : solve_policies) {
          stationary.push_back(
              {{a, b}, markov_stationary_payoffs(policy_table(a), policy_table(b), m)});
        }
      }
      if (!stationary.empty()) {
        Json st = Json::array();
        for (const auto& [names, s] : stationary) {
          st.push_back({{"a", names[0]}, {"b", names[1]}, {"payoff_a", s.payoff_a},
                        {"payoff_b", s.payoff_b}});
        }
        summary["stationary"] = st;
      }
      if (!solve_out.empty()) {
        fs::create_directories(solve_out);
        std::ofstream(fs::path(solve_out) / "equilibria.csv") << format_equilibria_csv(m, eqs);
        if (!stationary.empty()) {
          export_csv(stationary_csv(stationary), fs::path(solve_out) / "stationary.csv");
        }
        summary["out"] = solve_out;
      } else {
        out << (solve_format == "csv" ? format_equilibria_csv(m, eqs)
                                      : format_equilibria_text(m, eqs));
        if (!stationary.empty()) out << to_csv(stationary_csv(stationary));
      }
      out << summary.dump() << "\n";
      return kExitOk;
    }

    if (verb == "run-rps" || verb == "run-bots" || verb == "run-pd") {
      Json config;
      const RunFlags* f = nullptr;
      if (verb == "run-rps") {
        f = &rps_flags;
        config = run_config(*f, {{"agents", expand_agents(rps_agents)},
                                 {"self_play", !no_self_play}});
      } else if (verb == "run-bots") {
        f = &bots_flags;
        config = run_config(*f, {{"agent", bots_agent}, {"bots", expand_agents(bots)}});
      } else {
        if (pd_flags.session.empty()) pd_flags.session = "pd-" + pd_mode + "-" + pd_ordering;
        if (pd_flags.out.empty()) pd_flags.out = "runs/" + pd_flags.session;
        f = &pd_flags;
        config = run_config(*f, {{"agents", expand_agents(pd_agents)},
                                 {"mode", pd_mode},
                                 {"ordering", pd_ordering}});
      }
      auto summary = execute_run(config, load_endpoints(f->endpoints), f->out, f->jobs);
      out << summary.dump() << "\n";
      return summary["aborted"].get<int>() > 0 ? kExitFailure : kExitOk;
    }

    if (verb == "analyze" || verb == "export") {
      AnalyzeOptions& o = verb == "analyze" ? an : ex;
      LogFilter filter;
      if (!o.session.empty()) filter.session = o.session;
      if (!o.match.empty()) filter.match = o.match;
      if (!o.agent_filter.empty()) filter.agent = o.agent_filter;
      if (!o.treatment.empty()) filter.treatment = o.treatment;
      auto log = load_inputs(o.logs, filter, o.include_aborted);
      Json summary{{"verb", verb}, {"status", "ok"}, {"rounds", log.rounds.size()},
                   {"references", log.references.size()}};
      if (verb == "analyze") {
        auto table = build_report(o.report, log, o);
        summary["report"] = o.report;
        summary["rows"] = table.rows.size();
        if (o.out.empty()) {
          out << to_csv(table);
          err << summary.dump() << "\n";
        } else {
          export_csv(table, o.out);
          summary["out"] = o.out;
          out << summary.dump() << "\n";
        }
        return kExitOk;
      }
      fs::create_directories(export_out);
      Json files = Json::object();
      for (const auto& [name, table] : all_reports(log, o)) {
        files[name] = export_csv(table, fs::path(export_out) / name);
      }
      if (files.empty()) throw DomainError("nothing to export from the given logs");
      summary["out"] = export_out;
      summary["files"] = files;
      out << summary.dump() << "\n";
      return kExitOk;
    }

    if (verb == "serve") {
      if (!token_env.empty()) {
        const char* token = std::getenv(token_env.c_str());
        if (!token || !*token) throw ConfigError("environment variable " + token_env + " is empty");
        server_options.token = token;
      }
      session_options.log_dir = log_dir;
      session_options.idle_timeout =
          std::chrono::milliseconds(static_cast<std::int64_t>(idle_seconds * 1000));
      return serve(server_options, session_options, load_endpoints(serve_endpoints), out);
    }

    if (verb == "replay") {
      auto manifest = read_manifest(replay_manifest);
      fs::path original =
          replay_log.empty() ? fs::path(replay_manifest).parent_path() / "log.jsonl" : fs::path(replay_log);
      if (!fs::exists(original)) throw ConfigError("no log at " + original.string());
      std::vector<ModelEndpoint> endpoints = manifest.endpoints;
      fs::path dir = replay_out;
      std::optional<fs::path> scratch;
      if (dir.empty()) {
        dir = fs::temp_directory_path() /
              ("boundedplay-replay-" + std::to_string(::getpid()) + "-" + manifest.config.value("session", "run"));
        scratch = dir;
      }
      Json summary;
      try {
        execute_run(manifest.config, endpoints, dir, 1, original);
        const auto a = canonical_log_text(original);
        const auto b = canonical_log_text(dir / "log.jsonl");
        summary = {{"verb", verb}, {"status", a == b ? "ok" : "mismatch"},
                   {"identical", a == b}, {"log", original.string()},
                   {"lines", std::count(a.begin(), a.end(), '\n')}};
        if (a != b) {
          std::istringstream sa(a), sb(b);
          std::string la, lb;
          int line = 0;
          while (true) {
            ++line;
            const bool ga = static_cast<bool>(std::getline(sa, la));
            const bool gb = static_cast<bool>(std::getline(sb, lb));
            if (!ga && !gb) break;
            if (!ga || !gb || la != lb) {
              summary["first_difference"] = line;
              break;
            }
          }
        }
      } catch (...) {
        if (scratch) fs::remove_all(*scratch);
        throw;
      }
      if (scratch) {
        fs::remove_all(*scratch);
      } else {
        summary["out"] = dir.string();
      }
      out << summary.dump() << "\n";
      return summary["identical"].get<bool>() ? kExitOk : kExitFailure;
    }

    if (verb == "validate") {
      auto findings = validate_bundled(v_logs, v_manifests, v_matrices);
      int failed = 0;
      for (const auto& f : findings) {
        if (f.problem.empty()) {
          out << "ok    " << f.item << "\n";
        } else {
          ++failed;
          out << "FAIL  " << f.item << ": " << f.problem << "\n";
        }
      }
      out << Json{{"verb", verb}, {"status", failed ? "invalid" : "ok"},
                  {"checked", findings.size()}, {"failed", failed}}
                 .dump()
          << "\n";
      return failed ? kExitFailure : kExitOk;
    }
  } catch (const std::exception& e) {
    const int code = is_config_error(e) ? kExitInvalidConfig : kExitFailure;
    err << "error: " << e.what() << "\n";
    out << Json{{"verb", verb}, {"status", "error"}, {"exit", code}, {"error", e.what()}}.dump()
        << "\n";
    return code;
  }
  return kExitFailure;
}

}  // namespace boundedplay::cli
