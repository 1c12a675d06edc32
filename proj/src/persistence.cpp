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

#include <chrono>
#include <cmath>
#include <ctime>
#include <set>
#include <sstream>

#include "boundedplay/errors.hpp"
#include "boundedplay/format.hpp"

namespace boundedplay {
namespace {

Json number(double v) {
  if (std::isfinite(v) && v == std::round(v) && std::abs(v) < 1e15) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

std::array<std::string, 2> string_pair(const Json& j, const char* key) {
  auto v = field<std::vector<std::string>>(j, key);
  if (v.size() != 2) throw SchemaError(std::string("field '") + key + "' needs two entries");
  return {v[0], v[1]};
}

Action action_from(const std::string& text, Game game) {
  auto a = parse_action(text, game, Role::None);
  if (!a) throw SchemaError("invalid action '" + text + "'");
  return *a;
}

std::string_view mock_style_name(MockStyle s) {
  switch (s) {
    case MockStyle::Uniform: return "uniform";
    case MockStyle::Fixed: return "fixed";
    case MockStyle::Garbage: return "garbage";
  }
  return "?";
}

MockStyle parse_mock_style(std::string_view s) {
  for (auto m : {MockStyle::Uniform, MockStyle::Fixed, MockStyle::Garbage}) {
    if (s == mock_style_name(m)) return m;
  }
  throw ConfigError("unknown mock style '" + std::string(s) + "'");
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string grouping_name(CooperationGrouping g) {
  switch (g) {
    case CooperationGrouping::Treatment: return "treatment";
    case CooperationGrouping::Round: return "round";
    case CooperationGrouping::Agent: return "agent";
  }
  return "?";
}

}  // namespace

std::string_view to_string(EnvelopeType t) {
  switch (t) {
    case EnvelopeType::MatchStart: return "match_start";
    case EnvelopeType::Round: return "round";
    case EnvelopeType::Transcript: return "transcript";
    case EnvelopeType::MatchEnd: return "match_end";
    case EnvelopeType::Reference: return "reference";
  }
  return "?";
}

EnvelopeType parse_envelope_type(std::string_view text) {
  for (auto t : {EnvelopeType::MatchStart, EnvelopeType::Round, EnvelopeType::Transcript,
                 EnvelopeType::MatchEnd, EnvelopeType::Reference}) {
    if (text == to_string(t)) return t;
  }
  throw SchemaError("unknown record type '" + std::string(text) + "'");
}

Json round_to_json(const RoundRecord& r) {
  Json j;
  j["round"] = r.round_index;
  j["game"] = to_string(r.game);
  j["treatment"] = r.treatment;
  j["agents"] = {r.agent_ids[0], r.agent_ids[1]};
  j["roles"] = {to_string(r.roles[0]), to_string(r.roles[1])};
  j["actions"] = {to_string(r.actions[0].label()), to_string(r.actions[1].label())};
  j["payoffs"] = {number(r.payoffs[0]), number(r.payoffs[1])};
  if (r.outcomes[0] && r.outcomes[1]) {
    j["outcomes"] = {to_string(*r.outcomes[0]), to_string(*r.outcomes[1])};
  }
  if (r.continues) j["continues"] = *r.continues;
  if (r.die_face > 0) j["die_face"] = r.die_face;
  return j;
}

RoundRecord round_from_json(const Json& d, const std::string& session, const std::string& match) {
  RoundRecord r;
  r.session_id = session;
  r.match_id = match;
  r.round_index = field<int>(d, "round");
  if (r.round_index < 1) throw SchemaError("round index must be at least 1");
  try {
    r.game = parse_game(field<std::string>(d, "game"));
  } catch (const ConfigError& e) {
    throw SchemaError(e.what());
  }
  r.treatment = field<std::string>(d, "treatment");
  auto agents = string_pair(d, "agents");
  if (agents[0].empty() || agents[1].empty()) throw SchemaError("empty agent id");
  r.agent_ids = {agents[0], agents[1]};
  if (d.contains("roles")) {
    auto roles = string_pair(d, "roles");
    try {
      r.roles = {parse_role(roles[0]), parse_role(roles[1])};
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    }
  }
  auto actions = string_pair(d, "actions");
  r.actions = {action_from(actions[0], r.game), action_from(actions[1], r.game)};
  auto payoffs = field<std::vector<double>>(d, "payoffs");
  if (payoffs.size() != 2) throw SchemaError("field 'payoffs' needs two entries");
  r.payoffs = {payoffs[0], payoffs[1]};
  if (d.contains("outcomes")) {
    auto o = string_pair(d, "outcomes");
    try {
      r.outcomes = {parse_outcome(o[0]), parse_outcome(o[1])};
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    }
  } else if (r.game == Game::Rps) {
    throw SchemaError("missing field 'outcomes'");
  }
  if (d.contains("continues")) r.continues = field<bool>(d, "continues");
  if (d.contains("die_face")) r.die_face = field<int>(d, "die_face");
  return r;
}

Envelope round_envelope(const RoundRecord& r) {
  Envelope e;
  e.type = EnvelopeType::Round;
  e.session = r.session_id;
  e.match = r.match_id;
  e.timestamp = r.timestamp;
  e.data = round_to_json(r);
  return e;
}

Envelope match_start_envelope(const MatchHeader& h) {
  Envelope e;
  e.type = EnvelopeType::MatchStart;
  e.session = h.session;
  e.match = h.match;
  e.data["game"] = to_string(h.game);
  e.data["treatment"] = h.treatment;
  if (!h.block.empty()) e.data["block"] = h.block;
  e.data["agents"] = {h.agents[0], h.agents[1]};
  e.data["roles"] = {to_string(h.roles[0]), to_string(h.roles[1])};
  e.data["subjects"] = {h.subjects[0], h.subjects[1]};
  return e;
}

MatchHeader match_header_from(const Envelope& e) {
  MatchHeader h;
  h.session = e.session;
  h.match = e.match;
  try {
    h.game = parse_game(field<std::string>(e.data, "game"));
    auto roles = string_pair(e.data, "roles");
    h.roles = {parse_role(roles[0]), parse_role(roles[1])};
  } catch (const ConfigError& ex) {
    throw SchemaError(ex.what());
  }
  h.treatment = field<std::string>(e.data, "treatment");
  if (e.data.contains("block")) h.block = field<std::string>(e.data, "block");
  h.agents = string_pair(e.data, "agents");
  h.subjects = string_pair(e.data, "subjects");
  return h;
}

Envelope match_end_envelope(const std::string& session, const std::string& match,
                            const MatchFooter& f) {
  Envelope e;
  e.type = EnvelopeType::MatchEnd;
  e.session = session;
  e.match = match;
  e.data["termination"] = f.termination;
  e.data["rounds"] = f.rounds;
  e.data["totals"] = {number(f.totals[0]), number(f.totals[1])};
  e.data["aborted"] = f.aborted;
  if (!f.reason.empty()) e.data["reason"] = f.reason;
  return e;
}

MatchFooter match_footer_from(const Envelope& e) {
  MatchFooter f;
  f.termination = field<std::string>(e.data, "termination");
  f.rounds = field<int>(e.data, "rounds");
  auto totals = field<std::vector<double>>(e.data, "totals");
  if (totals.size() != 2) throw SchemaError("field 'totals' needs two entries");
  f.totals = {totals[0], totals[1]};
  f.aborted = field<bool>(e.data, "aborted");
  if (e.data.contains("reason")) f.reason = field<std::string>(e.data, "reason");
  return f;
}

Envelope transcript_envelope(const std::string& session, const std::string& match, int slot,
                             const std::string& agent, const ChatTranscript& t) {
  Envelope e;
  e.type = EnvelopeType::Transcript;
  e.session = session;
  e.match = match;
  e.data["slot"] = slot;
  e.data["agent"] = agent;
  auto& msgs = e.data["messages"] = Json::array();
  for (const auto& m : t.messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
  auto& choices = e.data["parsed_choices"] = Json::array();
  for (auto a : t.parsed_choices) choices.push_back(to_string(a.label()));
  e.data["tokens_used"] = t.tokens_used;
  e.data["latencies_ms"] = t.latencies_ms;
  return e;
}

ChatTranscript transcript_from(const Envelope& e) {
  ChatTranscript t;
  field<int>(e.data, "slot");
  field<std::string>(e.data, "agent");
  if (!e.data.contains("messages") || !e.data["messages"].is_array()) {
    throw SchemaError("missing field 'messages'");
  }
  for (const auto& m : e.data["messages"]) {
    t.add(field<std::string>(m, "role"), field<std::string>(m, "text"));
  }
  if (e.data.contains("parsed_choices")) {
    for (const auto& c : e.data["parsed_choices"]) {
      auto text = c.get<std::string>();
      auto a = parse_action(text, Game::Rps, Role::None);
      if (!a) a = parse_action(text, Game::Pd, Role::None);
      if (!a) throw SchemaError("invalid parsed choice '" + text + "'");
      t.parsed_choices.push_back(*a);
    }
  }
  if (e.data.contains("tokens_used")) t.tokens_used = field<long>(e.data, "tokens_used");
  if (e.data.contains("latencies_ms")) {
    t.latencies_ms = field<std::vector<double>>(e.data, "latencies_ms");
  }
  return t;
}

Envelope reference_envelope(const std::string& session, const ReferenceValue& v) {
  Envelope e;
  e.type = EnvelopeType::Reference;
  e.session = session;
  e.data["source"] = v.source;
  e.data["metric"] = v.metric;
  e.data["agent"] = v.agent;
  if (!v.opponent.empty()) e.data["opponent"] = v.opponent;
  if (!v.treatment.empty()) e.data["treatment"] = v.treatment;
  e.data["value"] = v.value;
  if (v.metric == "differential") e.data["value2"] = v.value2;
  return e;
}

ReferenceValue reference_from(const Envelope& e) {
  ReferenceValue v;
  v.source = field<std::string>(e.data, "source");
  v.metric = field<std::string>(e.data, "metric");
  if (v.metric != "cooperation_pct" && v.metric != "differential") {
    throw SchemaError("unknown reference metric '" + v.metric + "'");
  }
  v.agent = field<std::string>(e.data, "agent");
  if (e.data.contains("opponent")) v.opponent = field<std::string>(e.data, "opponent");
  if (e.data.contains("treatment")) v.treatment = field<std::string>(e.data, "treatment");
  v.value = field<double>(e.data, "value");
  if (v.metric == "differential") v.value2 = field<double>(e.data, "value2");
  return v;
}

void validate_envelope(const Envelope& e) {
  if (e.version != kLogVersion) {
    throw SchemaError("unsupported record version " + std::to_string(e.version));
  }
  if (e.session.empty()) throw SchemaError("missing session id");
  if (e.match.empty() && e.type != EnvelopeType::Reference) {
    throw SchemaError("missing match id");
  }
  if (e.seq < 1) throw SchemaError("sequence numbers start at 1");
  if (!e.data.is_object()) throw SchemaError("data must be an object");
  try {
    switch (e.type) {
      case EnvelopeType::Round: round_from_json(e.data, e.session, e.match); break;
      case EnvelopeType::MatchStart: match_header_from(e); break;
      case EnvelopeType::MatchEnd: match_footer_from(e); break;
      case EnvelopeType::Transcript: transcript_from(e); break;
      case EnvelopeType::Reference: reference_from(e); break;
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(ex.what());
  }
}

Json envelope_to_json(const Envelope& e) {
  Json j;
  j["v"] = e.version;
  j["type"] = to_string(e.type);
  j["session"] = e.session;
  j["match"] = e.match;
  j["seq"] = e.seq;
  if (!e.timestamp.empty()) j["ts"] = e.timestamp;
  j["data"] = e.data;
  return j;
}

Envelope envelope_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("record is not an object");
  Envelope e;
  e.version = field<int>(j, "v");
  e.type = parse_envelope_type(field<std::string>(j, "type"));
  e.session = field<std::string>(j, "session");
  e.match = field<std::string>(j, "match");
  e.seq = field<std::int64_t>(j, "seq");
  if (j.contains("ts")) e.timestamp = field<std::string>(j, "ts");
  if (!j.contains("data")) throw SchemaError("missing field 'data'");
  e.data = j.at("data");
  return e;
}

std::string serialize(const Envelope& e) { return envelope_to_json(e).dump(); }

std::string canonical_line(const std::string& line) {
  Json j = Json::parse(line);
  j.erase("ts");
  if (j.contains("data") && j["data"].is_object()) j["data"].erase("latencies_ms");
  return j.dump();
}

LogWriter::LogWriter(const std::filesystem::path& path, bool append) : path_(path) {
  if (append && std::filesystem::exists(path)) {
    for (const auto& e : load_log(path)) {
      auto& last = last_seq_[{e.session, e.match}];
      last = std::max(last, e.seq);
    }
  }
  out_.open(path, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!out_) throw std::runtime_error("cannot open log " + path.string() + " for writing");
}

Ack LogWriter::append(Envelope e) {
  std::lock_guard lock(mu_);
  auto& last = last_seq_[{e.session, e.match}];
  if (e.seq == 0) {
    e.seq = last + 1;
  } else if (e.seq <= last) {
    throw SchemaError("duplicate sequence number " + std::to_string(e.seq) + " for match '" +
                      e.match + "'");
  } else if (e.seq != last + 1) {
    throw SchemaError("sequence gap: expected " + std::to_string(last + 1) + " for match '" +
                      e.match + "', got " + std::to_string(e.seq));
  }
  validate_envelope(e);
  out_ << serialize(e) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed on " + path_.string());
  last = e.seq;
  return {e.seq};
}

std::vector<Envelope> parse_log(std::string_view text, const std::string& origin,
                                const LogFilter& filter) {
  std::vector<Envelope> all;
  std::map<std::pair<std::string, std::string>, std::int64_t> last;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    auto where = origin + ":" + std::to_string(line_no) + ": ";
    try {
      Envelope e = envelope_from_json(Json::parse(line));
      validate_envelope(e);
      auto& prev = last[{e.session, e.match}];
      if (e.seq != prev + 1) {
        throw SchemaError("sequence number " + std::to_string(e.seq) + " follows " +
                          std::to_string(prev));
      }
      prev = e.seq;
      all.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(where + ex.what());
    } catch (const SchemaError& ex) {
      throw SchemaError(where + ex.what());
    }
  }

  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::set<std::string>> agents;
  std::map<Key, std::string> treatments;
  for (const auto& e : all) {
    if (e.type != EnvelopeType::Round && e.type != EnvelopeType::MatchStart) continue;
    Key k{e.session, e.match};
    for (const auto& a : e.data["agents"]) agents[k].insert(a.get<std::string>());
    treatments[k] = e.data["treatment"].get<std::string>();
  }
  std::vector<Envelope> out;
  for (auto& e : all) {
    if (filter.session && e.session != *filter.session) continue;
    if (filter.match && e.match != *filter.match) continue;
    if (e.type == EnvelopeType::Reference) {
      auto v = reference_from(e);
      if (filter.agent && v.agent != *filter.agent && v.opponent != *filter.agent) continue;
      if (filter.treatment && v.treatment != *filter.treatment) continue;
    } else {
      Key k{e.session, e.match};
      if (filter.agent && !agents[k].count(*filter.agent)) continue;
      if (filter.treatment && treatments[k] != *filter.treatment) continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Envelope> load_log(const std::filesystem::path& path, const LogFilter& filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read log " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_log(ss.str(), path.string(), filter);
}

AnalysisLog to_analysis_log(const std::vector<Envelope>& envelopes, bool include_aborted) {
  std::set<std::pair<std::string, std::string>> aborted;
  for (const auto& e : envelopes) {
    if (e.type == EnvelopeType::MatchEnd && match_footer_from(e).aborted) {
      aborted.insert({e.session, e.match});
    }
  }
  AnalysisLog log;
  for (const auto& e : envelopes) {
    if (e.type == EnvelopeType::Round) {
      if (!include_aborted && aborted.count({e.session, e.match})) continue;
      RoundRecord r = round_from_json(e.data, e.session, e.match);
      r.timestamp = e.timestamp;
      log.rounds.push_back(std::move(r));
    } else if (e.type == EnvelopeType::Reference) {
      log.references.push_back(reference_from(e));
    }
  }
  return log;
}

std::string canonical_log_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read log " + path.string());
  std::string out, line;
  while (std::getline(in, line)) {
    out += canonical_line(line);
    out += '\n';
  }
  return out;
}

Json endpoint_to_json(const ModelEndpoint& e) {
  Json j;
  j["name"] = e.name;
  j["backend"] = to_string(e.backend);
  if (e.backend == BackendKind::Http) {
    j["base_url"] = e.base_url;
    j["model"] = e.model;
  }
  j["temperature"] = e.temperature;
  if (!e.auth_token_env.empty()) j["auth_token_env"] = e.auth_token_env;
  j["max_retries"] = e.max_retries;
  j["transport_retries"] = e.transport_retries;
  j["timeout_seconds"] = e.timeout_seconds;
  j["backoff_ms"] = e.backoff_ms;
  j["max_concurrency"] = e.max_concurrency;
  if (e.backend == BackendKind::Mock) {
    j["mock_style"] = mock_style_name(e.mock_style);
    j["mock_seed"] = e.mock_seed;
    if (!e.mock_choice.empty()) j["mock_choice"] = e.mock_choice;
    if (e.mock_garbage_first) j["mock_garbage_first"] = e.mock_garbage_first;
  }
  if (e.backend == BackendKind::Replay) j["replay_path"] = e.replay_path;
  return j;
}

ModelEndpoint endpoint_from_json(const Json& j) {
  static const std::set<std::string> known{
      "name", "backend", "base_url", "model", "temperature", "auth_token_env", "max_retries",
      "transport_retries", "timeout_seconds", "backoff_ms", "max_concurrency", "mock_style",
      "mock_seed", "mock_choice", "mock_garbage_first", "replay_path"};
  if (!j.is_object()) throw ConfigError("endpoint must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown endpoint key '" + k + "'");
  }
  ModelEndpoint e;
  try {
    e.name = j.value("name", "");
    e.backend = parse_backend_kind(j.value("backend", "mock"));
    e.base_url = j.value("base_url", "");
    e.model = j.value("model", "");
    e.temperature = j.value("temperature", 1.0);
    e.auth_token_env = j.value("auth_token_env", "");
    e.max_retries = j.value("max_retries", 3);
    e.transport_retries = j.value("transport_retries", 3);
    e.timeout_seconds = j.value("timeout_seconds", 120.0);
    e.backoff_ms = j.value("backoff_ms", 500);
    e.max_concurrency = j.value("max_concurrency", 4);
    e.mock_style = parse_mock_style(j.value("mock_style", "uniform"));
    e.mock_seed = j.value("mock_seed", std::uint64_t{0});
    e.mock_choice = j.value("mock_choice", "");
    e.mock_garbage_first = j.value("mock_garbage_first", 0);
    e.replay_path = j.value("replay_path", "");
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("endpoint: ") + ex.what());
  }
  validate_endpoint(e);
  return e;
}

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["manifest_version"] = m.manifest_version;
  j["tool_version"] = m.tool_version;
  j["created_at"] = m.created_at;
  j["command"] = m.command;
  j["master_seed"] = m.master_seed;
  j["config"] = m.config;
  j["plan"] = m.plan;
  auto& eps = j["endpoints"] = Json::array();
  for (const auto& e : m.endpoints) eps.push_back(endpoint_to_json(e));
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  try {
    m.manifest_version = j.at("manifest_version").get<int>();
    if (m.manifest_version != kManifestVersion) {
      throw ConfigError("unsupported manifest version " + std::to_string(m.manifest_version));
    }
    m.tool_version = j.at("tool_version").get<std::string>();
    m.created_at = j.value("created_at", "");
    m.command = j.at("command").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.plan = j.value("plan", Json::object());
    for (const auto& e : j.value("endpoints", Json::array())) {
      m.endpoints.push_back(endpoint_from_json(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("manifest: ") + ex.what());
  }
  return m;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << manifest_to_json(m).dump(2) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  try {
    return manifest_from_json(Json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("manifest " + path.string() + ": " + ex.what());
  }
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

std::size_t export_csv(const CsvTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << to_csv(t);
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return t.rows.size();
}

CsvTable cooperation_csv(const CooperationReport& r) {
  CsvTable t{{"grouping", "group", "source", "cooperate", "choices", "percentage"}, {}};
  for (const auto& row : r.rows) {
    t.rows.push_back({grouping_name(r.grouping), row.group, row.source,
                      std::to_string(row.cooperate), std::to_string(row.choices),
                      fixed(row.percentage, kProbabilityPlaces)});
  }
  return t;
}

CsvTable differentials_csv(const std::vector<DifferentialReport>& reports) {
  CsvTable t{{"agent", "bot", "source", "matches", "win_differential", "payoff_differential"},
             {}};
  for (const auto& d : reports) {
    t.rows.push_back({d.agent, d.bot, d.source, std::to_string(d.matches),
                      fixed(d.win_differential, kProbabilityPlaces),
                      fixed(d.payoff_differential, kProbabilityPlaces)});
  }
  return t;
}

CsvTable choice_proportions_csv(
    const std::vector<std::pair<std::string, ChoiceProportions>>& rows) {
  CsvTable t{{"subject", "game", "rounds", "action", "proportion"}, {}};
  for (const auto& [subject, p] : rows) {
    for (int i = 0; i < p.proportions.size(); ++i) {
      t.rows.push_back({subject, std::string(to_string(p.game)), std::to_string(p.rounds),
                        std::string(to_string(Action::from_index(p.game, i).label())),
                        fixed(p.proportions(i), kProbabilityPlaces)});
    }
  }
  return t;
}

CsvTable independence_csv(const std::vector<IndependenceRow>& rows) {
  CsvTable t{{"subject", "transitions", "statistic", "degrees_of_freedom", "p_value",
              "significant", "defined", "warnings"},
             {}};
  for (const auto& r : rows) {
    std::vector<std::string> warnings = r.table.warnings;
    if (!r.test) {
      t.rows.push_back({r.subject, std::to_string(r.table.total()), "", "", "", "false",
                        "false", join(warnings, "; ")});
      continue;
    }
    const auto& x = *r.test;
    warnings.insert(warnings.end(), x.warnings.begin(), x.warnings.end());
    t.rows.push_back({r.subject, std::to_string(r.table.total()),
                      fixed(x.statistic, kStatisticPlaces), std::to_string(x.degrees_of_freedom),
                      x.defined ? fixed(x.p_value, kStatisticPlaces) : "",
                      x.significant ? "true" : "false", x.defined ? "true" : "false",
                      join(warnings, "; ")});
  }
  return t;
}

CsvTable transition_profile_csv(
    const std::vector<std::pair<std::string, TransitionProfile>>& rows) {
  CsvTable t{{"subject", "n_win", "n_tie", "n_lose"}, {}};
  for (auto o : {Outcome::Win, Outcome::Tie, Outcome::Lose}) {
    for (auto tr : {Transition::Stay, Transition::Upgrade, Transition::Downgrade}) {
      t.header.push_back(std::string(to_string(o)) + "_" + std::string(to_string(tr)));
    }
  }
  for (const auto& [subject, p] : rows) {
    std::vector<std::string> r{subject};
    for (int i = 0; i < 3; ++i) r.push_back(std::to_string(p.sample_sizes(i)));
    auto flat = p.flattened();
    for (int i = 0; i < 9; ++i) r.push_back(fixed(flat(i), kProbabilityPlaces));
    t.rows.push_back(std::move(r));
  }
  return t;
}

CsvTable ternary_csv(const std::vector<std::pair<std::string, TransitionProfile>>& rows) {
  CsvTable t{{"subject", "outcome", "stay", "upgrade", "downgrade", "x", "y"}, {}};
  for (const auto& [subject, p] : rows) {
    for (auto o : {Outcome::Win, Outcome::Tie, Outcome::Lose}) {
      if (p.sample_sizes(static_cast<int>(o)) == 0) continue;
      Eigen::Vector3d v = p.row(o);
      Eigen::Vector2d xy = ternary_coords(v);
      t.rows.push_back({subject, std::string(to_string(o)), fixed(v(0), kProbabilityPlaces),
                        fixed(v(1), kProbabilityPlaces), fixed(v(2), kProbabilityPlaces),
                        fixed(xy(0), kProbabilityPlaces), fixed(xy(1), kProbabilityPlaces)});
    }
  }
  return t;
}

CsvTable strategies_csv(const std::vector<StrategyClassification>& rows) {
  CsvTable t{{"subject", "label", "cluster"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.subject, r.label, r.cluster < 0 ? "" : std::to_string(r.cluster)});
  }
  return t;
}

CsvTable stationary_csv(
    const std::vector<std::pair<std::array<std::string, 2>, StationaryPayoffs>>& rows) {
  CsvTable t{{"policy_a", "policy_b", "payoff_a", "payoff_b", "damped", "iterations"}, {}};
  for (const auto& [names, s] : rows) {
    t.rows.push_back({names[0], names[1], fixed(s.payoff_a, kStatisticPlaces),
                      fixed(s.payoff_b, kStatisticPlaces), s.damped ? "true" : "false",
                      std::to_string(s.iterations)});
  }
  return t;
}

std::shared_ptr<ReplayBackend> ReplayBackend::from_log(const std::filesystem::path& path) {
  std::vector<ReplayBackend::Recorded> transcripts;
  for (const auto& e : load_log(path)) {
    if (e.type != EnvelopeType::Transcript) continue;
    transcripts.push_back({RequestContext{e.session, e.match, e.data.at("slot").get<int>()},
                           transcript_from(e).messages});
  }
  if (transcripts.empty()) {
    throw ConfigError("replay log " + path.string() + " holds no transcripts");
  }
  return std::make_shared<ReplayBackend>(std::move(transcripts));
}

}  // namespace boundedplay
