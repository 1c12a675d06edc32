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

#include "boundedplay/llm.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "boundedplay/errors.hpp"
#include "boundedplay/rng.hpp"

namespace boundedplay {
namespace {

std::mutex data_dir_mu;
std::filesystem::path& data_dir_ref() {
  static std::filesystem::path dir = BOUNDEDPLAY_DATA_DIR;
  return dir;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Separator so ("ab","c") and ("a","bc") differ.
  h ^= 0xff;
  h *= 0x100000001b3ULL;
  return h;
}

}  // namespace

std::filesystem::path data_dir() {
  std::lock_guard lock(data_dir_mu);
  return data_dir_ref();
}

void set_data_dir(std::filesystem::path dir) {
  std::lock_guard lock(data_dir_mu);
  data_dir_ref() = std::move(dir);
}

PromptTemplate PromptTemplate::parse(Game game, std::string_view text) {
  PromptTemplate t;
  t.game_ = game;
  std::string current;
  std::string body;
  bool in_part = false;
  auto flush = [&] {
    if (!in_part) return;
    while (!body.empty() && body.back() == '\n') body.pop_back();
    if (!t.parts_.emplace(current, body).second) {
      throw TemplateError("duplicate template part [" + current + "]");
    }
    body.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() > 2 && line.front() == '[' && line.back() == ']' &&
        line.find(' ') == std::string::npos) {
      flush();
      current = line.substr(1, line.size() - 2);
      in_part = true;
      continue;
    }
    if (!in_part) {
      if (line.empty() || line.front() == '#') continue;
      throw TemplateError("text before the first template part: " + line);
    }
    body += line;
    body += '\n';
  }
  flush();
  if (t.parts_.empty()) throw TemplateError("template has no parts");
  return t;
}

PromptTemplate PromptTemplate::load(Game game, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(game, ss.str());
}

const PromptTemplate& PromptTemplate::bundled(Game game) {
  static std::mutex mu;
  static std::map<Game, PromptTemplate> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(game);
  if (it == cache.end()) {
    auto file = data_dir() / "templates" / (game == Game::Rps ? "rps.tmpl" : "pd.tmpl");
    it = cache.emplace(game, load(game, file)).first;
  }
  return it->second;
}

bool PromptTemplate::has_part(std::string_view part) const {
  return parts_.find(part) != parts_.end();
}

std::vector<std::string> PromptTemplate::parts() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : parts_) out.push_back(k);
  return out;
}

const std::string& PromptTemplate::raw(std::string_view part) const {
  auto it = parts_.find(part);
  if (it == parts_.end()) throw TemplateError("unknown template part [" + std::string(part) + "]");
  return it->second;
}

std::vector<std::string> PromptTemplate::placeholders(std::string_view part) const {
  const std::string& text = raw(part);
  std::vector<std::string> out;
  for (std::size_t pos = text.find("{{"); pos != std::string::npos;
       pos = text.find("{{", pos + 2)) {
    auto end = text.find("}}", pos);
    if (end == std::string::npos) throw TemplateError("unterminated placeholder in [" +
                                                      std::string(part) + "]");
    std::string name = text.substr(pos + 2, end - pos - 2);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

std::string PromptTemplate::render(std::string_view part, const Bindings& bindings) const {
  const std::string& text = raw(part);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    auto close = text.find("}}", open);
    if (close == std::string::npos) {
      throw TemplateError("unterminated placeholder in [" + std::string(part) + "]");
    }
    std::string name = text.substr(open + 2, close - open - 2);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw TemplateError("missing binding '" + name + "' for template part [" +
                          std::string(part) + "]");
    }
    out.append(text, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(text, pos);
  return out;
}

int unreplaced_markers(std::string_view text) {
  int n = 0;
  for (auto pos = text.find("{{"); pos != std::string_view::npos; pos = text.find("{{", pos + 2)) {
    ++n;
  }
  return n;
}

Action parse_choice(std::string_view reply, Game game, Role role) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= reply.size()) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    lines.push_back(reply.substr(start, end - start));
    start = end + 1;
  }
  auto strip = [](std::string_view s) {
    constexpr std::string_view junk = " \t\r*_`\"'[](){}<>.!";
    while (!s.empty() && junk.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
    while (!s.empty() && junk.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
    return s;
  };
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string_view line = strip(*it);
    if (lower(line.substr(0, 6)) != "choice") continue;
    line.remove_prefix(6);
    line = strip(line);
    if (line.empty() || line.front() != ':') continue;
    line.remove_prefix(1);
    if (auto a = parse_action(strip(line), game, role)) return *a;
  }
  throw ParseFailure(std::string(reply));
}

std::string choice_format(Game game, Role role) {
  if (game == Game::Rps) return "[Rock/Paper/Scissors]";
  return role == Role::Blue ? "L/R" : "U/D";
}

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Http: return "http";
    case BackendKind::Mock: return "mock";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view text) {
  for (auto k : {BackendKind::Http, BackendKind::Mock, BackendKind::Replay}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown backend '" + std::string(text) + "'");
}

void validate_endpoint(const ModelEndpoint& e) {
  auto fail = [&](const std::string& what) {
    throw ConfigError("endpoint '" + e.name + "': " + what);
  };
  if (e.name.empty()) throw ConfigError("endpoint without a name");
  if (!(e.temperature >= 0 && e.temperature <= 2)) fail("temperature outside [0, 2]");
  if (e.max_retries < 0 || e.transport_retries < 0) fail("negative retry count");
  if (e.max_concurrency < 1) fail("max_concurrency must be at least 1");
  if (!(e.timeout_seconds > 0)) fail("timeout must be positive");
  if (e.backoff_ms < 0) fail("negative backoff");
  switch (e.backend) {
    case BackendKind::Http:
      if (e.base_url.rfind("http://", 0) != 0 && e.base_url.rfind("https://", 0) != 0) {
        fail("base_url must start with http:// or https://");
      }
      if (e.model.empty()) fail("model name required");
      break;
    case BackendKind::Mock:
      if (e.mock_style == MockStyle::Fixed && e.mock_choice.empty()) {
        fail("fixed mock needs mock_choice");
      }
      if (e.mock_garbage_first < 0) fail("negative mock_garbage_first");
      break;
    case BackendKind::Replay:
      if (e.replay_path.empty()) fail("replay backend needs replay_path");
      break;
  }
}

BackendReply HttpBackend::send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                               const RequestContext&) {
  // Split "scheme://host[:port]/prefix".
  auto scheme_end = e.base_url.find("://");
  auto path_start = e.base_url.find('/', scheme_end + 3);
  std::string origin = e.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : e.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  auto secs = static_cast<time_t>(e.timeout_seconds);
  auto usecs = static_cast<time_t>((e.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!e.auth_token_env.empty()) {
    if (const char* token = std::getenv(e.auth_token_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  nlohmann::json body{{"model", e.model}, {"temperature", e.temperature}};
  auto& msgs = body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.text}});

  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    throw GatewayError("endpoint '" + e.name + "': " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw GatewayError("endpoint '" + e.name + "': HTTP " + std::to_string(res->status));
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    BackendReply out;
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j["usage"].contains("total_tokens")) {
      out.tokens = j["usage"]["total_tokens"].get<long>();
    }
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw GatewayError("endpoint '" + e.name + "': malformed completion body (" + ex.what() + ")");
  }
}

BackendReply MockBackend::send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                               const RequestContext& ctx) {
  if (messages.empty()) throw GatewayError("mock endpoint '" + e.name + "': empty request");
  // The game and role follow from the system message.
  const std::string& system = messages.front().text;
  Game game = system.rfind("Rock-Paper-Scissors", 0) == 0 ? Game::Rps : Game::Pd;
  Role role = Role::None;
  if (game == Game::Pd) {
    role = system.find("you are a Blue participant") != std::string::npos ? Role::Blue : Role::Red;
  }

  // Failed attempts so far for the current decision: (reply, reminder)
  // pairs at the tail of the history.
  const std::string reminder = PromptTemplate::bundled(game).render(
      "reminder", {{"choice_format", choice_format(game, role)}});
  int failed = 0;
  for (std::size_t i = messages.size(); i >= 3; i -= 2) {
    if (messages[i - 2].role != "assistant" || messages[i - 1].text != reminder) break;
    ++failed;
  }
  if (e.mock_style == MockStyle::Garbage || failed < e.mock_garbage_first) {
    return {"I would rather not say.", 6};
  }

  Action choice = game == Game::Rps ? kRock : kCooperate;
  if (e.mock_style == MockStyle::Fixed) {
    auto a = parse_action(e.mock_choice, game, role);
    if (!a) throw GatewayError("mock endpoint '" + e.name + "': invalid mock_choice");
    choice = *a;
  } else {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, ctx.session);
    h = fnv1a(h, ctx.match);
    h = fnv1a(h, std::to_string(ctx.slot));
    for (const auto& m : messages) h = fnv1a(fnv1a(h, m.role), m.text);
    RandomStream stream(derive_seed(e.mock_seed, e.name, std::to_string(h), "mock"));
    int n = action_count(game);
    int i = std::min(n - 1, static_cast<int>(stream.next() * n));
    choice = Action::from_index(game, i);
  }
  std::string text = "Reason: mock policy.\nChoice: " + display_name(choice, role);
  return {text, static_cast<long>(text.size() / 4)};
}

BackendReply ScriptedBackend::send(const ModelEndpoint& e, const std::vector<ChatMessage>&,
                                   const RequestContext&) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) {
    throw GatewayError("scripted endpoint '" + e.name + "' exhausted");
  }
  return {replies_[next_++], 0};
}

std::size_t ScriptedBackend::served() const {
  std::lock_guard lock(mu_);
  return next_;
}

ReplayBackend::ReplayBackend(std::vector<std::vector<ChatMessage>> transcripts) {
  for (auto& t : transcripts) transcripts_.push_back({std::nullopt, std::move(t)});
}

BackendReply ReplayBackend::send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                                 const RequestContext& ctx) {
  auto same = [&](const Recorded& r) {
    return r.context && r.context->session == ctx.session && r.context->match == ctx.match &&
           r.context->slot == ctx.slot;
  };
  // Own seat first: self-play seats share every prefix up to the first reply.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& r : transcripts_) {
      if ((pass == 0) != same(r)) continue;
      const auto& t = r.messages;
      if (t.size() <= messages.size()) continue;
      if (!std::equal(messages.begin(), messages.end(), t.begin())) continue;
      const ChatMessage& next = t[messages.size()];
      if (next.role == "assistant") return {next.text, 0};
    }
  }
  throw GatewayError("replay endpoint '" + e.name + "': no recorded reply for this history");
}

std::shared_ptr<ChatBackend> make_backend(const ModelEndpoint& e) {
  validate_endpoint(e);
  switch (e.backend) {
    case BackendKind::Http: return std::make_shared<HttpBackend>();
    case BackendKind::Mock: return std::make_shared<MockBackend>();
    case BackendKind::Replay: return ReplayBackend::from_log(e.replay_path);
  }
  throw ConfigError("unknown backend");
}

Gateway::Gateway(ModelEndpoint endpoint, std::shared_ptr<ChatBackend> backend)
    : endpoint_(std::move(endpoint)),
      backend_(std::move(backend)),
      slots_(std::make_unique<std::counting_semaphore<>>(endpoint_.max_concurrency)) {
  validate_endpoint(endpoint_);
}

BackendReply Gateway::send_with_backoff(const std::vector<ChatMessage>& messages,
                                        const RequestContext& ctx, double& latency_ms) {
  for (int attempt = 0;; ++attempt) {
    slots_->acquire();
    auto t0 = std::chrono::steady_clock::now();
    try {
      BackendReply r = backend_->send(endpoint_, messages, ctx);
      slots_->release();
      latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0).count();
      return r;
    } catch (const GatewayError&) {
      slots_->release();
      if (attempt >= endpoint_.transport_retries) throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(endpoint_.backoff_ms << attempt));
  }
}

Completion Gateway::complete(ChatTranscript& transcript, const std::string& decision_prompt,
                             Game game, Role role, const RequestContext& ctx) {
  transcript.add("user", decision_prompt);
  const auto& tmpl = PromptTemplate::bundled(game);
  for (int attempt = 0;; ++attempt) {
    double latency = 0;
    BackendReply r = send_with_backoff(transcript.messages, ctx, latency);
    transcript.add("assistant", r.text);
    transcript.tokens_used += r.tokens;
    transcript.latencies_ms.push_back(latency);
    try {
      Action a = parse_choice(r.text, game, role);
      transcript.parsed_choices.push_back(a);
      return {r.text, a, attempt};
    } catch (const ParseFailure&) {
      if (attempt >= endpoint_.max_retries) {
        throw ProtocolViolation("endpoint '" + endpoint_.name + "': no parsable choice after " +
                                std::to_string(attempt + 1) + " replies");
      }
    }
    transcript.add("user", tmpl.render("reminder", {{"choice_format", choice_format(game, role)}}));
  }
}

}  // namespace boundedplay
