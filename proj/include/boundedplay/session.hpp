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

#ifndef BOUNDEDPLAY_SESSION_HPP_
#define BOUNDEDPLAY_SESSION_HPP_

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundedplay/persistence.hpp"
#include "boundedplay/protocol.hpp"

namespace boundedplay {

// Failures of the live-session API; each kind maps to one HTTP status.
class SessionError : public std::runtime_error {
 public:
  enum class Kind { BadRequest, Unauthorized, NotFound, Conflict, Invalid, Gone };
  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  int http_status() const;

 private:
  Kind kind_;
};

enum class LiveState { AwaitingChoices, RevealingFeedback, Finished, Abandoned };
std::string_view to_string(LiveState s);

// Plan from a JSON manifest fragment. Accepted shapes:
//   {"game":"rps","agents":["human","wslu"],"rounds":50,"repetitions":1}
//   {"game":"pd","agents":["human","titfortat"],"treatments":["dice:0.75"],
//    "matches_per_block":4}
//   {"game":"pd","agents":[... N names ...],"mode":"dice","ordering":"usd"}
// plus optional "session", "seed" and (RPS) "matrix". Agent names resolve
// through resolve_agent().
SessionPlan plan_from_fragment(const Json& fragment, const std::set<std::string>& endpoints,
                               const std::string& default_session);

struct SessionOptions {
  std::filesystem::path log_dir;  // empty keeps logs in memory only
  std::chrono::milliseconds idle_timeout = std::chrono::minutes(30);
  std::function<std::chrono::steady_clock::time_point()> clock;  // steady_clock::now if unset
};

struct SubmitResult {
  bool accepted = false;
  bool round_complete = false;
  std::string match;
  int round = 0;
};

class LiveSession;

/// Live sessions keyed by id. Each session has a single writer; state reads
/// return the snapshot taken after the last event.
class SessionRegistry {
 public:
  SessionRegistry(GatewayPool* gateways, SessionOptions options);
  ~SessionRegistry();
  SessionRegistry(const SessionRegistry&) = delete;
  SessionRegistry& operator=(const SessionRegistry&) = delete;

  // Returns {"session", "slots", "instructions"}; automated matches that
  // precede the first human decision have already been played.
  Json create(const Json& fragment);
  Json create(SessionPlan plan);

  SubmitResult submit(const std::string& session, const std::string& slot,
                      const std::string& action, std::optional<int> round = std::nullopt);
  // What `slot` may see right now.
  Json state(const std::string& session, const std::string& slot) const;
  Json list() const;

  // Abandons sessions idle for longer than the timeout. Returns the count.
  int expire_idle();

  // Envelopes written so far for a session, in log order.
  std::vector<Envelope> log(const std::string& session) const;

 private:
  Json open(SessionPlan plan, const Json& config);
  std::shared_ptr<LiveSession> find(const std::string& session) const;
  std::chrono::steady_clock::time_point now() const;

  GatewayPool* gateways_;
  SessionOptions options_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  int next_id_ = 1;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // When set, every request must carry it in X-Session-Token.
  std::string token;
  std::chrono::milliseconds reap_interval = std::chrono::seconds(5);
};

/// HTTP front end for a SessionRegistry:
///   POST /sessions                 manifest fragment -> created session
///   GET  /sessions                 summaries
///   GET  /sessions/{id}/state?slot=S
///   POST /sessions/{id}/choices    {"slot", "action", "round"?}
class SessionServer {
 public:
  SessionServer(SessionRegistry& registry, ServerOptions options);
  ~SessionServer();

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_SESSION_HPP_
