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

#ifndef BOUNDEDPLAY_LLM_HPP_
#define BOUNDEDPLAY_LLM_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "boundedplay/game.hpp"

namespace boundedplay {

// Root of the bundled data tree (matrices, templates, fixtures).
std::filesystem::path data_dir();
void set_data_dir(std::filesystem::path dir);

using Bindings = std::map<std::string, std::string>;

/// Named prompt parts with {{slot}} placeholders, loaded from a .tmpl file.
class PromptTemplate {
 public:
  PromptTemplate() = default;

  static PromptTemplate parse(Game game, std::string_view text);
  static PromptTemplate load(Game game, const std::filesystem::path& path);
  // data_dir()/templates/{rps,pd}.tmpl, loaded once.
  static const PromptTemplate& bundled(Game game);

  Game game() const { return game_; }
  bool has_part(std::string_view part) const;
  std::vector<std::string> parts() const;
  const std::string& raw(std::string_view part) const;
  // Slot names in order of first appearance.
  std::vector<std::string> placeholders(std::string_view part) const;

  // Throws TemplateError for an unknown part or a slot without a binding.
  std::string render(std::string_view part, const Bindings& bindings) const;

 private:
  Game game_ = Game::Rps;
  std::map<std::string, std::string, std::less<>> parts_;
};

inline std::string render_prompt(const PromptTemplate& t, std::string_view part,
                                  const Bindings& bindings) {
  return t.render(part, bindings);
}

// Number of "{{" markers left in rendered text.
int unreplaced_markers(std::string_view text);

// Last "Choice:" line carrying a valid label for the game and role. Throws
// ParseFailure otherwise.
Action parse_choice(std::string_view reply, Game game, Role role = Role::None);

// "U/D", "L/R" or "[Rock/Paper/Scissors]"-style hint used in prompts.
std::string choice_format(Game game, Role role);

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::string text;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatTranscript {
  std::vector<ChatMessage> messages;
  std::vector<Action> parsed_choices;
  long tokens_used = 0;
  std::vector<double> latencies_ms;

  void add(std::string role, std::string text) {
    messages.push_back({std::move(role), std::move(text)});
  }
};

enum class BackendKind { Http, Mock, Replay };

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view text);

enum class MockStyle { Uniform, Fixed, Garbage };

struct ModelEndpoint {
  std::string name;
  BackendKind backend = BackendKind::Mock;
  std::string base_url;  // Http: e.g. "https://api.example.com/v1"
  std::string model;
  double temperature = 1.0;
  // Name of the environment variable holding the bearer token. The token
  // itself is never stored.
  std::string auth_token_env;
  int max_retries = 3;        // re-asks after an unparsable reply
  int transport_retries = 3;  // resends after a transport failure
  double timeout_seconds = 120;
  int backoff_ms = 500;
  int max_concurrency = 4;

  MockStyle mock_style = MockStyle::Uniform;
  std::uint64_t mock_seed = 0;
  std::string mock_choice;   // Fixed style
  int mock_garbage_first = 0;  // unparsable replies before each valid one

  std::string replay_path;  // Replay: transcript JSONL

  friend bool operator==(const ModelEndpoint&, const ModelEndpoint&) = default;
};

void validate_endpoint(const ModelEndpoint& e);

// Identifies the player a request belongs to. Mock and replay backends key
// on it; the HTTP backend ignores it.
struct RequestContext {
  std::string session;
  std::string match;
  int slot = 0;
};

struct BackendReply {
  std::string text;
  long tokens = 0;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Throws GatewayError on transport failure.
  virtual BackendReply send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                            const RequestContext& ctx) = 0;
};

// OpenAI-compatible POST {base_url}/chat/completions.
class HttpBackend : public ChatBackend {
 public:
  BackendReply send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                    const RequestContext& ctx) override;
};

// Offline stand-in. Each reply is a pure function of the endpoint seed,
// the request context and the message history.
class MockBackend : public ChatBackend {
 public:
  BackendReply send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                    const RequestContext& ctx) override;
};

// Fixed replies handed out in order, regardless of the request.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  BackendReply send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                    const RequestContext& ctx) override;
  std::size_t served() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

// Answers from recorded transcripts: the reply is the assistant message
// that followed the same history in a stored transcript.
class ReplayBackend : public ChatBackend {
 public:
  struct Recorded {
    std::optional<RequestContext> context;  // preferred match for requests from this seat
    std::vector<ChatMessage> messages;
  };

  explicit ReplayBackend(std::vector<std::vector<ChatMessage>> transcripts);
  explicit ReplayBackend(std::vector<Recorded> transcripts) : transcripts_(std::move(transcripts)) {}
  // Reads "transcript" envelopes from a round log.
  static std::shared_ptr<ReplayBackend> from_log(const std::filesystem::path& path);

  BackendReply send(const ModelEndpoint& e, const std::vector<ChatMessage>& messages,
                    const RequestContext& ctx) override;

 private:
  std::vector<Recorded> transcripts_;
};

std::shared_ptr<ChatBackend> make_backend(const ModelEndpoint& e);

struct Completion {
  std::string reply;
  Action action;
  int reasks = 0;
};

/// Endpoint plus backend with the retry and concurrency policy applied.
class Gateway {
 public:
  Gateway(ModelEndpoint endpoint, std::shared_ptr<ChatBackend> backend);
  explicit Gateway(ModelEndpoint endpoint) : Gateway(endpoint, make_backend(endpoint)) {}

  const ModelEndpoint& endpoint() const { return endpoint_; }

  // Appends the decision prompt and every reply to the transcript. Re-asks
  // with the template's reminder up to max_retries times; then throws
  // ProtocolViolation. Transport failures that outlast transport_retries
  // throw GatewayError.
  Completion complete(ChatTranscript& transcript, const std::string& decision_prompt,
                      Game game, Role role, const RequestContext& ctx);

 private:
  BackendReply send_with_backoff(const std::vector<ChatMessage>& messages,
                                 const RequestContext& ctx, double& latency_ms);

  ModelEndpoint endpoint_;
  std::shared_ptr<ChatBackend> backend_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_LLM_HPP_
