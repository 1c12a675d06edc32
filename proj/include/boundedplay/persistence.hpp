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

#ifndef BOUNDEDPLAY_PERSISTENCE_HPP_
#define BOUNDEDPLAY_PERSISTENCE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundedplay/analysis.hpp"
#include "boundedplay/game.hpp"
#include "boundedplay/llm.hpp"

namespace boundedplay {

using Json = nlohmann::ordered_json;

inline constexpr int kLogVersion = 1;
inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kToolVersion = "0.3.0";

enum class EnvelopeType { MatchStart, Round, Transcript, MatchEnd, Reference };

std::string_view to_string(EnvelopeType t);
EnvelopeType parse_envelope_type(std::string_view text);

/// One JSONL line. seq is contiguous from 1 within (session, match).
struct Envelope {
  int version = kLogVersion;
  EnvelopeType type = EnvelopeType::Round;
  std::string session;
  std::string match;  // empty only for Reference
  std::int64_t seq = 0;  // 0 asks the writer to assign the next number
  std::string timestamp;  // volatile; dropped by canonical_line
  Json data = Json::object();

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// Throws SchemaError naming the first problem.
void validate_envelope(const Envelope& e);

Json envelope_to_json(const Envelope& e);
Envelope envelope_from_json(const Json& j);
std::string serialize(const Envelope& e);
// Line with volatile fields (timestamps, latencies) removed.
std::string canonical_line(const std::string& line);

Json round_to_json(const RoundRecord& r);
RoundRecord round_from_json(const Json& data, const std::string& session,
                            const std::string& match);
Envelope round_envelope(const RoundRecord& r);

struct MatchHeader {
  std::string session;
  std::string match;
  Game game = Game::Rps;
  std::string treatment;
  std::array<std::string, 2> agents;
  std::array<Role, 2> roles{Role::None, Role::None};
  std::array<std::string, 2> subjects;  // stable participant ids
  std::string block;                    // treatment block label, may be empty
  friend bool operator==(const MatchHeader&, const MatchHeader&) = default;
};

struct MatchFooter {
  std::string termination;  // "horizon_reached", "dice_ended", "protocol_violation", ...
  int rounds = 0;
  std::array<double, 2> totals{0, 0};
  bool aborted = false;
  std::string reason;
  friend bool operator==(const MatchFooter&, const MatchFooter&) = default;
};

Envelope match_start_envelope(const MatchHeader& h);
MatchHeader match_header_from(const Envelope& e);
Envelope match_end_envelope(const std::string& session, const std::string& match,
                            const MatchFooter& f);
MatchFooter match_footer_from(const Envelope& e);

Envelope transcript_envelope(const std::string& session, const std::string& match, int slot,
                             const std::string& agent, const ChatTranscript& t);
ChatTranscript transcript_from(const Envelope& e);

Envelope reference_envelope(const std::string& session, const ReferenceValue& v);
ReferenceValue reference_from(const Envelope& e);

struct Ack {
  std::int64_t seq = 0;
};

/// Append-only JSONL sink. Safe for concurrent appends; each line is
/// flushed before append() returns.
class LogWriter {
 public:
  // Truncates unless append is set, in which case sequence counters resume
  // from the existing file.
  explicit LogWriter(const std::filesystem::path& path, bool append = false);

  Ack append(Envelope e);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  std::ofstream out_;
  std::map<std::pair<std::string, std::string>, std::int64_t> last_seq_;
};

struct LogFilter {
  std::optional<std::string> session;
  std::optional<std::string> match;
  std::optional<std::string> agent;
  std::optional<std::string> treatment;
};

// Errors name "<path>:<line>". Records are returned in file order.
std::vector<Envelope> load_log(const std::filesystem::path& path, const LogFilter& filter = {});
std::vector<Envelope> parse_log(std::string_view text, const std::string& origin,
                                const LogFilter& filter = {});

// Round records and reference rows; rounds of aborted matches are dropped
// unless include_aborted is set.
AnalysisLog to_analysis_log(const std::vector<Envelope>& envelopes, bool include_aborted = false);

std::string canonical_log_text(const std::filesystem::path& path);

struct RunManifest {
  int manifest_version = kManifestVersion;
  std::string tool_version{kToolVersion};
  std::string created_at;  // volatile
  std::string command;
  std::uint64_t master_seed = 0;
  Json config = Json::object();
  Json plan = Json::object();
  std::vector<ModelEndpoint> endpoints;
};

Json endpoint_to_json(const ModelEndpoint& e);
ModelEndpoint endpoint_from_json(const Json& j);

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp();

/// Header plus string cells; every exporter builds one of these.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& t);
// Writes the file and returns the number of data rows.
std::size_t export_csv(const CsvTable& t, const std::filesystem::path& path);

CsvTable cooperation_csv(const CooperationReport& r);
CsvTable differentials_csv(const std::vector<DifferentialReport>& reports);
CsvTable choice_proportions_csv(
    const std::vector<std::pair<std::string, ChoiceProportions>>& rows);
struct IndependenceRow {
  std::string subject;
  ContingencyTable table;
  std::optional<IndependenceTest> test;  // empty when the table has no transitions
};
CsvTable independence_csv(const std::vector<IndependenceRow>& rows);
CsvTable transition_profile_csv(
    const std::vector<std::pair<std::string, TransitionProfile>>& rows);
CsvTable ternary_csv(const std::vector<std::pair<std::string, TransitionProfile>>& rows);
CsvTable strategies_csv(const std::vector<StrategyClassification>& rows);
CsvTable stationary_csv(
    const std::vector<std::pair<std::array<std::string, 2>, StationaryPayoffs>>& rows);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_PERSISTENCE_HPP_
