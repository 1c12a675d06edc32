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

#ifndef BOUNDEDPLAY_TOOLS_CLI_HPP_
#define BOUNDEDPLAY_TOOLS_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boundedplay/persistence.hpp"
#include "boundedplay/protocol.hpp"

namespace boundedplay::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidConfig = 2;

// Parses argv, runs the verb and returns the exit status. The last line on
// `out` is a one-line JSON summary (on `err` when a report streams to `out`).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "titfortat*12" expands to twelve entries.
std::vector<std::string> expand_agents(const std::vector<std::string>& names);

// The "mock" endpoint every run can use without configuration.
ModelEndpoint builtin_mock_endpoint();

// Plan for the resolved configuration a run verb stores in its manifest.
SessionPlan plan_from_config(const Json& config, const std::set<std::string>& endpoints);

// Writes manifest.json, then log.jsonl and the verb's reports, into `dir`.
// HTTP endpoints answer from `replay_log` when given. Returns the summary.
Json execute_run(const Json& config, const std::vector<ModelEndpoint>& endpoints,
                 const std::filesystem::path& dir, int jobs,
                 const std::optional<std::filesystem::path>& replay_log = std::nullopt);

}  // namespace boundedplay::cli

#endif  // BOUNDEDPLAY_TOOLS_CLI_HPP_
