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

#ifndef BOUNDEDPLAY_ANALYSIS_HPP_
#define BOUNDEDPLAY_ANALYSIS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boundedplay/agents.hpp"
#include "boundedplay/game.hpp"
#include "boundedplay/stats.hpp"

namespace boundedplay {

/// Pre-aggregated value shipped with provenance (e.g. human reference data).
/// Never regenerated; reports pass it through next to computed rows.
struct ReferenceValue {
  std::string source;
  std::string metric;  // "cooperation_pct", "differential"
  std::string agent;
  std::string opponent;
  std::string treatment;
  double value = 0;
  double value2 = 0;  // payoff differential for metric "differential"

  friend bool operator==(const ReferenceValue&, const ReferenceValue&) = default;
};

/// Input to every report: completed rounds (aborted matches already
/// removed) plus reference aggregates.
struct AnalysisLog {
  std::vector<RoundRecord> rounds;
  std::vector<ReferenceValue> references;
};

/// Whose rounds to analyze: every sequence played under an agent id, or a
/// single run (one seat of one match).
struct Subject {
  std::string agent_id;
  std::optional<std::string> match_id;
  std::optional<int> slot;

  Subject(std::string id) : agent_id(std::move(id)) {}  // NOLINT: implicit
  Subject(const char* id) : agent_id(id) {}             // NOLINT: implicit
  static Subject run(std::string agent, std::string match, int slot);

  bool has_seat(const RoundRecord& r, int seat) const;
  std::string key() const;
};

// Agent ids in first-appearance order; `runs` lists each (match, seat) once.
std::vector<Subject> subjects(std::span<const RoundRecord> rounds, bool runs);

struct ChoiceProportions {
  Game game = Game::Rps;
  Eigen::VectorXd proportions;
  int rounds = 0;
};

ChoiceProportions choice_proportions(std::span<const RoundRecord> rounds,
                                     const Subject& subject);

/// Previous-round outcome (rows Win, Tie, Lose) by transition (columns Stay,
/// Upgrade, Downgrade). First rounds of each match contribute nothing.
struct ContingencyTable {
  Eigen::Matrix3i counts = Eigen::Matrix3i::Zero();
  std::vector<std::string> warnings;

  int total() const { return counts.sum(); }
  int& at(Outcome o, Transition t) {
    return counts(static_cast<int>(o), static_cast<int>(t));
  }
  int at(Outcome o, Transition t) const {
    return counts(static_cast<int>(o), static_cast<int>(t));
  }
};

ContingencyTable transition_contingency(std::span<const RoundRecord> rounds,
                                        const Subject& subject);

IndependenceTest chi_square_independence(const ContingencyTable& t,
                                         double alpha = kSignificanceLevel);

struct TransitionProfile {
  Eigen::Matrix3d proportions = Eigen::Matrix3d::Zero();  // rows sum to 1 when sampled
  Eigen::Vector3i sample_sizes = Eigen::Vector3i::Zero();

  Eigen::Vector3d row(Outcome o) const {
    return proportions.row(static_cast<int>(o)).transpose();
  }
  // Win, Tie, Lose rows flattened.
  Eigen::Matrix<double, 9, 1> flattened() const;
};

TransitionProfile transition_profile(const ContingencyTable& t);

// "win-stay/lose-upgrade" style label from the dominant post-win and
// post-loss transitions; empty when either row has no samples.
std::optional<std::string> rule_label(const TransitionProfile& p);

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<Eigen::VectorXd> centers;
  double inertia = 0;
};

/// Lloyd's k-means with farthest-point seeding; each restart draws its first
/// center from a stream derived from `seed`. Best inertia wins; cluster ids
/// are renumbered by first appearance.
KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k,
                    std::uint64_t seed, int restarts = 100, int max_iterations = 300);

struct StrategyClassification {
  std::string subject;
  std::string label;  // "unclassified" when samples are missing
  int cluster = -1;   // -1 when not clustered
};

inline constexpr std::uint64_t kClusterSeed = 20240601;

// Rule labels for every profile; k-means (k = 3) over the classified ones.
std::vector<StrategyClassification> classify_strategies(
    const std::vector<std::pair<std::string, TransitionProfile>>& profiles,
    std::uint64_t seed = kClusterSeed);

// Stay at (0, 0), Upgrade at (1, 0), Downgrade at (1/2, sqrt(3)/2).
Eigen::Vector2d ternary_coords(const Eigen::Vector3d& p);

struct DifferentialReport {
  std::string agent;
  std::string bot;
  std::string source;  // "log" or the reference provenance
  int matches = 0;
  double win_differential = 0;
  double payoff_differential = 0;
};

// Mean over matches between the two ids of (agent - bot) round wins and
// points. Reference rows are returned as-is when the log has none.
DifferentialReport differentials(const AnalysisLog& log, const std::string& agent,
                                 const std::string& bot);

enum class CooperationGrouping { Treatment, Round, Agent };

struct CooperationRow {
  std::string group;
  std::string source;
  int cooperate = 0;
  int choices = 0;  // 0 for reference rows
  double percentage = 0;
};

struct CooperationReport {
  CooperationGrouping grouping = CooperationGrouping::Treatment;
  std::vector<CooperationRow> rows;
  std::vector<std::string> warnings;
};

CooperationReport cooperation_rates(const AnalysisLog& log, CooperationGrouping grouping);

struct StationaryPayoffs {
  double payoff_a = 0;
  double payoff_b = 0;
  // Joint state index 3 * a + b over (own action of A, own action of B).
  Eigen::Matrix<double, 9, 1> stationary = Eigen::Matrix<double, 9, 1>::Zero();
  Eigen::Matrix<double, 9, 9> transition = Eigen::Matrix<double, 9, 9>::Zero();
  bool damped = false;
  int iterations = 0;
  double residual = 0;  // max |pi T - pi|
};

inline constexpr double kStationaryTol = 1e-12;
inline constexpr double kDamping = 1e-6;

/// Long-run per-round payoffs when two transition policies play each other,
/// from the stationary law of the joint-action Markov chain.
StationaryPayoffs markov_stationary_payoffs(const TransitionPolicyTable& a,
                                            const TransitionPolicyTable& b,
                                            const PayoffMatrix& m);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_ANALYSIS_HPP_
