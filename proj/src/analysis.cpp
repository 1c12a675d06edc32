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

#include "boundedplay/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "boundedplay/continuation.hpp"
#include "boundedplay/rng.hpp"

namespace boundedplay {
namespace {

using SeatKey = std::pair<std::string, int>;

// Rounds of each (match, seat) played by `subject`, ordered by round index.
std::map<SeatKey, std::vector<const RoundRecord*>> sequences(
    std::span<const RoundRecord> rounds, const Subject& subject) {
  std::map<SeatKey, std::vector<const RoundRecord*>> out;
  for (const auto& r : rounds) {
    for (int s = 0; s < 2; ++s) {
      if (subject.has_seat(r, s)) out[{r.match_id, s}].push_back(&r);
    }
  }
  for (auto& [key, seq] : out) {
    std::stable_sort(seq.begin(), seq.end(), [](auto* a, auto* b) {
      return a->round_index < b->round_index;
    });
  }
  return out;
}

std::string_view dominant_name(const Eigen::Vector3d& row) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < 3; ++i) {
    if (row(i) > row(best)) best = i;
  }
  return to_string(static_cast<Transition>(best));
}

}  // namespace

Subject Subject::run(std::string agent, std::string match, int slot) {
  Subject s(std::move(agent));
  s.match_id = std::move(match);
  s.slot = slot;
  return s;
}

bool Subject::has_seat(const RoundRecord& r, int seat) const {
  if (r.agent_ids[seat] != agent_id) return false;
  if (match_id && r.match_id != *match_id) return false;
  if (slot && *slot != seat) return false;
  return true;
}

std::string Subject::key() const {
  if (!match_id) return agent_id;
  return agent_id + "@" + *match_id + "#" + std::to_string(slot.value_or(0));
}

std::vector<Subject> subjects(std::span<const RoundRecord> rounds, bool runs) {
  std::vector<Subject> out;
  std::set<std::string> seen;
  for (const auto& r : rounds) {
    for (int s = 0; s < 2; ++s) {
      Subject sub = runs ? Subject::run(r.agent_ids[s], r.match_id, s)
                         : Subject(r.agent_ids[s]);
      if (seen.insert(sub.key()).second) out.push_back(std::move(sub));
    }
  }
  return out;
}

ChoiceProportions choice_proportions(std::span<const RoundRecord> rounds,
                                     const Subject& subject) {
  ChoiceProportions out;
  bool any = false;
  for (const auto& r : rounds) {
    for (int s = 0; s < 2; ++s) {
      if (!subject.has_seat(r, s)) continue;
      if (!any) {
        out.game = r.game;
        out.proportions = Eigen::VectorXd::Zero(action_count(r.game));
        any = true;
      }
      if (r.game != out.game) throw DomainError("subject appears in both games");
      out.proportions(r.actions[s].index()) += 1;
      ++out.rounds;
    }
  }
  if (!any) throw DomainError("no rounds for '" + subject.key() + "'");
  out.proportions /= out.rounds;
  return out;
}

ContingencyTable transition_contingency(std::span<const RoundRecord> rounds,
                                        const Subject& subject) {
  ContingencyTable t;
  for (const auto& [key, seq] : sequences(rounds, subject)) {
    const int seat = key.second;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const RoundRecord& prev = *seq[i - 1];
      const RoundRecord& cur = *seq[i];
      if (prev.game != Game::Rps) {
        throw DomainError("transition statistics apply to RPS rounds only");
      }
      Outcome o = prev.outcomes[seat].value_or(
          outcome_of(prev.actions[seat], prev.actions[1 - seat]));
      ++t.at(o, classify_transition(prev.actions[seat], cur.actions[seat]));
    }
  }
  if (t.total() == 0) t.warnings.push_back("no transitions (matches shorter than 2 rounds)");
  return t;
}

IndependenceTest chi_square_independence(const ContingencyTable& t, double alpha) {
  auto result = chi_square_independence(Eigen::MatrixXd(t.counts.cast<double>()), alpha);
  result.warnings.insert(result.warnings.begin(), t.warnings.begin(), t.warnings.end());
  return result;
}

Eigen::Matrix<double, 9, 1> TransitionProfile::flattened() const {
  Eigen::Matrix<double, 9, 1> v;
  for (int r = 0; r < 3; ++r) v.segment<3>(3 * r) = proportions.row(r).transpose();
  return v;
}

TransitionProfile transition_profile(const ContingencyTable& t) {
  TransitionProfile p;
  for (int r = 0; r < 3; ++r) {
    p.sample_sizes(r) = t.counts.row(r).sum();
    if (p.sample_sizes(r) > 0) {
      p.proportions.row(r) = t.counts.row(r).cast<double>() / p.sample_sizes(r);
    }
  }
  return p;
}

std::optional<std::string> rule_label(const TransitionProfile& p) {
  if (p.sample_sizes(0) == 0 || p.sample_sizes(2) == 0) return std::nullopt;
  return "win-" + std::string(dominant_name(p.row(Outcome::Win))) + "/lose-" +
         std::string(dominant_name(p.row(Outcome::Lose)));
}

KMeansResult kmeans(const std::vector<Eigen::VectorXd>& points, int k, std::uint64_t seed,
                    int restarts, int max_iterations) {
  const int n = static_cast<int>(points.size());
  if (k <= 0) throw DomainError("k must be positive");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  if (n == 0) return {{}, {}, 0.0};
  const int clusters = std::min(k, n);

  for (int restart = 0; restart < restarts; ++restart) {
    RandomStream stream(derive_seed(seed, "kmeans", std::to_string(restart), ""));
    std::vector<Eigen::VectorXd> centers;
    int first = static_cast<int>(stream.next() * n);
    centers.push_back(points[std::min(first, n - 1)]);
    while (static_cast<int>(centers.size()) < clusters) {
      int far = 0;
      double far_d = -1;
      for (int i = 0; i < n; ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) d = std::min(d, (points[i] - c).squaredNorm());
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers.push_back(points[far]);
    }

    std::vector<int> assign(n, -1);
    for (int it = 0; it < max_iterations; ++it) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double d = (points[i] - centers[0]).squaredNorm();
        for (int c = 1; c < clusters; ++c) {
          double dc = (points[i] - centers[c]).squaredNorm();
          if (dc < d) {
            d = dc;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      for (int c = 0; c < clusters; ++c) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(points[0].size());
        int count = 0;
        for (int i = 0; i < n; ++i) {
          if (assign[i] == c) {
            sum += points[i];
            ++count;
          }
        }
        if (count > 0) centers[c] = sum / count;
      }
    }
    double inertia = 0;
    for (int i = 0; i < n; ++i) inertia += (points[i] - centers[assign[i]]).squaredNorm();
    if (inertia < best.inertia - 1e-12) {
      best = {assign, centers, inertia};
    }
  }

  // Renumber by first appearance so ids do not depend on the seeding order.
  std::vector<int> relabel(clusters, -1);
  int next = 0;
  for (int& a : best.assignment) {
    if (relabel[a] < 0) relabel[a] = next++;
    a = relabel[a];
  }
  std::vector<Eigen::VectorXd> centers(next);
  for (int c = 0; c < clusters; ++c) {
    if (relabel[c] >= 0) centers[relabel[c]] = best.centers[c];
  }
  best.centers = std::move(centers);
  return best;
}

std::vector<StrategyClassification> classify_strategies(
    const std::vector<std::pair<std::string, TransitionProfile>>& profiles,
    std::uint64_t seed) {
  std::vector<StrategyClassification> out;
  std::vector<Eigen::VectorXd> points;
  std::vector<std::size_t> owners;
  for (const auto& [name, profile] : profiles) {
    auto label = rule_label(profile);
    out.push_back({name, label.value_or("unclassified"), -1});
    if (label) {
      points.emplace_back(profile.flattened());
      owners.push_back(out.size() - 1);
    }
  }
  auto km = kmeans(points, 3, seed);
  for (std::size_t i = 0; i < owners.size(); ++i) out[owners[i]].cluster = km.assignment[i];
  return out;
}

Eigen::Vector2d ternary_coords(const Eigen::Vector3d& p) {
  if ((p.array() < -kNormalizationTol).any() || std::abs(p.sum() - 1.0) > 1e-9) {
    throw DomainError("ternary input is not a distribution");
  }
  return p(1) * Eigen::Vector2d(1.0, 0.0) +
         p(2) * Eigen::Vector2d(0.5, std::sqrt(3.0) / 2.0);
}

DifferentialReport differentials(const AnalysisLog& log, const std::string& agent,
                                 const std::string& bot) {
  struct Tally {
    int agent_wins = 0, bot_wins = 0;
    double agent_points = 0, bot_points = 0;
  };
  std::map<std::string, Tally> per_match;
  std::vector<std::string> order;
  for (const auto& r : log.rounds) {
    int seat = -1;
    if (r.agent_ids[0] == agent && r.agent_ids[1] == bot) seat = 0;
    else if (r.agent_ids[1] == agent && r.agent_ids[0] == bot) seat = 1;
    if (seat < 0) continue;
    if (!per_match.count(r.match_id)) order.push_back(r.match_id);
    Tally& t = per_match[r.match_id];
    Outcome o = r.outcomes[seat].value_or(outcome_of(r.actions[seat], r.actions[1 - seat]));
    if (o == Outcome::Win) ++t.agent_wins;
    if (o == Outcome::Lose) ++t.bot_wins;
    t.agent_points += r.payoffs[seat];
    t.bot_points += r.payoffs[1 - seat];
  }
  DifferentialReport rep{agent, bot, "log", 0, 0, 0};
  if (per_match.empty()) {
    for (const auto& ref : log.references) {
      if (ref.metric == "differential" && ref.agent == agent && ref.opponent == bot) {
        return {agent, bot, ref.source, 0, ref.value, ref.value2};
      }
    }
    throw DomainError("no completed matches between '" + agent + "' and '" + bot + "'");
  }
  for (const auto& id : order) {
    const Tally& t = per_match[id];
    rep.win_differential += t.agent_wins - t.bot_wins;
    rep.payoff_differential += t.agent_points - t.bot_points;
  }
  rep.matches = static_cast<int>(order.size());
  rep.win_differential /= rep.matches;
  rep.payoff_differential /= rep.matches;
  return rep;
}

CooperationReport cooperation_rates(const AnalysisLog& log, CooperationGrouping grouping) {
  CooperationReport rep;
  rep.grouping = grouping;
  std::vector<std::string> order;
  std::map<std::string, std::pair<int, int>> tally;
  for (const auto& r : log.rounds) {
    if (r.game != Game::Pd) continue;
    for (int s = 0; s < 2; ++s) {
      std::string group = grouping == CooperationGrouping::Treatment ? r.treatment
                          : grouping == CooperationGrouping::Round
                              ? std::to_string(r.round_index)
                              : r.agent_ids[s];
      if (!tally.count(group)) order.push_back(group);
      auto& [coop, total] = tally[group];
      coop += r.actions[s] == kCooperate ? 1 : 0;
      ++total;
    }
  }
  if (grouping == CooperationGrouping::Treatment) {
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return treatment_less(ContinuationRule::parse(a), ContinuationRule::parse(b));
    });
  } else if (grouping == CooperationGrouping::Round) {
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return std::stoi(a) < std::stoi(b);
    });
  }
  for (const auto& g : order) {
    auto [coop, total] = tally[g];
    rep.rows.push_back({g, "log", coop, total, 100.0 * coop / total});
  }

  std::vector<CooperationRow> refs;
  for (const auto& ref : log.references) {
    if (ref.metric != "cooperation_pct") continue;
    if (grouping == CooperationGrouping::Treatment && !ref.treatment.empty()) {
      refs.push_back({ref.treatment, ref.source, 0, 0, ref.value});
    } else if (grouping == CooperationGrouping::Agent && !ref.agent.empty()) {
      refs.push_back({ref.agent, ref.source, 0, 0, ref.value});
    }
  }
  if (grouping == CooperationGrouping::Treatment) {
    std::stable_sort(refs.begin(), refs.end(), [](const auto& a, const auto& b) {
      return treatment_less(ContinuationRule::parse(a.group), ContinuationRule::parse(b.group));
    });
  }
  rep.rows.insert(rep.rows.end(), refs.begin(), refs.end());
  if (rep.rows.empty()) rep.warnings.push_back("no PD choices in log; all groups empty");
  return rep;
}

StationaryPayoffs markov_stationary_payoffs(const TransitionPolicyTable& a,
                                            const TransitionPolicyTable& b,
                                            const PayoffMatrix& m) {
  if (!a.violations().empty() || !b.violations().empty()) {
    throw DomainError("malformed transition table");
  }
  if (m.game() != Game::Rps || m.rows() != 3 || m.cols() != 3) {
    throw DomainError("stationary payoffs need a 3x3 RPS matrix");
  }
  StationaryPayoffs out;
  auto next_law = [](const TransitionPolicyTable& t, int own, Outcome o) {
    Eigen::Vector3d law = Eigen::Vector3d::Zero();
    for (Transition tr : {Transition::Stay, Transition::Upgrade, Transition::Downgrade}) {
      law(apply_transition(Action::from_index(Game::Rps, own), tr).index()) += t(o, tr);
    }
    return law;
  };
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      Action ax = Action::from_index(Game::Rps, x), ay = Action::from_index(Game::Rps, y);
      Eigen::Vector3d la = next_law(a, x, outcome_of(ax, ay));
      Eigen::Vector3d lb = next_law(b, y, outcome_of(ay, ax));
      Eigen::Matrix3d joint = la * lb.transpose();
      for (int nx = 0; nx < 3; ++nx) {
        for (int ny = 0; ny < 3; ++ny) out.transition(3 * x + y, 3 * nx + ny) = joint(nx, ny);
      }
    }
  }

  auto iterate = [&](const Eigen::Matrix<double, 9, 9>& t, int max_iter, bool& converged) {
    Eigen::Matrix<double, 1, 9> pi = Eigen::Matrix<double, 1, 9>::Constant(1.0 / 9.0);
    converged = false;
    int it = 0;
    for (; it < max_iter; ++it) {
      Eigen::Matrix<double, 1, 9> next = pi * t;
      next /= next.sum();
      double diff = (next - pi).cwiseAbs().sum();
      pi = next;
      if (diff < kStationaryTol) {
        converged = true;
        ++it;
        break;
      }
    }
    out.iterations = it;
    return pi;
  };

  bool converged = false;
  Eigen::Matrix<double, 1, 9> pi = iterate(out.transition, 100000, converged);
  if (!converged) {
    Eigen::Matrix<double, 9, 9> damped =
        (1.0 - kDamping) * out.transition +
        Eigen::Matrix<double, 9, 9>::Constant(kDamping / 9.0);
    out.damped = true;
    pi = iterate(damped, 10000000, converged);
    out.transition = damped;
  }
  out.stationary = pi.transpose();
  out.residual = (pi * out.transition - pi).cwiseAbs().maxCoeff();
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      out.payoff_a += out.stationary(3 * x + y) * m.row_payoffs()(x, y);
      out.payoff_b += out.stationary(3 * x + y) * m.col_payoffs()(x, y);
    }
  }
  return out;
}

}  // namespace boundedplay
