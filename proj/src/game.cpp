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

#include "boundedplay/game.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace boundedplay {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

PayoffMatrix from_cells(std::string name, Game game,
                        std::initializer_list<std::pair<double, double>> cells,
                        int n, std::optional<double> constant_sum) {
  PayoffMatrix::Grid row(n, n), col(n, n);
  int k = 0;
  for (auto [r, c] : cells) {
    row(k / n, k % n) = r;
    col(k / n, k % n) = c;
    ++k;
  }
  return {std::move(name), game, row, col, constant_sum};
}

}  // namespace

Action Action::from_index(Game game, int index) {
  if (index < 0 || index >= action_count(game)) {
    throw DomainError("action index out of range");
  }
  if (game == Game::Pd) return index == 0 ? kCooperate : kDefect;
  static constexpr std::array<Label, 3> kRps{Label::Rock, Label::Paper,
                                            Label::Scissors};
  return Action(kRps[index]);
}

std::string_view to_string(Game g) { return g == Game::Rps ? "rps" : "pd"; }

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Rock: return "Rock";
    case Label::Paper: return "Paper";
    case Label::Scissors: return "Scissors";
    case Label::Cooperate: return "Cooperate";
    case Label::Defect: return "Defect";
  }
  return "?";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::None: return "none";
    case Role::Red: return "red";
    case Role::Blue: return "blue";
  }
  return "?";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Win: return "win";
    case Outcome::Tie: return "tie";
    case Outcome::Lose: return "lose";
  }
  return "?";
}

std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::Stay: return "stay";
    case Transition::Upgrade: return "upgrade";
    case Transition::Downgrade: return "downgrade";
  }
  return "?";
}

Game parse_game(std::string_view text) {
  auto s = lower(text);
  if (s == "rps") return Game::Rps;
  if (s == "pd") return Game::Pd;
  throw ConfigError("unknown game '" + std::string(text) + "'");
}

Role parse_role(std::string_view text) {
  auto s = lower(text);
  if (s == "red") return Role::Red;
  if (s == "blue") return Role::Blue;
  if (s == "none" || s.empty()) return Role::None;
  throw ConfigError("unknown role '" + std::string(text) + "'");
}

Outcome parse_outcome(std::string_view text) {
  auto s = lower(text);
  if (s == "win") return Outcome::Win;
  if (s == "tie") return Outcome::Tie;
  if (s == "lose") return Outcome::Lose;
  throw ConfigError("unknown outcome '" + std::string(text) + "'");
}

std::string display_name(Action a, Role role) {
  if (a.game() == Game::Rps) return std::string(to_string(a.label()));
  bool coop = a.label() == Label::Cooperate;
  switch (role) {
    case Role::Red: return coop ? "U" : "D";
    case Role::Blue: return coop ? "L" : "R";
    case Role::None: break;
  }
  return std::string(to_string(a.label()));
}

std::optional<Action> parse_action(std::string_view text, Game game, Role role) {
  auto s = lower(trim(text));
  if (game == Game::Rps) {
    if (s == "rock") return kRock;
    if (s == "paper") return kPaper;
    if (s == "scissors" || s == "scissor") return kScissors;
    return std::nullopt;
  }
  if (s == "cooperate") return kCooperate;
  if (s == "defect") return kDefect;
  if (role == Role::Red) {
    if (s == "u") return kCooperate;
    if (s == "d") return kDefect;
  } else if (role == Role::Blue) {
    if (s == "l") return kCooperate;
    if (s == "r") return kDefect;
  }
  return std::nullopt;
}

Outcome outcome_of(Action a, Action b) {
  if (a.game() != b.game()) throw DomainError("actions from different games");
  if (a.game() == Game::Pd || a == b) return Outcome::Tie;
  return (a.index() - b.index() + 3) % 3 == 1 ? Outcome::Win : Outcome::Lose;
}

Transition classify_transition(Action prev, Action next) {
  if (prev.game() != Game::Rps || next.game() != Game::Rps) {
    throw DomainError("transitions are defined between RPS actions only");
  }
  int step = (next.index() - prev.index() + 3) % 3;
  return step == 0 ? Transition::Stay
                   : (step == 1 ? Transition::Upgrade : Transition::Downgrade);
}

Action apply_transition(Action prev, Transition t) {
  if (prev.game() != Game::Rps) {
    throw DomainError("transitions are defined between RPS actions only");
  }
  int step = t == Transition::Stay ? 0 : (t == Transition::Upgrade ? 1 : 2);
  return Action::from_index(Game::Rps, (prev.index() + step) % 3);
}

PayoffMatrix rps_modified_matrix() {
  return from_cells("rps_modified", Game::Rps,
                    {{2, 2}, {1, 3}, {4, 0},
                     {3, 1}, {2, 2}, {1, 3},
                     {0, 4}, {3, 1}, {2, 2}},
                    3, 4.0);
}

PayoffMatrix rps_standard_matrix() {
  return from_cells("rps_standard", Game::Rps,
                    {{2, 2}, {1, 3}, {3, 1},
                     {3, 1}, {2, 2}, {1, 3},
                     {1, 3}, {3, 1}, {2, 2}},
                    3, 4.0);
}

PayoffMatrix pd_matrix() {
  return from_cells("pd_dalbo", Game::Pd,
                    {{65, 65}, {10, 100},
                     {100, 10}, {35, 35}},
                    2, std::nullopt);
}

std::vector<std::string> bundled_matrix_names() {
  return {"rps_modified", "rps_standard", "pd_dalbo"};
}

std::optional<PayoffMatrix> bundled_matrix(std::string_view name) {
  if (name == "rps_modified") return rps_modified_matrix();
  if (name == "rps_standard") return rps_standard_matrix();
  if (name == "pd_dalbo") return pd_matrix();
  return std::nullopt;
}

std::vector<MatrixViolation> validate_matrix(const PayoffMatrix& m) {
  std::vector<MatrixViolation> out;
  auto at = [](Eigen::Index r, Eigen::Index c) {
    return "cell (" + std::to_string(r) + "," + std::to_string(c) + ")";
  };
  const int n = action_count(m.game());
  if (m.rows() != n || m.cols() != n) {
    out.push_back({-1, -1, "shape " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()) + " does not match " +
                               std::string(to_string(m.game()))});
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      auto [p, q] = m.cell(r, c);
      if (!std::isfinite(p) || !std::isfinite(q)) {
        out.push_back({r, c, "non-finite payoff at " + at(r, c)});
        continue;
      }
      if (p < 0 || q < 0) out.push_back({r, c, "negative payoff at " + at(r, c)});
      if (m.constant_sum() && p + q != *m.constant_sum()) {
        out.push_back({r, c, "constant-sum violation at " + at(r, c)});
      }
    }
  }
  if (m.game() == Game::Rps && m.rows() == 3 && m.cols() == 3) {
    // Winner strictly above the tie payoff, loser strictly below.
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (r == c) continue;
        auto [p, q] = m.cell(r, c);
        double tie_row = m.row_payoffs()(r, r);
        double tie_col = m.col_payoffs()(c, c);
        bool row_wins = outcome_of(Action::from_index(Game::Rps, r),
                                   Action::from_index(Game::Rps, c)) ==
                        Outcome::Win;
        bool ok = row_wins ? (p > tie_row && q < tie_col)
                           : (p < tie_row && q > tie_col);
        if (!ok) out.push_back({r, c, "dominance inconsistency at " + at(r, c)});
      }
    }
  }
  if (auto ref = bundled_matrix(m.name()); ref && out.empty()) {
    if (ref->game() != m.game() || ref->rows() != m.rows() ||
        ref->cols() != m.cols()) {
      out.push_back({-1, -1, "bundled matrix '" + m.name() + "' has wrong shape"});
    } else {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          if (m.cell(r, c) != ref->cell(r, c)) {
            out.push_back({r, c, "differs from bundled reference at " + at(r, c)});
          }
        }
      }
      if (ref->constant_sum() != m.constant_sum()) {
        out.push_back({-1, -1, "bundled matrix '" + m.name() +
                                   "' constant_sum declaration differs"});
      }
    }
  }
  return out;
}

PayoffMatrix parse_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line, name;
  std::optional<Game> game;
  std::optional<double> constant_sum;
  int rows = -1, cols = -1;
  std::vector<std::vector<std::pair<double, double>>> cells;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError("matrix line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "name") {
      ls >> name;
    } else if (key == "game") {
      std::string g;
      ls >> g;
      game = parse_game(g);
    } else if (key == "size") {
      if (!(ls >> rows >> cols) || rows <= 0 || cols <= 0) fail("bad size");
    } else if (key == "constant_sum") {
      double v;
      if (!(ls >> v)) fail("bad constant_sum");
      constant_sum = v;
    } else {
      std::istringstream cs(line);
      std::string pair;
      std::vector<std::pair<double, double>> row;
      while (cs >> pair) {
        auto comma = pair.find(',');
        if (comma == std::string::npos) fail("expected 'row,col' payoff pair");
        try {
          std::size_t used = 0;
          double a = std::stod(pair.substr(0, comma), &used);
          if (used != comma) fail("bad payoff '" + pair + "'");
          std::string rest = pair.substr(comma + 1);
          double b = std::stod(rest, &used);
          if (used != rest.size()) fail("bad payoff '" + pair + "'");
          row.emplace_back(a, b);
        } catch (const std::logic_error&) {
          fail("bad payoff '" + pair + "'");
        }
      }
      cells.push_back(std::move(row));
    }
  }
  if (name.empty()) throw ConfigError("matrix without name");
  if (!game) throw ConfigError("matrix '" + name + "' without game");
  if (rows < 0) throw ConfigError("matrix '" + name + "' without size");
  if (static_cast<int>(cells.size()) != rows) {
    throw ConfigError("matrix '" + name + "' declares " + std::to_string(rows) +
                      " rows but has " + std::to_string(cells.size()));
  }
  PayoffMatrix::Grid r(rows, cols), c(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(cells[i].size()) != cols) {
      throw ConfigError("matrix '" + name + "' row " + std::to_string(i) +
                        " has wrong width");
    }
    for (int j = 0; j < cols; ++j) {
      r(i, j) = cells[i][j].first;
      c(i, j) = cells[i][j].second;
    }
  }
  return {name, *game, r, c, constant_sum};
}

std::string format_matrix(const PayoffMatrix& m) {
  std::ostringstream out;
  out << "name " << m.name() << "\n";
  out << "game " << to_string(m.game()) << "\n";
  out << "size " << m.rows() << " " << m.cols() << "\n";
  if (m.constant_sum()) out << "constant_sum " << *m.constant_sum() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << m.row_payoffs()(r, c) << "," << m.col_payoffs()(r, c);
    }
    out << "\n";
  }
  return out.str();
}

PayoffMatrix load_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read matrix file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str());
}

RoundRecord make_round_record(const PayoffMatrix& m, Action a1, Action a2) {
  auto res = resolve_round(m, a1, a2);
  RoundRecord rec;
  rec.game = m.game();
  rec.actions = {a1, a2};
  rec.payoffs = {res.payoff1, res.payoff2};
  if (m.game() == Game::Rps) rec.outcomes = {res.outcome1, complement(res.outcome1)};
  return rec;
}

}  // namespace boundedplay
