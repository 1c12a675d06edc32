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

#include "boundedplay/equilibrium.hpp"

#include <sstream>

#include "boundedplay/format.hpp"

namespace boundedplay {
namespace {

std::string action_name(const PayoffMatrix& m, Eigen::Index i, Side side) {
  if (action_count(m.game()) == (side == Side::Row ? m.rows() : m.cols())) {
    return std::string(to_string(Action::from_index(m.game(), static_cast<int>(i)).label()));
  }
  return "a" + std::to_string(i);
}

std::string support_text(const PayoffMatrix& m, const MixedStrategy& s, Side side) {
  std::vector<std::string> names;
  for (auto i : s.support()) names.push_back(action_name(m, i, side));
  return "{" + join(names, ",") + "}";
}

}  // namespace

std::string format_equilibria_text(const PayoffMatrix& m,
                                   const std::vector<EquilibriumProfile>& eqs) {
  std::ostringstream out;
  out << "matrix " << m.name() << " (" << to_string(m.game()) << ", " << m.rows()
      << "x" << m.cols() << "): " << eqs.size() << " equilibri"
      << (eqs.size() == 1 ? "um" : "a") << "\n";
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    out << "equilibrium " << e + 1 << "\n";
    for (Side side : {Side::Row, Side::Col}) {
      const auto& s = side == Side::Row ? eqs[e].row : eqs[e].col;
      out << "  " << (side == Side::Row ? "row" : "col") << " support "
          << support_text(m, s, side) << " probabilities";
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        out << " " << fixed(s[i], kProbabilityPlaces);
      }
      out << " value "
          << fixed(side == Side::Row ? eqs[e].row_value : eqs[e].col_value,
                   kProbabilityPlaces)
          << "\n";
    }
  }
  return out.str();
}

std::string format_equilibria_csv(const PayoffMatrix& m,
                                  const std::vector<EquilibriumProfile>& eqs) {
  std::ostringstream out;
  out << "equilibrium,player,action,probability,in_support,value\n";
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    for (Side side : {Side::Row, Side::Col}) {
      const auto& s = side == Side::Row ? eqs[e].row : eqs[e].col;
      double value = side == Side::Row ? eqs[e].row_value : eqs[e].col_value;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        out << e + 1 << "," << (side == Side::Row ? "row" : "col") << ","
            << action_name(m, i, side) << "," << fixed(s[i], kProbabilityPlaces)
            << "," << (s[i] > kNormalizationTol ? 1 : 0) << ","
            << fixed(value, kProbabilityPlaces) << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace boundedplay
