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

#ifndef BOUNDEDPLAY_STATS_HPP_
#define BOUNDEDPLAY_STATS_HPP_

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace boundedplay {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
// Throws DomainError for a <= 0 or x < 0.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Upper tail of the chi-square law with `df` degrees of freedom.
double chi_square_sf(double statistic, int df);

struct IndependenceTest {
  double statistic = 0;
  int degrees_of_freedom = 0;
  double p_value = 1;
  bool significant = false;
  // False when df = 0 after dropping empty rows/columns.
  bool defined = true;
  std::vector<std::string> warnings;
};

inline constexpr double kSignificanceLevel = 0.05;

/// Pearson chi-square test of independence on an r x c count table. All-zero
/// rows and columns are dropped before computing degrees of freedom; cells
/// with expected count below 5 add a warning but the test still runs.
IndependenceTest chi_square_independence(const Eigen::MatrixXd& counts,
                                         double alpha = kSignificanceLevel);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_STATS_HPP_
