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

#include "boundedplay/stats.hpp"

#include <cmath>
#include <limits>

#include "boundedplay/errors.hpp"

namespace boundedplay {
namespace {

constexpr int kMaxIterations = 100000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// P(a, x) by the power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Q(a, x) by the modified Lentz continued fraction; x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_args(double a, double x) {
  if (!(a > 0)) throw DomainError("incomplete gamma requires a > 0");
  if (!(x >= 0)) throw DomainError("incomplete gamma requires x >= 0");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi_square_sf(double statistic, int df) {
  if (df <= 0) throw DomainError("chi-square requires df > 0");
  if (statistic <= 0) return 1.0;
  return regularized_gamma_q(df / 2.0, statistic / 2.0);
}

IndependenceTest chi_square_independence(const Eigen::MatrixXd& counts, double alpha) {
  if ((counts.array() < 0).any()) throw DomainError("negative count in contingency table");
  const double total = counts.sum();
  if (!(total > 0)) throw DomainError("contingency table is empty");

  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    if (counts.row(r).sum() > 0) rows.push_back(r);
  }
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    if (counts.col(c).sum() > 0) cols.push_back(c);
  }
  IndependenceTest t;
  t.degrees_of_freedom = static_cast<int>((rows.size() - 1) * (cols.size() - 1));
  if (static_cast<Eigen::Index>(rows.size()) < counts.rows() ||
      static_cast<Eigen::Index>(cols.size()) < counts.cols()) {
    t.warnings.push_back("dropped empty rows or columns");
  }
  bool low = false;
  // Scaled by N: (O N - R C)^2 / (R C) stays integral longer for count tables.
  double scaled = 0;
  for (auto r : rows) {
    const double rt = counts.row(r).sum();
    for (auto c : cols) {
      const double rc = rt * counts.col(c).sum();
      const double diff = counts(r, c) * total - rc;
      scaled += diff * diff / rc;
      if (rc / total < 5) low = true;
    }
  }
  t.statistic = scaled / total;
  if (low) t.warnings.push_back("expected count below 5");
  if (t.degrees_of_freedom == 0) {
    t.defined = false;
    t.statistic = 0;
    t.p_value = 1;
    t.warnings.push_back("zero degrees of freedom; test undefined");
    return t;
  }
  t.p_value = chi_square_sf(t.statistic, t.degrees_of_freedom);
  t.significant = t.p_value < alpha;
  return t;
}

}  // namespace boundedplay
