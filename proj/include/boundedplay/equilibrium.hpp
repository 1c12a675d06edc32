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

#ifndef BOUNDEDPLAY_EQUILIBRIUM_HPP_
#define BOUNDEDPLAY_EQUILIBRIUM_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "boundedplay/errors.hpp"
#include "boundedplay/game.hpp"

namespace boundedplay {

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kEquilibriumTol = 1e-9;

/// Probability distribution over one player's pure actions.
template <typename Scalar = double>
class BasicMixedStrategy {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicMixedStrategy() = default;
  explicit BasicMixedStrategy(Vector weights, Scalar tol = Scalar(kNormalizationTol))
      : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw DomainError("empty mixed strategy");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_(i) >= Scalar(0) && weights_(i) <= Scalar(1))) {
        throw DomainError("mixed strategy weight outside [0, 1]");
      }
    }
    using std::abs;
    if (abs(weights_.sum() - Scalar(1)) > tol) {
      throw DomainError("mixed strategy weights do not sum to 1");
    }
  }
  BasicMixedStrategy(std::initializer_list<Scalar> w)
      : BasicMixedStrategy(to_vector(w)) {}

  static BasicMixedStrategy pure(Eigen::Index n, Eigen::Index i) {
    Vector w = Vector::Zero(n);
    w(i) = Scalar(1);
    return BasicMixedStrategy(std::move(w));
  }
  static BasicMixedStrategy uniform(Eigen::Index n) {
    return BasicMixedStrategy(Vector::Constant(n, Scalar(1) / Scalar(n)));
  }
  // Scales an arbitrary non-negative vector to sum 1.
  static BasicMixedStrategy normalized(const Vector& v) {
    Scalar s = v.sum();
    if (!(s > Scalar(0))) throw DomainError("cannot normalize a zero vector");
    return BasicMixedStrategy(v / s);
  }

  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  Scalar operator[](Eigen::Index i) const { return weights_(i); }

  std::vector<Eigen::Index> support(Scalar tol = Scalar(kNormalizationTol)) const {
    std::vector<Eigen::Index> s;
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (weights_(i) > tol) s.push_back(i);
    }
    return s;
  }

 private:
  static Vector to_vector(std::initializer_list<Scalar> w) {
    Vector v(static_cast<Eigen::Index>(w.size()));
    Eigen::Index i = 0;
    for (Scalar x : w) v(i++) = x;
    return v;
  }

  Vector weights_;
};

using MixedStrategy = BasicMixedStrategy<double>;

template <typename Scalar = double>
struct BasicEquilibriumProfile {
  BasicMixedStrategy<Scalar> row;
  BasicMixedStrategy<Scalar> col;
  Scalar row_value{};
  Scalar col_value{};
};

using EquilibriumProfile = BasicEquilibriumProfile<double>;

enum class Side { Row, Col };

/// Bilinear payoffs s1' A s2 and s1' B s2.
template <typename Scalar>
std::pair<Scalar, Scalar> expected_payoff(const BasicPayoffMatrix<Scalar>& m,
                                          const BasicMixedStrategy<Scalar>& s1,
                                          const BasicMixedStrategy<Scalar>& s2) {
  if (s1.size() != m.rows() || s2.size() != m.cols()) {
    throw DomainError("strategy length does not match matrix '" + m.name() + "'");
  }
  return {s1.weights().dot(m.row_payoffs() * s2.weights()),
          s1.weights().dot(m.col_payoffs() * s2.weights())};
}

// Payoff of each pure action of `side` against the opponent's mixture.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pure_payoffs(
    const BasicPayoffMatrix<Scalar>& m, const BasicMixedStrategy<Scalar>& opponent,
    Side side) {
  if (side == Side::Row) {
    if (opponent.size() != m.cols()) throw DomainError("dimension mismatch");
    return m.row_payoffs() * opponent.weights();
  }
  if (opponent.size() != m.rows()) throw DomainError("dimension mismatch");
  return m.col_payoffs().transpose() * opponent.weights();
}

template <typename Scalar>
std::vector<Eigen::Index> best_responses(const BasicPayoffMatrix<Scalar>& m,
                                         const BasicMixedStrategy<Scalar>& opponent,
                                         Side side,
                                         Scalar tol = Scalar(kEquilibriumTol)) {
  auto values = pure_payoffs(m, opponent, side);
  Scalar best = values.maxCoeff();
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) >= best - tol) out.push_back(i);
  }
  return out;
}

template <typename Scalar>
bool verify_equilibrium(const BasicPayoffMatrix<Scalar>& m,
                        const BasicEquilibriumProfile<Scalar>& p,
                        Scalar tol = Scalar(kEquilibriumTol)) {
  if (p.row.size() != m.rows() || p.col.size() != m.cols()) {
    throw DomainError("profile does not match matrix dimensions");
  }
  auto check = [tol](const auto& values, const auto& own) {
    auto support = own.support();
    if (support.empty()) return false;
    Scalar level = values(support.front());
    using std::abs;
    for (auto i : support) {
      if (abs(values(i) - level) > tol) return false;
    }
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (values(i) > level + tol) return false;
    }
    return true;
  };
  return check(pure_payoffs(m, p.col, Side::Row), p.row) &&
         check(pure_payoffs(m, p.row, Side::Col), p.col);
}

namespace detail {

// Gaussian elimination with partial pivoting. Empty when a pivot falls
// below `pivot_tol` in magnitude.
template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> solve_partial_pivot(
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b, Scalar pivot_tol) {
  using std::abs;
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index r = k + 1; r < n; ++r) {
      if (abs(a(r, k)) > abs(a(piv, k))) piv = r;
    }
    if (abs(a(piv, k)) < pivot_tol) return std::nullopt;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      std::swap(b(k), b(piv));
    }
    for (Eigen::Index r = k + 1; r < n; ++r) {
      Scalar f = a(r, k) / a(k, k);
      a.row(r).tail(n - k) -= f * a.row(k).tail(n - k);
      b(r) -= f * b(k);
    }
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    Scalar s = b(k);
    for (Eigen::Index j = k + 1; j < n; ++j) s -= a(k, j) * x(j);
    x(k) = s / a(k, k);
  }
  return x;
}

// Mixture over `mix_support` (indices into the mixing player's actions)
// that makes the other player indifferent across `indiff_support`.
// `payoff` is indexed (indifferent player's action, mixing player's action).
template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> indifference_mixture(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& payoff,
    const std::vector<Eigen::Index>& indiff_support,
    const std::vector<Eigen::Index>& mix_support, Eigen::Index mix_actions,
    bool& singular) {
  const auto k = static_cast<Eigen::Index>(mix_support.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sys =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(k + 1, k + 1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(k + 1);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      sys(r, c) = payoff(indiff_support[r], mix_support[c]);
    }
    sys(r, k) = Scalar(-1);
    sys(k, r) = Scalar(1);
  }
  rhs(k) = Scalar(1);
  auto sol = solve_partial_pivot<Scalar>(sys, rhs, Scalar(kNormalizationTol));
  singular = !sol;
  if (!sol) return std::nullopt;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> full =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(mix_actions);
  for (Eigen::Index c = 0; c < k; ++c) {
    Scalar w = (*sol)(c);
    if (w < -Scalar(kEquilibriumTol)) return std::nullopt;
    full(mix_support[c]) = w < Scalar(0) ? Scalar(0) : w;
  }
  return full;
}

inline void for_each_subset(Eigen::Index n, Eigen::Index k,
                            const auto& visit) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Eigen::Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

struct EnumerationStats {
  int support_pairs = 0;
  int singular_pairs = 0;
  int infeasible_pairs = 0;
};

/// All equilibria reachable by equal-size support pairs. Singular systems
/// are skipped and counted in `stats`.
template <typename Scalar>
std::vector<BasicEquilibriumProfile<Scalar>> support_enumeration_nash(
    const BasicPayoffMatrix<Scalar>& m, EnumerationStats* stats = nullptr) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  EnumerationStats local;
  std::vector<BasicEquilibriumProfile<Scalar>> found;
  const Eigen::Index n = m.rows(), c = m.cols();
  const typename BasicPayoffMatrix<Scalar>::Grid col_t = m.col_payoffs().transpose();
  for (Eigen::Index k = 1; k <= std::min(n, c); ++k) {
    detail::for_each_subset(n, k, [&](const std::vector<Eigen::Index>& rs) {
      detail::for_each_subset(c, k, [&](const std::vector<Eigen::Index>& cs) {
        ++local.support_pairs;
        bool singular_q = false, singular_p = false;
        std::optional<Vector> q = detail::indifference_mixture<Scalar>(
            m.row_payoffs(), rs, cs, c, singular_q);
        std::optional<Vector> p = detail::indifference_mixture<Scalar>(
            col_t, cs, rs, n, singular_p);
        if (singular_q || singular_p) {
          ++local.singular_pairs;
          return;
        }
        if (!q || !p) {
          ++local.infeasible_pairs;
          return;
        }
        BasicEquilibriumProfile<Scalar> prof{
            BasicMixedStrategy<Scalar>::normalized(*p),
            BasicMixedStrategy<Scalar>::normalized(*q), Scalar(0), Scalar(0)};
        if (!verify_equilibrium(m, prof)) {
          ++local.infeasible_pairs;
          return;
        }
        auto [rv, cv] = expected_payoff(m, prof.row, prof.col);
        prof.row_value = rv;
        prof.col_value = cv;
        using std::abs;
        for (const auto& e : found) {
          if ((e.row.weights() - prof.row.weights()).cwiseAbs().maxCoeff() <
                  Scalar(kEquilibriumTol) &&
              (e.col.weights() - prof.col.weights()).cwiseAbs().maxCoeff() <
                  Scalar(kEquilibriumTol)) {
            return;
          }
        }
        found.push_back(std::move(prof));
      });
    });
  }
  if (stats) *stats = local;
  return found;
}

// Plain-text and CSV renderings used by the CLI.
std::string format_equilibria_text(const PayoffMatrix& m,
                                   const std::vector<EquilibriumProfile>& eqs);
std::string format_equilibria_csv(const PayoffMatrix& m,
                                  const std::vector<EquilibriumProfile>& eqs);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_EQUILIBRIUM_HPP_
