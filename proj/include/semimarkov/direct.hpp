#ifndef SEMIMARKOV_DIRECT_HPP
#define SEMIMARKOV_DIRECT_HPP

#include <utility>
#include <vector>

#include "semimarkov/model.hpp"

namespace smp {

/// Gaussian elimination solving A X = B. Floating-point scalars pivot on the
/// largest magnitude and treat pivots below kSingularTolerance as zero;
/// exact scalars pivot on the first nonzero entry.
template <class S>
DenseMatrix<S> solve_linear(DenseMatrix<S> a, DenseMatrix<S> b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n)
    fail(ErrorCode::MalformedDocument, "linear system shape mismatch");
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = -1;
    if constexpr (ScalarTraits<S>::is_exact) {
      for (Eigen::Index r = col; r < n; ++r)
        if (a(r, col) != S(0)) {
          pivot = r;
          break;
        }
    } else {
      double best = kSingularTolerance;
      for (Eigen::Index r = col; r < n; ++r) {
        const double mag = std::fabs(ScalarTraits<S>::to_double(a(r, col)));
        if (mag > best) {
          best = mag;
          pivot = r;
        }
      }
    }
    if (pivot < 0)
      fail(ErrorCode::SingularSystem,
           "singular linear system; the hitting condition (target reachable "
           "from every state) is violated");
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      b.row(pivot).swap(b.row(col));
    }
    const S diag = a(col, col);
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (a(r, col) == S(0)) continue;
      const S factor = a(r, col) / diag;
      a.row(r) -= factor * a.row(col);
      a(r, col) = S(0);
      b.row(r) -= factor * b.row(col);
    }
  }
  DenseMatrix<S> x(n, b.cols());
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      S acc = b(r, c);
      for (Eigen::Index j = r + 1; j < n; ++j) acc -= a(r, j) * x(j, c);
      x(r, c) = acc / a(r, r);
    }
  }
  return x;
}

/// The order-r linear system (I - P_0) E = f over the non-target states.
template <class S>
struct LinearSystem {
  DenseMatrix<S> lhs;
  DenseVector<S> rhs;
  int order = 0;
  std::vector<StateId> states;  // original ids of rows/columns
};

namespace detail {

template <class S>
std::vector<StateId> non_target_states(const SmpModel<S>& model,
                                       StateId target) {
  std::vector<StateId> out;
  out.reserve(model.num_states() - 1);
  for (int i = 0; i < model.num_states(); ++i)
    if (i != target) out.push_back(i);
  return out;
}

// I - P_0 restricted to the non-target states (target column dropped).
template <class S>
DenseMatrix<S> hitting_system_matrix(const SmpModel<S>& model,
                                     StateId target) {
  const auto states = non_target_states(model, target);
  const int n = static_cast<int>(states.size());
  DenseMatrix<S> a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      a(r, c) = (states[r] == states[c] ? S(1) : S(0)) -
                model.probability(states[r], states[c]);
  return a;
}

}  // namespace detail

/// Free terms f^(r) for every start state, from the lower-order hitting
/// moments (the order-0 row of the table is all ones).
template <class S>
DenseVector<S> build_free_terms(const SmpModel<S>& model, StateId target,
                                int r, const MomentTable<S>& lower) {
  model.require_state(target);
  model.require_order(r);
  if (r < 1) fail(ErrorCode::OrderOutOfRange, "free terms start at order 1");
  if (lower.max_order() < r - 1)
    fail(ErrorCode::MissingLowerMoments,
         "need hitting moments up to order " + std::to_string(r - 1));
  for (int j = 0; j < model.num_states(); ++j)
    if (j != target && !lower.contains(j))
      fail(ErrorCode::MissingLowerMoments,
           "lower moments missing state " + std::to_string(j));

  const int n = model.num_states();
  DenseVector<S> f(n);
  for (int i = 0; i < n; ++i) {
    S acc = model.moment_matrix(r)(i, target);
    for (int j = 0; j < n; ++j) {
      if (j == target) continue;
      for (int l = 0; l < r; ++l)
        acc += binom<S>(r, l) * model.moment_matrix(r - l)(i, j) *
               lower.at(l, j);
    }
    f(i) = acc;
  }
  return f;
}

template <class S>
LinearSystem<S> build_moment_system(const SmpModel<S>& model, StateId target,
                                    int r, const MomentTable<S>& lower) {
  const DenseVector<S> f = build_free_terms(model, target, r, lower);
  auto states = detail::non_target_states(model, target);
  DenseVector<S> rhs(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) rhs(k) = f(states[k]);
  return LinearSystem<S>{detail::hitting_system_matrix(model, target),
                         std::move(rhs), r, std::move(states)};
}

/// Occupation counts before hitting: the inverse of (I - P_0) over the
/// non-target states. Entry (i, j) is the expected number of visits to j
/// strictly before the target is hit, starting from i.
template <class S>
class GreenMatrix {
 public:
  GreenMatrix(std::vector<StateId> states, DenseMatrix<S> values)
      : states_(std::move(states)), values_(std::move(values)) {}

  const std::vector<StateId>& states() const { return states_; }
  const DenseMatrix<S>& values() const { return values_; }

  const S& at(StateId i, StateId j) const {
    return values_(index_of(i), index_of(j));
  }

  S row_sum(StateId i) const { return values_.row(index_of(i)).sum(); }

 private:
  Eigen::Index index_of(StateId s) const {
    const auto it = std::find(states_.begin(), states_.end(), s);
    if (it == states_.end())
      fail(ErrorCode::MalformedDocument,
           "state " + std::to_string(s) + " not covered by the Green matrix");
    return it - states_.begin();
  }

  std::vector<StateId> states_;
  DenseMatrix<S> values_;
};

template <class S>
GreenMatrix<S> green_matrix(const SmpModel<S>& model, StateId target) {
  model.require_state(target);
  auto states = detail::non_target_states(model, target);
  DenseMatrix<S> a = detail::hitting_system_matrix(model, target);
  DenseMatrix<S> identity =
      DenseMatrix<S>::Zero(states.size(), states.size());
  for (Eigen::Index i = 0; i < identity.rows(); ++i) identity(i, i) = S(1);
  return GreenMatrix<S>(std::move(states), solve_linear(std::move(a),
                                                        std::move(identity)));
}

namespace detail {

// Shared recurrent loop: `solve_rhs` maps the restricted rhs vector to the
// restricted solution vector for one order.
template <class S, class Solve>
MomentTable<S> recurrent_moments(const SmpModel<S>& model, StateId target,
                                 int d, Solve&& solve_rhs) {
  const int n = model.num_states();
  std::vector<StateId> all_states(n);
  for (int i = 0; i < n; ++i) all_states[i] = i;
  DenseMatrix<S> values(d + 1, n);
  for (int i = 0; i < n; ++i) values(0, i) = S(1);
  MomentTable<S> table(target, all_states, values.topRows(1));

  const auto states = non_target_states(model, target);
  for (int r = 1; r <= d; ++r) {
    const DenseVector<S> f = build_free_terms(model, target, r, table);
    DenseVector<S> rhs(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) rhs(k) = f(states[k]);
    const DenseVector<S> sol = solve_rhs(rhs);
    for (std::size_t k = 0; k < states.size(); ++k)
      values(r, states[k]) = sol(k);
    // Target row: explicit formula instead of enlarging the system.
    S at_target = f(target);
    for (std::size_t k = 0; k < states.size(); ++k)
      at_target += model.probability(target, states[k]) * sol(k);
    values(r, target) = at_target;
    table = MomentTable<S>(target, all_states, values.topRows(r + 1));
  }
  return table;
}

}  // namespace detail

/// Hitting moments by solving the recurrent linear systems directly,
/// order by order.
template <class S>
MomentTable<S> solve_moments(const SmpModel<S>& model, StateId target, int d) {
  model.require_state(target);
  model.require_order(d);
  if (d < 1) fail(ErrorCode::OrderOutOfRange, "need at least order 1");
  if (!check_reachability(model, target))
    fail(ErrorCode::UnreachableTarget,
         "target " + std::to_string(target) +
             " is not reachable from every state");
  DenseMatrix<S> a = detail::hitting_system_matrix(model, target);
  return detail::recurrent_moments(model, target, d,
                                   [&a](const DenseVector<S>& rhs) {
                                     return DenseVector<S>(
                                         solve_linear(a, DenseMatrix<S>(rhs)));
                                   });
}

/// Same moments evaluated through the precomputed Green matrix.
template <class S>
MomentTable<S> moments_via_green(const SmpModel<S>& model, StateId target,
                                 int d) {
  model.require_state(target);
  model.require_order(d);
  if (d < 1) fail(ErrorCode::OrderOutOfRange, "need at least order 1");
  const GreenMatrix<S> g = green_matrix(model, target);
  return detail::recurrent_moments(
      model, target, d, [&g](const DenseVector<S>& rhs) {
        return DenseVector<S>(g.values() * rhs);
      });
}

/// Expected number of embedded jumps until the target is hit, for every
/// start state (unit reward per transition).
template <class S>
DenseVector<S> expected_step_counts(const SmpModel<S>& model, StateId target) {
  model.require_state(target);
  const auto states = detail::non_target_states(model, target);
  DenseMatrix<S> a = detail::hitting_system_matrix(model, target);
  DenseMatrix<S> ones(states.size(), 1);
  for (Eigen::Index i = 0; i < ones.rows(); ++i) ones(i, 0) = S(1);
  const DenseMatrix<S> sol = solve_linear(std::move(a), std::move(ones));
  DenseVector<S> out(model.num_states());
  for (std::size_t k = 0; k < states.size(); ++k)
    out(states[k]) = sol(k, 0);
  S at_target = S(1);
  for (std::size_t k = 0; k < states.size(); ++k)
    at_target += model.probability(target, states[k]) * sol(k, 0);
  out(target) = at_target;
  return out;
}

}  // namespace smp

#endif  // SEMIMARKOV_DIRECT_HPP
