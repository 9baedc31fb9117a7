#ifndef SEMIMARKOV_EXTENSIONS_HPP
#define SEMIMARKOV_EXTENSIONS_HPP

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "semimarkov/direct.hpp"
#include "semimarkov/model.hpp"
#include "semimarkov/reduction.hpp"

namespace smp {

/// Hitting moments split by which target state is entered first:
/// entry (r, i, j) = E_i[ W^r ; first hit lands in j ].
template <class S>
class IndicatorMomentTable {
 public:
  IndicatorMomentTable(TargetSet targets, std::vector<DenseMatrix<S>> values)
      : targets_(std::move(targets)), values_(std::move(values)) {}

  const TargetSet& targets() const { return targets_; }
  int max_order() const { return static_cast<int>(values_.size()) - 1; }
  int num_states() const { return static_cast<int>(values_[0].rows()); }

  const S& at(int r, StateId i, StateId hit) const {
    return values_[static_cast<std::size_t>(r)](i, column_of(hit));
  }

  /// P_i{ first hit lands in j }.
  const S& hit_probability(StateId i, StateId hit) const {
    return at(0, i, hit);
  }

  /// Plain r-th moment of the hitting reward, summed over hit states.
  S marginal(int r, StateId i) const {
    return values_[static_cast<std::size_t>(r)].row(i).sum();
  }

 private:
  Eigen::Index column_of(StateId hit) const {
    const auto& states = targets_.states();
    const auto it = std::lower_bound(states.begin(), states.end(), hit);
    if (it == states.end() || *it != hit)
      fail(ErrorCode::MalformedDocument,
           "state " + std::to_string(hit) + " is not in the target set");
    return it - states.begin();
  }

  TargetSet targets_;
  std::vector<DenseMatrix<S>> values_;  // values_[r] is n x |targets|
};

template <class S>
void require_target_set_reachable(const SmpModel<S>& model,
                                  const TargetSet& targets) {
  if (!check_reachability(model, targets))
    fail(ErrorCode::UnreachableTargetSet,
         "the target set is not reachable from every state");
}

/// Indicator-split hitting moments via phase-space reduction: for each start
/// state, every state outside targets ∪ {start} is excluded, then the one
/// remaining scalar recursion is solved for r = 0..d.
template <class S>
IndicatorMomentTable<S> indicator_moments(const SmpModel<S>& model,
                                          const TargetSet& targets, int d) {
  model.require_order(d);
  require_target_set_reachable(model, targets);
  const int n = model.num_states();
  const int nt = static_cast<int>(targets.size());
  std::vector<DenseMatrix<S>> values(d + 1, DenseMatrix<S>::Zero(n, nt));

  for (StateId i = 0; i < n; ++i) {
    std::vector<StateId> order;
    for (StateId s = 0; s < n; ++s)
      if (s != i && !targets.contains(s)) order.push_back(s);
    ReducedModel<S> reduced(model, targets);
    for (StateId k : order) reduced = exclude_state(reduced, k);

    if (targets.contains(i)) {
      // Active set equals the target set: the first reduced jump is the hit.
      for (int r = 0; r <= d; ++r)
        for (int c = 0; c < nt; ++c)
          values[r](i, c) = reduced.moment(r, i, targets.states()[c]);
      continue;
    }
    const S denom = S(1) - reduced.probability(i, i);
    const bool stuck = ScalarTraits<S>::is_exact
                           ? denom <= S(0)
                           : !(ScalarTraits<S>::to_double(denom) >
                               kSingularTolerance);
    if (stuck)
      fail(ErrorCode::SingularSystem,
           "state " + std::to_string(i) + " cannot leave itself");
    for (int c = 0; c < nt; ++c) {
      const StateId j = targets.states()[c];
      for (int r = 0; r <= d; ++r) {
        S acc = reduced.moment(r, i, j);
        for (int l = 0; l < r; ++l)
          acc += binom<S>(r, l) * reduced.moment(r - l, i, i) * values[l](i, c);
        values[r](i, c) = acc / denom;
      }
    }
  }
  return IndicatorMomentTable<S>(targets, std::move(values));
}

/// Same table through the recurrent linear systems over all non-target
/// states at once (independent route used for cross-checks).
template <class S>
IndicatorMomentTable<S> indicator_moments_direct(const SmpModel<S>& model,
                                                 const TargetSet& targets,
                                                 int d) {
  model.require_order(d);
  require_target_set_reachable(model, targets);
  const int n = model.num_states();
  const int nt = static_cast<int>(targets.size());
  std::vector<StateId> free_states;
  for (StateId s = 0; s < n; ++s)
    if (!targets.contains(s)) free_states.push_back(s);
  const int nf = static_cast<int>(free_states.size());

  DenseMatrix<S> a(nf, nf);
  for (int r = 0; r < nf; ++r)
    for (int c = 0; c < nf; ++c)
      a(r, c) = (free_states[r] == free_states[c] ? S(1) : S(0)) -
                model.probability(free_states[r], free_states[c]);

  std::vector<DenseMatrix<S>> values(d + 1, DenseMatrix<S>::Zero(n, nt));
  for (int r = 0; r <= d; ++r) {
    // Free terms: direct jump plus lower-order continuation through the
    // non-target states.
    DenseMatrix<S> f(n, nt);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < nt; ++c) {
        S acc = model.moment_matrix(r)(i, targets.states()[c]);
        for (StateId jp : free_states)
          for (int l = 0; l < r; ++l)
            acc += binom<S>(r, l) * model.moment_matrix(r - l)(i, jp) *
                   values[l](jp, c);
        f(i, c) = acc;
      }
    }
    if (nf > 0) {
      DenseMatrix<S> rhs(nf, nt);
      for (int k = 0; k < nf; ++k) rhs.row(k) = f.row(free_states[k]);
      const DenseMatrix<S> sol = solve_linear(a, std::move(rhs));
      for (int k = 0; k < nf; ++k)
        values[r].row(free_states[k]) = sol.row(k);
    }
    for (StateId t : targets.states()) {
      for (int c = 0; c < nt; ++c) {
        S acc = f(t, c);
        for (int k = 0; k < nf; ++k)
          acc += model.probability(t, free_states[k]) *
                 values[r](free_states[k], c);
        values[r](t, c) = acc;
      }
    }
  }
  return IndicatorMomentTable<S>(targets, std::move(values));
}

/// Collapses a target set into one absorbing super-target appended as the
/// last state; hitting that state reproduces the set-hitting reward exactly.
/// Returns the merged model and the super-target's id.
template <class S>
std::pair<SmpModel<S>, StateId> merge_target_set(const SmpModel<S>& model,
                                                 const TargetSet& targets) {
  const int n = model.num_states();
  const int d = model.max_order();
  const StateId super = n;
  MomentStack<S> out(d + 1, DenseMatrix<S>::Zero(n + 1, n + 1));
  for (int r = 0; r <= d; ++r) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (targets.contains(j))
          out[r](i, super) += model.moment_matrix(r)(i, j);
        else
          out[r](i, j) = model.moment_matrix(r)(i, j);
      }
    }
    out[r](super, super) = S(1);  // unit-time self loop, never queried
  }
  return {SmpModel<S>(std::move(out), model.reward_kind(), std::nullopt,
                      model.tolerance()),
          super};
}

/// Bivariate accumulated rewards: embedded chain plus mixed local moments
/// e_mixed[q][s](i,j) = E_i[ X1^q X2^s ; J_1 = j ] for q+s <= d.
/// e_mixed[0][0] is the transition matrix.
template <class S>
class BivariateModel {
 public:
  BivariateModel(std::vector<std::vector<DenseMatrix<S>>> mixed,
                 double tolerance = 1e-9)
      : mixed_(std::move(mixed)), tolerance_(tolerance) {
    if (mixed_.empty() || mixed_[0].empty())
      fail(ErrorCode::MalformedDocument, "mixed moment tensor is empty");
    d_ = static_cast<int>(mixed_.size()) - 1;
    if (d_ < 1)
      fail(ErrorCode::MalformedDocument, "need mixed moments up to order 1");
    const Eigen::Index n = mixed_[0][0].rows();
    for (int q = 0; q <= d_; ++q) {
      if (static_cast<int>(mixed_[q].size()) != d_ - q + 1)
        fail(ErrorCode::MalformedDocument,
             "mixed moment row " + std::to_string(q) +
                 " must cover orders up to " + std::to_string(d_ - q));
      for (const auto& mat : mixed_[q])
        if (mat.rows() != n || mat.cols() != n)
          fail(ErrorCode::MalformedDocument, "mixed moment shape mismatch");
    }
    // Row-sum validity of the embedded chain.
    SmpModel<S>(MomentStack<S>{mixed_[0][0], mixed_[0][0]}, RewardKind::Real,
                std::nullopt, tolerance_);
  }

  int num_states() const { return static_cast<int>(mixed_[0][0].rows()); }
  int max_order() const { return d_; }
  double tolerance() const { return tolerance_; }
  const DenseMatrix<S>& transition_matrix() const { return mixed_[0][0]; }

  /// E_i[X1^q X2^s; J_1 = j], q+s <= d.
  const DenseMatrix<S>& local(int q, int s) const {
    if (q < 0 || s < 0 || q + s > d_)
      fail(ErrorCode::OrderOutOfRange,
           "mixed local moment (" + std::to_string(q) + "," +
               std::to_string(s) + ") out of range");
    return mixed_[q][s];
  }

 private:
  std::vector<std::vector<DenseMatrix<S>>> mixed_;
  int d_;
  double tolerance_;
};

/// Scalar model of the blended reward a·X1 + (1-a)·X2.
template <class S>
SmpModel<S> scalarize(const BivariateModel<S>& bi, const S& weight) {
  if (weight < S(0) || weight > S(1))
    fail(ErrorCode::WeightOutOfRange, "mixing weight must lie in [0, 1]");
  const int d = bi.max_order();
  const int n = bi.num_states();
  const S co = S(1) - weight;
  MomentStack<S> slices(d + 1, DenseMatrix<S>::Zero(n, n));
  slices[0] = bi.transition_matrix();
  for (int r = 1; r <= d; ++r) {
    S a_pow(1);
    for (int q = 0; q <= r; ++q) {
      S co_pow(1);
      for (int p = 0; p < r - q; ++p) co_pow *= co;
      slices[r] += (binom<S>(r, q) * a_pow * co_pow) * bi.local(q, r - q);
      a_pow *= weight;
    }
  }
  return SmpModel<S>(std::move(slices), RewardKind::Real, std::nullopt,
                     bi.tolerance());
}

/// Joint hitting moments E_i[W1^q W2^(r-q)] keyed by (q, r), recovered from
/// blended-reward moments at r+1 mixing weights per total order r.
template <class S>
class MixedMomentTable {
 public:
  explicit MixedMomentTable(int d) : d_(d) {}

  void set(int q, int r, DenseVector<S> column) {
    values_[{q, r}] = std::move(column);
  }
  const S& at(int q, int r, StateId i) const {
    const auto it = values_.find({q, r});
    if (it == values_.end())
      fail(ErrorCode::OrderOutOfRange,
           "mixed moment (" + std::to_string(q) + "," + std::to_string(r) +
               ") not computed");
    return it->second(i);
  }
  int max_order() const { return d_; }
  const std::map<std::pair<int, int>, DenseVector<S>>& values() const {
    return values_;
  }

 private:
  int d_;
  std::map<std::pair<int, int>, DenseVector<S>> values_;
};

/// Default weight grid for total order r: p/r for p = 0..r.
template <class S>
std::vector<S> default_mixing_nodes(int r) {
  std::vector<S> nodes;
  nodes.reserve(r + 1);
  for (int p = 0; p <= r; ++p) nodes.push_back(S(p) / S(r));
  return nodes;
}

template <class S>
MixedMomentTable<S> mixed_moments(
    const BivariateModel<S>& bi, StateId target, int d,
    ReductionStrategy strategy = ReductionStrategy::PerStart,
    const std::optional<std::vector<std::vector<S>>>& node_override =
        std::nullopt) {
  if (d < 1 || d > bi.max_order())
    fail(ErrorCode::OrderOutOfRange,
         "total order must lie in [1, " + std::to_string(bi.max_order()) + "]");
  const int n = bi.num_states();
  MixedMomentTable<S> table(d);
  for (int r = 1; r <= d; ++r) {
    const std::vector<S> nodes = node_override
                                     ? node_override->at(r - 1)
                                     : default_mixing_nodes<S>(r);
    if (static_cast<int>(nodes.size()) != r + 1)
      fail(ErrorCode::MalformedDocument,
           "order " + std::to_string(r) + " needs " + std::to_string(r + 1) +
               " mixing weights");
    // Bernstein-basis collocation matrix over the weight grid.
    DenseMatrix<S> basis(r + 1, r + 1);
    DenseMatrix<S> rhs(r + 1, n);
    for (int p = 0; p <= r; ++p) {
      const S& a = nodes[p];
      const S co = S(1) - a;
      S a_pow(1);
      for (int q = 0; q <= r; ++q) {
        S co_pow(1);
        for (int t = 0; t < r - q; ++t) co_pow *= co;
        basis(p, q) = binom<S>(r, q) * a_pow * co_pow;
        a_pow *= a;
      }
      const SmpModel<S> blended = scalarize(bi, a);
      const MomentTable<S> moments =
          hitting_moments(blended, target, {}, r, strategy);
      for (int i = 0; i < n; ++i) rhs(p, i) = moments.at(r, i);
    }
    DenseMatrix<S> solved;
    try {
      solved = solve_linear(std::move(basis), std::move(rhs));
    } catch (const SmpError& err) {
      if (err.code() == ErrorCode::SingularSystem)
        fail(ErrorCode::SingularMixSystem,
             "weight-grid system for order " + std::to_string(r) +
                 " is numerically singular");
      throw;
    }
    for (int q = 0; q <= r; ++q) table.set(q, r, solved.row(q).transpose());
  }
  return table;
}

/// Pair-state embedding for hitting times that depend on the transition
/// (previous state, next state). State (i, j) is stored at i*n + j.
template <class S>
struct PlaceEmbedding {
  SmpModel<S> model;
  TargetSet targets;
  int base_states;
  std::optional<StateId> initial_prev;

  StateId pair_state(StateId prev, StateId next) const {
    return prev * base_states + next;
  }
  std::pair<StateId, StateId> pair_of(StateId s) const {
    return {s / base_states, s % base_states};
  }
  /// Default start: the sentinel previous state equals the start itself.
  StateId start_state(StateId start) const {
    return pair_state(initial_prev.value_or(start), start);
  }
};

template <class S>
PlaceEmbedding<S> embed_place_dependent(
    const SmpModel<S>& model,
    const std::vector<std::pair<StateId, StateId>>& domain,
    std::optional<StateId> initial_prev = std::nullopt) {
  if (domain.empty())
    fail(ErrorCode::UnhittableDomain, "the transition domain is empty");
  const int n = model.num_states();
  const int d = model.max_order();
  for (const auto& [a, b] : domain) {
    model.require_state(a);
    model.require_state(b);
  }
  if (initial_prev) model.require_state(*initial_prev);

  const int nn = n * n;
  MomentStack<S> out(d + 1, DenseMatrix<S>::Zero(nn, nn));
  for (int r = 0; r <= d; ++r)
    for (int prev = 0; prev < n; ++prev)
      for (int cur = 0; cur < n; ++cur)
        for (int next = 0; next < n; ++next)
          out[r](prev * n + cur, cur * n + next) =
              model.moment_matrix(r)(cur, next);

  std::vector<StateId> target_states;
  target_states.reserve(domain.size());
  for (const auto& [a, b] : domain) target_states.push_back(a * n + b);
  SmpModel<S> embedded(std::move(out), model.reward_kind(), std::nullopt,
                       model.tolerance());
  TargetSet targets(std::move(target_states), nn);
  if (!check_reachability(embedded, targets))
    fail(ErrorCode::UnhittableDomain,
         "no transition in the domain can be reached with positive "
         "probability from every state");
  return PlaceEmbedding<S>{std::move(embedded), std::move(targets), n,
                           initial_prev};
}

/// Counting-component embedding for step-dependent kernels and targets.
/// State (step, i) is stored at step*n + i; rows at the final step are
/// absorbing unit-time self-loops (all of step h is a target).
template <class S>
struct TimeEmbedding {
  SmpModel<S> model;
  TargetSet targets;
  int horizon;
  int base_states;

  StateId state_at(int step, StateId i) const {
    return step * base_states + i;
  }
};

template <class S>
TimeEmbedding<S> embed_time_dependent(
    const std::vector<SmpModel<S>>& step_models,
    const std::vector<std::vector<StateId>>& step_targets) {
  const int h = static_cast<int>(step_models.size());
  if (h < 1)
    fail(ErrorCode::HorizonMismatch, "need at least one step kernel");
  if (static_cast<int>(step_targets.size()) != h)
    fail(ErrorCode::HorizonMismatch,
         "got " + std::to_string(step_models.size()) + " step kernels but " +
             std::to_string(step_targets.size()) + " target sets");
  const int n = step_models[0].num_states();
  const int d = step_models[0].max_order();
  RewardKind kind = RewardKind::Nonnegative;
  for (const auto& step : step_models) {
    if (step.num_states() != n || step.max_order() != d)
      fail(ErrorCode::HorizonMismatch,
           "all step kernels must share state count and max order");
    if (step.reward_kind() == RewardKind::Real) kind = RewardKind::Real;
  }
  std::vector<StateId> last = step_targets.back();
  std::sort(last.begin(), last.end());
  last.erase(std::unique(last.begin(), last.end()), last.end());
  if (static_cast<int>(last.size()) != n)
    fail(ErrorCode::MissingFinalTarget,
         "the final step's target set must cover every state");

  const int nn = (h + 1) * n;
  MomentStack<S> out(d + 1, DenseMatrix<S>::Zero(nn, nn));
  for (int step = 0; step < h; ++step)
    for (int r = 0; r <= d; ++r)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out[r](step * n + i, (step + 1) * n + j) =
              step_models[step].moment_matrix(r)(i, j);
  for (int r = 0; r <= d; ++r)
    for (int i = 0; i < n; ++i)
      out[r](h * n + i, h * n + i) = S(1);

  std::vector<StateId> target_states;
  for (int step = 1; step <= h; ++step)
    for (StateId j : step_targets[step - 1]) {
      step_models[0].require_state(j);
      target_states.push_back(step * n + j);
    }
  SmpModel<S> embedded(std::move(out), kind, std::nullopt,
                       step_models[0].tolerance());
  return TimeEmbedding<S>{std::move(embedded),
                          TargetSet(std::move(target_states), nn), h, n};
}

}  // namespace smp

#endif  // SEMIMARKOV_EXTENSIONS_HPP
