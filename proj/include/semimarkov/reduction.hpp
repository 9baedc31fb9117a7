#ifndef SEMIMARKOV_REDUCTION_HPP
#define SEMIMARKOV_REDUCTION_HPP

#include <algorithm>
#include <utility>
#include <vector>

#include "semimarkov/model.hpp"

namespace smp {

/// A model mid-reduction. Keeps the full (m+1)-indexed storage: rows of
/// excluded states stay live as transition-period rows (first passage into
/// the current active set), so any start state remains queryable. Columns of
/// excluded states are zeroed.
template <class S>
class ReducedModel {
 public:
  ReducedModel(const SmpModel<S>& model, TargetSet targets)
      : stack_(model.stack()),
        targets_(std::move(targets)),
        kind_(model.reward_kind()),
        tolerance_(model.tolerance()) {
    for (StateId t : targets_.states()) model.require_state(t);
    active_.resize(model.num_states());
    for (int i = 0; i < model.num_states(); ++i) active_[i] = i;
  }

  int num_states() const { return static_cast<int>(stack_[0].rows()); }
  int max_order() const { return static_cast<int>(stack_.size()) - 1; }
  const std::vector<StateId>& active() const { return active_; }
  const std::vector<StateId>& excluded() const { return excluded_; }
  const TargetSet& targets() const { return targets_; }
  double tolerance() const { return tolerance_; }
  RewardKind reward_kind() const { return kind_; }

  bool is_active(StateId i) const {
    return std::binary_search(active_.begin(), active_.end(), i);
  }

  const S& probability(StateId i, StateId j) const { return stack_[0](i, j); }
  const S& moment(int r, StateId i, StateId j) const {
    return stack_[static_cast<std::size_t>(r)](i, j);
  }
  const MomentStack<S>& stack() const { return stack_; }

  /// Full-storage model view (excluded columns are zero; every row still
  /// sums to one).
  SmpModel<S> to_model() const {
    return SmpModel<S>(stack_, kind_, std::nullopt, tolerance_);
  }

  /// Submodel over the active states only, plus the original ids of its
  /// rows/columns in order.
  std::pair<SmpModel<S>, std::vector<StateId>> compact() const {
    const int na = static_cast<int>(active_.size());
    MomentStack<S> sub(stack_.size(), DenseMatrix<S>(na, na));
    for (std::size_t r = 0; r < stack_.size(); ++r)
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < na; ++b)
          sub[r](a, b) = stack_[r](active_[a], active_[b]);
    return {SmpModel<S>(std::move(sub), kind_, std::nullopt, tolerance_),
            active_};
  }

  template <class T>
  friend ReducedModel<T> exclude_state(const ReducedModel<T>& in, StateId k);

 private:
  MomentStack<S> stack_;
  std::vector<StateId> active_;    // ascending
  std::vector<StateId> excluded_;  // exclusion order
  TargetSet targets_;
  RewardKind kind_;
  double tolerance_;
};

template <class S>
ReducedModel<S> begin_reduction(const SmpModel<S>& model, StateId target) {
  return ReducedModel<S>(model, TargetSet({target}, model.num_states()));
}

/// One step of phase-space reduction: excursions through k are folded into
/// direct transitions. Every row (including transition-period rows of
/// previously excluded states) is updated; columns shrink to the new active
/// set.
template <class S>
ReducedModel<S> exclude_state(const ReducedModel<S>& in, StateId k) {
  if (k < 0 || k >= in.num_states())
    fail(ErrorCode::InactiveState, "state " + std::to_string(k) + " out of range");
  if (!in.is_active(k))
    fail(ErrorCode::InactiveState,
         "state " + std::to_string(k) + " is not in the active set");
  if (in.targets_.contains(k))
    fail(ErrorCode::TargetExclusion,
         "state " + std::to_string(k) + " is a hitting target");

  const int n = in.num_states();
  const int d = in.max_order();
  const MomentStack<S>& st = in.stack_;

  const S self = st[0](k, k);
  const S denom = S(1) - self;
  const bool absorbing = ScalarTraits<S>::is_exact
                             ? denom <= S(0)
                             : !(ScalarTraits<S>::to_double(denom) >
                                 kSingularTolerance);
  if (absorbing)
    fail(ErrorCode::AbsorbingState,
         "state " + std::to_string(k) +
             " never leaves itself; the hitting condition fails there");

  std::vector<StateId> next_active;
  next_active.reserve(in.active_.size() - 1);
  for (StateId s : in.active_)
    if (s != k) next_active.push_back(s);

  // First-passage row of k into the shrunken active set, order by order.
  // Order r uses the already-updated orders l < r of the same row.
  std::vector<DenseVector<S>> k_row(d + 1, DenseVector<S>::Zero(n));
  for (StateId j : next_active) k_row[0](j) = st[0](k, j) / denom;
  for (int r = 1; r <= d; ++r) {
    for (StateId j : next_active) {
      S acc = st[r](k, j);
      for (int l = 0; l < r; ++l)
        acc += binom<S>(r, l) * st[r - l](k, k) * k_row[l](j);
      k_row[r](j) = acc / denom;
    }
  }

  ReducedModel<S> out = in;
  out.active_ = std::move(next_active);
  out.excluded_.push_back(k);
  for (int r = 0; r <= d; ++r) {
    DenseMatrix<S>& slice = out.stack_[static_cast<std::size_t>(r)];
    slice.setZero();
    for (int i = 0; i < n; ++i) {
      if (i == k) {
        for (StateId j : out.active_) slice(i, j) = k_row[r](j);
        continue;
      }
      for (StateId j : out.active_) {
        S acc = st[r](i, j);
        for (int l = 0; l < r; ++l)
          acc += binom<S>(r, l) * st[r - l](i, k) * k_row[l](j);
        acc += st[0](i, k) * k_row[r](j);
        slice(i, j) = acc;
      }
    }
  }
  return out;
}

template <class S>
struct ReductionStep {
  StateId excluded;
  ReducedModel<S> snapshot;
};

template <class S>
struct ReductionTrace {
  ReducedModel<S> initial;
  std::vector<ReductionStep<S>> steps;

  const ReducedModel<S>& final_model() const {
    return steps.empty() ? initial : steps.back().snapshot;
  }
};

/// Applies exclude_state along `order`, recording a snapshot per step.
template <class S>
ReductionTrace<S> reduce_sequence(const SmpModel<S>& model,
                                  const std::vector<StateId>& order,
                                  StateId target) {
  std::vector<StateId> seen = order;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    fail(ErrorCode::DuplicateState, "exclusion order repeats a state");

  ReductionTrace<S> trace{begin_reduction(model, target), {}};
  const ReducedModel<S>* current = &trace.initial;
  trace.steps.reserve(order.size());
  for (StateId k : order) {
    trace.steps.push_back(ReductionStep<S>{k, exclude_state(*current, k)});
    current = &trace.steps.back().snapshot;
  }
  return trace;
}

enum class ReductionStrategy {
  PerStart,    // full reduction per start state, that state excluded last
  SharedPass,  // one full pass; reads every start from its retained row
};

namespace detail {

template <class S>
ReducedModel<S> fold_exclusions(ReducedModel<S> model,
                                const std::vector<StateId>& order) {
  for (StateId k : order) model = exclude_state(model, k);
  return model;
}

}  // namespace detail

/// Power moments of the accumulated reward until the first hit of `target`,
/// by sequential state exclusion. The target state's own return moments are
/// always included in the table.
template <class S>
MomentTable<S> hitting_moments(const SmpModel<S>& model, StateId target,
                               std::vector<StateId> starts, int d,
                               ReductionStrategy strategy =
                                   ReductionStrategy::PerStart) {
  model.require_state(target);
  model.require_order(d);
  if (d < 1) fail(ErrorCode::OrderOutOfRange, "need at least order 1");
  if (starts.empty())
    for (int i = 0; i < model.num_states(); ++i) starts.push_back(i);
  for (StateId i : starts) model.require_state(i);
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  if (!check_reachability(model, target))
    fail(ErrorCode::UnreachableTarget,
         "target " + std::to_string(target) +
             " is not reachable from every state");

  if (std::find(starts.begin(), starts.end(), target) == starts.end())
    starts.push_back(target);
  std::sort(starts.begin(), starts.end());

  DenseMatrix<S> values(d + 1, starts.size());
  for (std::size_t c = 0; c < starts.size(); ++c) values(0, c) = S(1);

  if (strategy == ReductionStrategy::SharedPass) {
    std::vector<StateId> order;
    for (int s = 0; s < model.num_states(); ++s)
      if (s != target) order.push_back(s);
    const ReducedModel<S> final_model =
        detail::fold_exclusions(begin_reduction(model, target), order);
    for (std::size_t c = 0; c < starts.size(); ++c)
      for (int r = 1; r <= d; ++r)
        values(r, c) = final_model.moment(r, starts[c], target);
    return MomentTable<S>(target, std::move(starts), std::move(values));
  }

  for (std::size_t c = 0; c < starts.size(); ++c) {
    const StateId i = starts[c];
    std::vector<StateId> order;
    for (int s = 0; s < model.num_states(); ++s)
      if (s != target && s != i) order.push_back(s);
    if (i != target) order.push_back(i);  // start excluded last
    const ReducedModel<S> final_model =
        detail::fold_exclusions(begin_reduction(model, target), order);
    for (int r = 1; r <= d; ++r)
      values(r, c) = final_model.moment(r, i, target);
  }
  return MomentTable<S>(target, std::move(starts), std::move(values));
}

}  // namespace smp

#endif  // SEMIMARKOV_REDUCTION_HPP
