#ifndef SEMIMARKOV_MODEL_HPP
#define SEMIMARKOV_MODEL_HPP

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "semimarkov/errors.hpp"
#include "semimarkov/scalar.hpp"

namespace smp {

enum class RewardKind { Nonnegative, Real };

inline const char* to_string(RewardKind kind) {
  return kind == RewardKind::Nonnegative ? "nonnegative" : "real";
}

/// Stack of per-order moment matrices. slice r holds the order-r sojourn
/// moments; slice 0 is the embedded transition matrix itself.
template <class S>
using MomentStack = std::vector<DenseMatrix<S>>;

/// Nonempty, sorted, duplicate-free set of states to hit.
class TargetSet {
 public:
  TargetSet(std::vector<StateId> states, int num_states) {
    if (states.empty()) fail(ErrorCode::EmptyTarget, "target set is empty");
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    for (StateId s : states) {
      if (s < 0 || s >= num_states)
        fail(ErrorCode::MalformedDocument,
             "target state " + std::to_string(s) + " out of range");
    }
    states_ = std::move(states);
  }

  const std::vector<StateId>& states() const { return states_; }
  bool contains(StateId s) const {
    return std::binary_search(states_.begin(), states_.end(), s);
  }
  std::size_t size() const { return states_.size(); }

 private:
  std::vector<StateId> states_;
};

/// Finite semi-Markov process given by its embedded transition probabilities
/// and sojourn-moment matrices. Immutable after construction; validation
/// happens in the constructor.
template <class S>
class SmpModel {
 public:
  SmpModel(MomentStack<S> slices, RewardKind kind = RewardKind::Nonnegative,
           std::optional<DenseVector<S>> initial = std::nullopt,
           double tolerance = 1e-9)
      : slices_(std::move(slices)),
        kind_(kind),
        initial_(std::move(initial)),
        tolerance_(tolerance) {
    validate();
  }

  int num_states() const { return static_cast<int>(slices_[0].rows()); }
  int m() const { return num_states() - 1; }
  int max_order() const { return static_cast<int>(slices_.size()) - 1; }
  RewardKind reward_kind() const { return kind_; }
  double tolerance() const { return tolerance_; }

  const DenseMatrix<S>& transition_matrix() const { return slices_[0]; }
  const S& probability(StateId i, StateId j) const { return slices_[0](i, j); }

  const DenseMatrix<S>& moment_matrix(int r) const {
    require_order(r);
    return slices_[static_cast<std::size_t>(r)];
  }
  const MomentStack<S>& stack() const { return slices_; }
  const std::optional<DenseVector<S>>& initial_distribution() const {
    return initial_;
  }

  void require_order(int r) const {
    if (r < 0 || r > max_order())
      fail(ErrorCode::OrderOutOfRange,
           "moment order " + std::to_string(r) + " not in [0, " +
               std::to_string(max_order()) + "]");
  }

  void require_state(StateId i) const {
    if (i < 0 || i >= num_states())
      fail(ErrorCode::MalformedDocument,
           "state " + std::to_string(i) + " out of range");
  }

  friend bool operator==(const SmpModel& a, const SmpModel& b) {
    if (a.kind_ != b.kind_ || a.slices_.size() != b.slices_.size())
      return false;
    for (std::size_t r = 0; r < a.slices_.size(); ++r)
      if (a.slices_[r] != b.slices_[r]) return false;
    if (a.initial_.has_value() != b.initial_.has_value()) return false;
    if (a.initial_ && *a.initial_ != *b.initial_) return false;
    return true;
  }

 private:
  void validate() const {
    if (slices_.size() < 2)
      fail(ErrorCode::MalformedDocument,
           "a model needs the transition matrix and at least one moment "
           "matrix (max order >= 1)");
    const Eigen::Index n = slices_[0].rows();
    if (n < 1 || slices_[0].cols() != n)
      fail(ErrorCode::MalformedDocument, "transition matrix must be square");
    for (const auto& slice : slices_) {
      if (slice.rows() != n || slice.cols() != n)
        fail(ErrorCode::MalformedDocument,
             "all moment matrices must share the transition matrix shape");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      S row_sum(0);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (slices_[0](i, j) < S(0))
          fail(ErrorCode::NegativeMoment,
               "transition probability (" + std::to_string(i) + "," +
                   std::to_string(j) + ") is negative");
        row_sum += slices_[0](i, j);
      }
      if (!near(row_sum, S(1), tolerance_))
        fail(ErrorCode::RowSumViolation,
             "row " + std::to_string(i) + " of the transition matrix sums to " +
                 ScalarTraits<S>::display(row_sum));
    }
    if (kind_ == RewardKind::Nonnegative) {
      for (std::size_t r = 1; r < slices_.size(); ++r)
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j)
            if (slices_[r](i, j) < S(0))
              fail(ErrorCode::NegativeMoment,
                   "order-" + std::to_string(r) + " moment (" +
                       std::to_string(i) + "," + std::to_string(j) +
                       ") is negative in a nonnegative-reward model");
    }
    if (initial_) {
      if (initial_->size() != n)
        fail(ErrorCode::MalformedDocument,
             "initial distribution length does not match the state count");
      S total(0);
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((*initial_)(i) < S(0))
          fail(ErrorCode::MalformedDocument,
               "initial distribution has a negative entry");
        total += (*initial_)(i);
      }
      if (!near(total, S(1), tolerance_))
        fail(ErrorCode::MalformedDocument,
             "initial distribution does not sum to 1");
    }
  }

  MomentStack<S> slices_;
  RewardKind kind_;
  std::optional<DenseVector<S>> initial_;
  double tolerance_;
};

/// Builds the moment stack from a separately supplied order-0 matrix,
/// checking it against the leading slice of the full stack.
template <class S>
MomentStack<S> stack_with_order_zero(const DenseMatrix<S>& p,
                                     const MomentStack<S>& full,
                                     double tolerance = 1e-9) {
  if (full.empty() || full[0].rows() != p.rows() || full[0].cols() != p.cols())
    fail(ErrorCode::MalformedDocument,
         "order-0 matrix shape does not match the moment stack");
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (!near(full[0](i, j), p(i, j), tolerance))
        fail(ErrorCode::OrderZeroMismatch,
             "order-0 moment (" + std::to_string(i) + "," + std::to_string(j) +
                 ") differs from the transition probability");
  MomentStack<S> out = full;
  out[0] = p;
  return out;
}

/// e^(r)_{ij}; order 0 returns the transition probability.
template <class S>
const S& sojourn_moment(const SmpModel<S>& model, int r, StateId i, StateId j) {
  model.require_order(r);
  model.require_state(i);
  model.require_state(j);
  return model.moment_matrix(r)(i, j);
}

/// True iff every state reaches the target set through a path of positive
/// transition probabilities of length >= 1.
template <class S>
bool check_reachability(const SmpModel<S>& model, const TargetSet& target) {
  const int n = model.num_states();
  for (StateId t : target.states()) model.require_state(t);
  std::vector<char> can_reach(n, 0);
  std::vector<StateId> frontier(target.states().begin(),
                                target.states().end());
  // Reverse search: i is marked once some successor is a target state or is
  // itself marked.
  while (!frontier.empty()) {
    const StateId j = frontier.back();
    frontier.pop_back();
    for (StateId i = 0; i < n; ++i) {
      if (!can_reach[i] && model.probability(i, j) > S(0)) {
        can_reach[i] = 1;
        frontier.push_back(i);
      }
    }
  }
  return std::all_of(can_reach.begin(), can_reach.end(),
                     [](char c) { return c != 0; });
}

template <class S>
bool check_reachability(const SmpModel<S>& model, StateId target) {
  return check_reachability(model, TargetSet({target}, model.num_states()));
}

/// Hitting-time moments E^(r) indexed by order (rows, with an order-0 row of
/// ones) and start state (columns).
template <class S>
class MomentTable {
 public:
  MomentTable(StateId target, std::vector<StateId> states,
              DenseMatrix<S> values)
      : target_(target), states_(std::move(states)), values_(std::move(values)) {
    if (values_.cols() != static_cast<Eigen::Index>(states_.size()))
      fail(ErrorCode::MalformedDocument, "moment table shape mismatch");
  }

  static MomentTable order_zero(StateId target, std::vector<StateId> states) {
    DenseMatrix<S> ones(1, states.size());
    for (Eigen::Index c = 0; c < ones.cols(); ++c) ones(0, c) = S(1);
    return MomentTable(target, std::move(states), std::move(ones));
  }

  StateId target() const { return target_; }
  int max_order() const { return static_cast<int>(values_.rows()) - 1; }
  const std::vector<StateId>& states() const { return states_; }

  bool contains(StateId i) const { return index_of(i) >= 0; }

  const S& at(int r, StateId i) const {
    if (r < 0 || r > max_order())
      fail(ErrorCode::OrderOutOfRange,
           "moment order " + std::to_string(r) + " not in table");
    const int c = index_of(i);
    if (c < 0)
      fail(ErrorCode::MissingLowerMoments,
           "state " + std::to_string(i) + " not in table");
    return values_(r, c);
  }

  const DenseMatrix<S>& values() const { return values_; }

 private:
  int index_of(StateId i) const {
    const auto it = std::find(states_.begin(), states_.end(), i);
    return it == states_.end() ? -1
                               : static_cast<int>(it - states_.begin());
  }

  StateId target_;
  std::vector<StateId> states_;
  DenseMatrix<S> values_;
};

}  // namespace smp

#endif  // SEMIMARKOV_MODEL_HPP
