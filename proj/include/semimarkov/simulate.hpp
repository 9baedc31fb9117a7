#ifndef SEMIMARKOV_SIMULATE_HPP
#define SEMIMARKOV_SIMULATE_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "semimarkov/model.hpp"

namespace smp {

/// Sojourn/reward law attached to one transition: a point mass, an
/// exponential, or a finite mixture of those. No mass at zero.
template <class S>
struct SojournLaw {
  enum class Kind { Point, Exponential, Mixture };

  Kind kind = Kind::Point;
  S value = S(0);  // point location or exponential rate
  std::vector<std::pair<SojournLaw, S>> parts;

  static SojournLaw point(S at) {
    if (at == S(0))
      fail(ErrorCode::MalformedDocument,
           "point mass at 0 would allow instant transitions");
    SojournLaw law;
    law.kind = Kind::Point;
    law.value = std::move(at);
    return law;
  }

  static SojournLaw exponential(S rate) {
    if (!(rate > S(0)))
      fail(ErrorCode::MalformedDocument,
           "exponential rate must be positive");
    SojournLaw law;
    law.kind = Kind::Exponential;
    law.value = std::move(rate);
    return law;
  }

  static SojournLaw mixture(std::vector<std::pair<SojournLaw, S>> parts,
                            double tolerance = 1e-9) {
    if (parts.empty())
      fail(ErrorCode::MalformedDocument, "mixture needs at least one part");
    S total(0);
    for (const auto& [law, weight] : parts) {
      (void)law;
      if (weight < S(0))
        fail(ErrorCode::MalformedDocument, "mixture weight is negative");
      total += weight;
    }
    if (!near(total, S(1), tolerance))
      fail(ErrorCode::MalformedDocument, "mixture weights must sum to 1");
    SojournLaw law;
    law.kind = Kind::Mixture;
    law.parts = std::move(parts);
    return law;
  }

  /// Analytic raw moment E[T^r].
  S moment(int r) const {
    if (r == 0) return S(1);
    switch (kind) {
      case Kind::Point: {
        S acc(1);
        for (int i = 0; i < r; ++i) acc *= value;
        return acc;
      }
      case Kind::Exponential: {
        S acc(1);
        for (int i = 1; i <= r; ++i) acc = acc * S(i) / value;
        return acc;
      }
      case Kind::Mixture: {
        S acc(0);
        for (const auto& [law, weight] : parts) acc += weight * law.moment(r);
        return acc;
      }
    }
    return S(0);
  }
};

/// Per-transition sojourn laws for a model; entry (i, j) must exist wherever
/// p_ij > 0.
template <class S>
struct DistributionSpec {
  std::vector<std::vector<std::optional<SojournLaw<S>>>> laws;

  int num_states() const { return static_cast<int>(laws.size()); }
  const std::optional<SojournLaw<S>>& law(StateId i, StateId j) const {
    return laws[i][j];
  }
};

/// One (i, j, r) entry where the law's analytic moment disagrees with the
/// model tensor, plus transitions lacking a law entirely.
template <class S>
struct ConsistencyReport {
  struct Mismatch {
    StateId i, j;
    int order;
    S model_value;
    S law_value;
  };
  std::vector<Mismatch> mismatches;
  std::vector<std::pair<StateId, StateId>> missing_laws;

  bool consistent() const {
    return mismatches.empty() && missing_laws.empty();
  }
};

/// Compares the analytic moments of every attached law against the model's
/// moment tensor. Report-only; never throws on disagreement.
template <class S>
ConsistencyReport<S> verify_consistency(const DistributionSpec<S>& spec,
                                        const SmpModel<S>& model) {
  ConsistencyReport<S> report;
  const int n = model.num_states();
  if (spec.num_states() != n) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (model.probability(i, j) > S(0)) report.missing_laws.push_back({i, j});
    return report;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& law = spec.law(i, j);
      if (!law) {
        if (model.probability(i, j) > S(0)) report.missing_laws.push_back({i, j});
        continue;
      }
      for (int r = 1; r <= model.max_order(); ++r) {
        const S expected = model.probability(i, j) * law->moment(r);
        const S actual = model.moment_matrix(r)(i, j);
        if (!near(actual, expected, model.tolerance()))
          report.mismatches.push_back({i, j, r, actual, expected});
      }
    }
  }
  return report;
}

/// SplitMix64 stream; per-path streams are derived by hashing (seed, path),
/// so results do not depend on execution order.
struct SplitMix64 {
  std::uint64_t state;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static SplitMix64 for_path(std::uint64_t seed, std::uint64_t path) {
    return SplitMix64{mix(mix(seed) ^ mix(path * 0xD1342543DE82EF95ULL + 1))};
  }

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in the open interval (0, 1).
  double next_open01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
};

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
};

struct HitStats {
  std::int64_t count = 0;
  double frequency = 0.0;
  double frequency_se = 0.0;
  std::vector<MomentEstimate> moments;  // E[W^r ; hit here], r = 1..d
};

struct SimulationResult {
  std::int64_t n_paths = 0;
  std::int64_t completed = 0;
  std::int64_t truncated = 0;
  int d = 0;
  StateId start = 0;
  std::vector<StateId> targets;
  std::vector<MomentEstimate> moments;  // E[W^r], r = 1..d
  MomentEstimate steps;                 // embedded jumps until the hit
  std::map<StateId, HitStats> hits;
};

struct SimOptions {
  std::int64_t n_paths = 1'000'000;
  std::uint64_t seed = 1;
  int d = 2;
  std::int64_t max_steps = 1'000'000;
  int threads = 0;  // 0 = hardware concurrency
};

namespace detail {

// Flattened double-precision sampler for one transition's law.
struct CompiledLaw {
  struct Component {
    double cum_weight;
    bool is_point;
    double param;
  };
  std::vector<Component> components;

  double sample(SplitMix64& rng) const {
    const Component* chosen = &components.back();
    if (components.size() > 1) {
      const double u = rng.next_open01();
      for (const auto& comp : components)
        if (u <= comp.cum_weight) {
          chosen = &comp;
          break;
        }
    }
    if (chosen->is_point) return chosen->param;
    return -std::log(rng.next_open01()) / chosen->param;
  }
};

template <class S>
void flatten_law(const SojournLaw<S>& law, double weight, double& cum,
                 std::vector<typename CompiledLaw::Component>& out) {
  switch (law.kind) {
    case SojournLaw<S>::Kind::Point:
      cum += weight;
      out.push_back({cum, true, ScalarTraits<S>::to_double(law.value)});
      break;
    case SojournLaw<S>::Kind::Exponential:
      cum += weight;
      out.push_back({cum, false, ScalarTraits<S>::to_double(law.value)});
      break;
    case SojournLaw<S>::Kind::Mixture:
      for (const auto& [part, w] : law.parts)
        flatten_law(part, weight * ScalarTraits<S>::to_double(w), cum, out);
      break;
  }
}

struct ChunkTally {
  std::int64_t completed = 0;
  std::int64_t truncated = 0;
  std::vector<long double> power_sum, power_sq;  // Sigma W^r, Sigma W^2r
  long double step_sum = 0, step_sq = 0;
  // per target state: count, Sigma W^r, Sigma W^2r
  std::vector<std::int64_t> hit_count;
  std::vector<std::vector<long double>> hit_sum, hit_sq;
};

}  // namespace detail

/// Samples hitting trajectories and returns empirical moments with standard
/// errors, split by the state the target set is entered through.
/// Deterministic for a given seed, independent of thread count.
template <class S>
SimulationResult simulate_hitting(const SmpModel<S>& model,
                                  const DistributionSpec<S>& spec,
                                  StateId start, const TargetSet& targets,
                                  const SimOptions& options) {
  model.require_state(start);
  if (options.n_paths < 2)
    fail(ErrorCode::MalformedDocument, "need at least 2 paths");
  if (!check_reachability(model, targets))
    fail(ErrorCode::UnreachableTarget,
         "the target set is not reachable from every state");
  const int n = model.num_states();
  const int d = std::min(options.d, model.max_order());

  // Compile rows: cumulative transition probabilities plus per-edge samplers.
  std::vector<std::vector<double>> cum_rows(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<detail::CompiledLaw>> samplers(
      n, std::vector<detail::CompiledLaw>(n));
  for (int i = 0; i < n; ++i) {
    double cum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double pij = ScalarTraits<S>::to_double(model.probability(i, j));
      cum += pij;
      cum_rows[i][j] = cum;
      if (pij > 0.0) {
        const auto& law = spec.law(i, j);
        if (!law)
          fail(ErrorCode::MalformedDocument,
               "no sojourn law for transition (" + std::to_string(i) + "," +
                   std::to_string(j) + ")");
        double w = 0.0;
        detail::flatten_law(*law, 1.0, w, samplers[i][j].components);
      }
    }
    cum_rows[i][n - 1] = 1.0;  // guard against rounding in the last bucket
  }

  std::vector<char> is_target(n, 0);
  for (StateId t : targets.states()) is_target[t] = 1;
  const int nt = static_cast<int>(targets.size());
  std::vector<int> target_slot(n, -1);
  for (int k = 0; k < nt; ++k) target_slot[targets.states()[k]] = k;

  // Fixed chunk grid: per-chunk tallies merge in chunk order, so the result
  // does not depend on how chunks are assigned to threads.
  const int num_chunks =
      static_cast<int>(std::min<std::int64_t>(512, options.n_paths));
  std::vector<detail::ChunkTally> tallies(num_chunks);
  for (auto& tally : tallies) {
    tally.power_sum.assign(d, 0);
    tally.power_sq.assign(d, 0);
    tally.hit_count.assign(nt, 0);
    tally.hit_sum.assign(nt, std::vector<long double>(d, 0));
    tally.hit_sq.assign(nt, std::vector<long double>(d, 0));
  }

  const auto run_chunk = [&](int chunk) {
    detail::ChunkTally& tally = tallies[chunk];
    const std::int64_t lo = options.n_paths * chunk / num_chunks;
    const std::int64_t hi = options.n_paths * (chunk + 1) / num_chunks;
    for (std::int64_t path = lo; path < hi; ++path) {
      SplitMix64 rng = SplitMix64::for_path(options.seed, path);
      int state = start;
      double w = 0.0;
      std::int64_t steps = 0;
      int hit = -1;
      while (true) {
        const double u = rng.next_open01();
        const auto& row = cum_rows[state];
        int next = 0;
        while (next < n - 1 && u > row[next]) ++next;
        w += samplers[state][next].sample(rng);
        ++steps;
        if (is_target[next]) {
          hit = next;
          break;
        }
        if (steps >= options.max_steps) break;
        state = next;
      }
      if (hit < 0) {
        ++tally.truncated;
        continue;
      }
      ++tally.completed;
      tally.step_sum += steps;
      tally.step_sq += static_cast<long double>(steps) * steps;
      const int slot = target_slot[hit];
      ++tally.hit_count[slot];
      long double power = 1.0L;
      for (int r = 0; r < d; ++r) {
        power *= w;
        tally.power_sum[r] += power;
        tally.power_sq[r] += power * power;
        tally.hit_sum[slot][r] += power;
        tally.hit_sq[slot][r] += power * power;
      }
    }
  };

  int n_threads = options.threads > 0
                      ? options.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, num_chunks));
  if (n_threads == 1) {
    for (int c = 0; c < num_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<int> next_chunk{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (int c = next_chunk.fetch_add(1); c < num_chunks;
             c = next_chunk.fetch_add(1))
          run_chunk(c);
      });
    for (auto& worker : pool) worker.join();
  }

  detail::ChunkTally total = tallies[0];
  for (int c = 1; c < num_chunks; ++c) {
    const auto& tally = tallies[c];
    total.completed += tally.completed;
    total.truncated += tally.truncated;
    total.step_sum += tally.step_sum;
    total.step_sq += tally.step_sq;
    for (int r = 0; r < d; ++r) {
      total.power_sum[r] += tally.power_sum[r];
      total.power_sq[r] += tally.power_sq[r];
    }
    for (int k = 0; k < nt; ++k) {
      total.hit_count[k] += tally.hit_count[k];
      for (int r = 0; r < d; ++r) {
        total.hit_sum[k][r] += tally.hit_sum[k][r];
        total.hit_sq[k][r] += tally.hit_sq[k][r];
      }
    }
  }
  if (total.completed == 0)
    fail(ErrorCode::TruncationExceeded,
         "every path hit the step limit before reaching the target set");

  const auto estimate = [](long double sum, long double sq,
                           std::int64_t count) {
    MomentEstimate est;
    est.mean = static_cast<double>(sum / count);
    if (count > 1) {
      const long double var =
          std::max<long double>(0, (sq - sum * sum / count) / (count - 1));
      est.se = static_cast<double>(std::sqrt(static_cast<double>(var)) /
                                   std::sqrt(static_cast<double>(count)));
    }
    return est;
  };

  SimulationResult result;
  result.n_paths = options.n_paths;
  result.completed = total.completed;
  result.truncated = total.truncated;
  result.d = d;
  result.start = start;
  result.targets = targets.states();
  for (int r = 0; r < d; ++r)
    result.moments.push_back(
        estimate(total.power_sum[r], total.power_sq[r], total.completed));
  result.steps = estimate(total.step_sum, total.step_sq, total.completed);
  for (int k = 0; k < nt; ++k) {
    HitStats stats;
    stats.count = total.hit_count[k];
    const double freq =
        static_cast<double>(stats.count) / static_cast<double>(total.completed);
    stats.frequency = freq;
    stats.frequency_se = std::sqrt(
        std::max(0.0, freq * (1.0 - freq) / static_cast<double>(total.completed)));
    for (int r = 0; r < d; ++r)
      stats.moments.push_back(estimate(total.hit_sum[k][r], total.hit_sq[k][r],
                                       total.completed));
    result.hits.emplace(targets.states()[k], std::move(stats));
  }
  return result;
}

}  // namespace smp

#endif  // SEMIMARKOV_SIMULATE_HPP
