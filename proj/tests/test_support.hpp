#ifndef SMP_TEST_SUPPORT_HPP
#define SMP_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "semimarkov/semimarkov.hpp"

namespace smp::testing {

/// The worked four-state example used throughout the test suite:
/// row 0 jumps to 3 after a unit sojourn, rows 1 and 2 are exponential
/// mixtures, row 3 splits between 2 and 3 with point-mass sojourns.
template <class S>
SmpModel<S> example_model() {
  const auto frac = [](long num, long den) {
    return ScalarTraits<S>::from_fraction(num, den);
  };
  DenseMatrix<S> p(4, 4), e1(4, 4), e2(4, 4);
  p << S(0), S(0), S(0), S(1),
      frac(1, 4), frac(1, 4), frac(1, 4), frac(1, 4),
      S(0), frac(1, 3), frac(1, 3), frac(1, 3),
      S(0), S(0), frac(1, 2), frac(1, 2);
  e1 << S(0), S(0), S(0), S(1),
      S(1), S(1), S(1), S(1),
      S(0), S(1), S(1), S(1),
      S(0), S(0), S(1), S(1);
  e2 << S(0), S(0), S(0), S(1),
      S(8), S(8), S(8), S(8),
      S(0), S(6), S(6), S(6),
      S(0), S(0), S(2), S(2);
  return SmpModel<S>({p, e1, e2});
}

template <class S>
DistributionSpec<S> example_distributions() {
  const auto frac = [](long num, long den) {
    return ScalarTraits<S>::from_fraction(num, den);
  };
  DistributionSpec<S> spec;
  spec.laws.assign(4, std::vector<std::optional<SojournLaw<S>>>(4));
  spec.laws[0][3] = SojournLaw<S>::point(S(1));
  for (int j = 0; j < 4; ++j)
    spec.laws[1][j] = SojournLaw<S>::exponential(frac(1, 4));
  for (int j = 1; j < 4; ++j)
    spec.laws[2][j] = SojournLaw<S>::exponential(frac(1, 3));
  spec.laws[3][2] = SojournLaw<S>::point(S(2));
  spec.laws[3][3] = SojournLaw<S>::point(S(2));
  return spec;
}

/// p = [[0,1],[1,0]] with unit deterministic sojourns.
template <class S>
SmpModel<S> alternating_model(int d = 1) {
  DenseMatrix<S> p(2, 2);
  p << S(0), S(1), S(1), S(0);
  MomentStack<S> slices(d + 1, p);
  return SmpModel<S>(std::move(slices));
}

template <class S>
struct GeneratedModel {
  SmpModel<S> model;
  DistributionSpec<S> spec;
};

/// Random model with genuine per-transition laws, so every moment tensor is
/// realizable. The support always contains the cycle i -> i-1, 0 -> m,
/// making every target set reachable from every state.
inline GeneratedModel<Rational> random_model(std::mt19937& rng, int m, int d,
                                             bool real_rewards = false) {
  using S = Rational;
  const int n = m + 1;
  std::uniform_int_distribution<int> weight_dist(1, 6);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> law_kind(0, real_rewards ? 1 : 2);
  std::uniform_int_distribution<int> point_pick(0, 4);
  std::uniform_int_distribution<int> rate_pick(0, 2);

  const long point_num[5] = {1, 1, 3, 2, 3};
  const long point_den[5] = {2, 1, 2, 1, 1};
  const long neg_sign[5] = {-1, 1, -1, 1, 1};
  const long rate_num[3] = {1, 1, 2};
  const long rate_den[3] = {2, 1, 1};

  const auto make_law = [&](std::mt19937& gen) -> SojournLaw<S> {
    const int kind = law_kind(gen);
    const auto pick_point = [&]() {
      const int c = point_pick(gen);
      S at = ScalarTraits<S>::from_fraction(point_num[c], point_den[c]);
      if (real_rewards && neg_sign[point_pick(gen)] < 0) at = -at;
      return at;
    };
    if (kind == 0) return SojournLaw<S>::point(pick_point());
    if (kind == 1) {
      std::vector<std::pair<SojournLaw<S>, S>> parts;
      S first = pick_point();
      S second = pick_point();
      if (second == first) second += S(1);
      parts.emplace_back(SojournLaw<S>::point(first),
                         ScalarTraits<S>::from_fraction(1, 3));
      parts.emplace_back(SojournLaw<S>::point(second),
                         ScalarTraits<S>::from_fraction(2, 3));
      return SojournLaw<S>::mixture(std::move(parts));
    }
    const int c = rate_pick(gen);
    return SojournLaw<S>::exponential(
        ScalarTraits<S>::from_fraction(rate_num[c], rate_den[c]));
  };

  DenseMatrix<S> p = DenseMatrix<S>::Zero(n, n);
  DistributionSpec<S> spec;
  spec.laws.assign(n, std::vector<std::optional<SojournLaw<S>>>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<long> weights(n, 0);
    weights[n == 1 ? 0 : (i == 0 ? m : i - 1)] = weight_dist(rng);
    for (int j = 0; j < n; ++j)
      if (coin(rng) == 1) weights[j] += weight_dist(rng);
    long total = 0;
    for (long w : weights) total += w;
    for (int j = 0; j < n; ++j) {
      if (weights[j] == 0) continue;
      p(i, j) = ScalarTraits<S>::from_fraction(weights[j], total);
      spec.laws[i][j] = make_law(rng);
    }
  }

  MomentStack<S> slices(d + 1, DenseMatrix<S>::Zero(n, n));
  slices[0] = p;
  for (int r = 1; r <= d; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (spec.laws[i][j]) slices[r](i, j) = p(i, j) * spec.laws[i][j]->moment(r);
  return GeneratedModel<Rational>{
      SmpModel<S>(std::move(slices),
                  real_rewards ? RewardKind::Real : RewardKind::Nonnegative),
      std::move(spec)};
}

template <class S>
SojournLaw<S> cast_law(const SojournLaw<Rational>& law) {
  if constexpr (std::is_same_v<S, Rational>) {
    return law;
  } else {
    switch (law.kind) {
      case SojournLaw<Rational>::Kind::Point:
        return SojournLaw<S>::point(law.value.get_d());
      case SojournLaw<Rational>::Kind::Exponential:
        return SojournLaw<S>::exponential(law.value.get_d());
      default: {
        std::vector<std::pair<SojournLaw<S>, S>> parts;
        for (const auto& [part, weight] : law.parts)
          parts.emplace_back(cast_law<S>(part), weight.get_d());
        return SojournLaw<S>::mixture(std::move(parts));
      }
    }
  }
}

template <class S>
GeneratedModel<S> cast_generated(const GeneratedModel<Rational>& gen) {
  if constexpr (std::is_same_v<S, Rational>) {
    return gen;
  } else {
    MomentStack<S> slices;
    for (const auto& slice : gen.model.stack())
      slices.push_back(matrix_cast<S>(slice));
    DistributionSpec<S> spec;
    const int n = gen.model.num_states();
    spec.laws.assign(n, std::vector<std::optional<SojournLaw<S>>>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (gen.spec.laws[i][j])
          spec.laws[i][j] = cast_law<S>(*gen.spec.laws[i][j]);
    return GeneratedModel<S>{
        SmpModel<S>(std::move(slices), gen.model.reward_kind()),
        std::move(spec)};
  }
}

}  // namespace smp::testing

#endif  // SMP_TEST_SUPPORT_HPP
