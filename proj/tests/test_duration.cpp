#include <cmath>

#include <gtest/gtest.h>

#include "percgames/duration.hpp"
#include "support.hpp"

using namespace percgames;

namespace {

LabeledTree cherry(Label a, Label b) {
  LabeledTree t;
  t.depth = 1;
  t.first_child = {1, 0, 0};
  t.child_count = {2, 0, 0};
  t.level = {0, 1, 1};
  t.label = {Label::Safe, a, b};
  return t;
}

}  // namespace

TEST(Series, GeometricDerivatives) {
  const auto r = expected_duration_series(OffspringDistribution::geometric(0.5), {0.1, 0.1});
  // G'(0.4) = 0.25 / 0.64; |g'| = 0.8 G'(0.4); g2' = g'(0.4)^2 since 0.4 is alpha.
  EXPECT_NEAR(r.derivative_g_at_wprime_abs, 0.3125, 1e-9);
  EXPECT_NEAR(r.derivative_g2_at_wprime, 0.3125 * 0.3125, 1e-9);
  EXPECT_TRUE(r.criterion_met);
  EXPECT_EQ(r.status, SeriesStatus::converged);
  EXPECT_TRUE(std::isfinite(r.series_value));
  EXPECT_GT(r.series_value, 1.0);
}

TEST(Series, DiracOneLinear) {
  const auto r = expected_duration_series(OffspringDistribution::dirac(1), {0.3, 0.3});
  EXPECT_NEAR(r.w_prime, 0.5, 1e-10);
  EXPECT_NEAR(r.derivative_g_at_wprime_abs, 0.4, 1e-12);
  EXPECT_NEAR(r.derivative_g2_at_wprime, 0.16, 1e-12);
  EXPECT_TRUE(r.criterion_met);
  // On a path every round ends the game with probability p + q, so T is geometric.
  EXPECT_NEAR(r.series_value, 1.0 / 0.6, 1e-9);
}

TEST(Series, DrawRegimeRejected) {
  EXPECT_THROW(expected_duration_series(OffspringDistribution::dirac(2), {0.01, 0.01}),
               DrawRegimeError);
}

TEST(Series, TailBoundContracts) {
  Stream rng = make_stream(41, 0);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto d = testsupport::random_named(rng, i);
    const auto pq = testsupport::random_params(rng);
    DurationReport a;
    try {
      a = expected_duration_series(d, pq, 1e-8);
    } catch (const DrawRegimeError&) {
      continue;
    }
    if (a.status != SeriesStatus::converged) continue;
    ++checked;
    EXPECT_EQ(a.criterion_met, a.derivative_g2_at_wprime < 1 && a.derivative_g_at_wprime_abs < 1);
    const auto half = expected_duration_series(d, pq, 5e-9);
    EXPECT_LT(std::abs(half.series_value - a.series_value), a.tail_bound + 1e-15) << d.spec();
    const auto fine = expected_duration_series(d, pq, 1e-13);
    EXPECT_GE(fine.terms_used, a.terms_used);
    EXPECT_LT(std::abs(fine.series_value - a.series_value), a.tail_bound + 1e-15) << d.spec();
    EXPECT_GE(fine.series_value, a.series_value - 1e-15);
  }
  EXPECT_GE(checked, 20);
}

TEST(Durations, HandCases) {
  const auto traps = cherry(Label::Trap, Label::Trap);
  EXPECT_EQ(optimal_durations(traps, classify_bond(traps))[0], 1);
  const auto target = cherry(Label::Trap, Label::Target);
  EXPECT_EQ(optimal_durations(target, classify_bond(target))[0], 1);

  // Root -> safe -> v, where v has a single trap edge: v loses in one round, so
  // the root wins in two.
  LabeledTree chain;
  chain.depth = 3;
  chain.first_child = {1, 2, 0};
  chain.child_count = {1, 1, 0};
  chain.level = {0, 1, 2};
  chain.label = {Label::Safe, Label::Safe, Label::Trap};
  const auto states = classify_bond(chain);
  EXPECT_EQ(states[0], State::W);
  EXPECT_EQ(optimal_durations(chain, states)[0], 2);

  // The winner prefers an immediate target over a longer safe win.
  LabeledTree both;
  both.depth = 3;
  both.first_child = {1, 3, 0, 0};
  both.child_count = {2, 1, 0, 0};
  both.level = {0, 1, 1, 2};
  both.label = {Label::Safe, Label::Safe, Label::Target, Label::Trap};
  EXPECT_EQ(optimal_durations(both, classify_bond(both))[0], 1);
}

TEST(Durations, AtLeastOneRound) {
  for (int i = 0; i < 500; ++i) {
    Stream rng = make_stream(42, static_cast<std::uint64_t>(i));
    const auto t = sample_labeled_tree(OffspringDistribution::poisson(1.0), {0.2, 0.2}, Mode::bond, 8, rng);
    const auto s = classify_bond(t);
    const auto dur = optimal_durations(t, s);
    for (std::size_t v = 0; v < s.size(); ++v) {
      if (s[v] == State::D) EXPECT_EQ(dur[v], -1);
      else EXPECT_GE(dur[v], 1);
    }
  }
}

// P(T > n) equals the probability that the root is undecided at depth n, so the
// empirical duration tail must follow the recurrence.
TEST(Durations, TailMatchesRecurrence) {
  const auto d = OffspringDistribution::zero_or_d(2, 0.6);
  const ParamPair pq{0.15, 0.15};
  const int depth = 6;
  const int n = 40'000;
  std::vector<int> exceed(depth, 0);
  for (int i = 0; i < n; ++i) {
    Stream rng = make_stream(43, static_cast<std::uint64_t>(i));
    const auto t = sample_labeled_tree(d, pq, Mode::bond, depth, rng);
    const auto s = classify_bond(t);
    const std::int64_t dur = s[0] == State::D ? depth + 1 : optimal_durations(t, s)[0];
    for (int k = 0; k < depth; ++k) exceed[static_cast<std::size_t>(k)] += dur > k;
  }
  for (int k = 1; k < depth; ++k) {
    const auto r = recurrence_wn_ln(d, pq, k);
    const double expected = 1 - r.w - r.l;
    const double se = std::sqrt(expected * (1 - expected) / n);
    EXPECT_NEAR(exceed[static_cast<std::size_t>(k)] / static_cast<double>(n), expected, 4 * se + 1e-12)
        << k;
  }
}

TEST(MonteCarloDuration, GeometricMatchesSeries) {
  const auto d = OffspringDistribution::geometric(0.5);
  const ParamPair pq{0.1, 0.1};
  const auto series = expected_duration_series(d, pq);
  const auto mc = monte_carlo_duration(d, pq, 30, 50'000, 2024);
  EXPECT_LT(mc.unresolved_fraction, 1e-3);
  EXPECT_NEAR(mc.mean, series.series_value, 4 * mc.se);
}

TEST(MonteCarloDuration, WorkerIndependent) {
  const auto d = OffspringDistribution::poisson(1.2);
  const auto a = monte_carlo_duration(d, {0.3, 0.2}, 10, 4000, 8, 1);
  const auto b = monte_carlo_duration(d, {0.3, 0.2}, 10, 4000, 8, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.resolved, b.resolved);
}
