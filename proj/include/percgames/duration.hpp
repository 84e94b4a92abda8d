#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "percgames/engine.hpp"
#include "percgames/errors.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/offspring.hpp"
#include "percgames/random.hpp"

namespace percgames {

enum class SeriesStatus { converged, indeterminate };

inline const char* to_string(SeriesStatus s) {
  return s == SeriesStatus::converged ? "converged" : "indeterminate";
}

struct DurationReport {
  SeriesStatus status = SeriesStatus::converged;
  double series_value = 0.0;  // NaN unless converged
  std::int64_t terms_used = 0;
  double tail_bound = 0.0;
  double derivative_g2_at_wprime = 0.0;
  double derivative_g_at_wprime_abs = 0.0;
  bool criterion_met = false;
  double w_prime = 0.0;
};

inline constexpr double kTailSafety = 1.05;

// E[T] = sum_{n >= 0} P(T >= n + 1) = 1 + sum_{n >= 1} (1 - w_n - l_n), where
// the root is still undecided after n rounds with probability 1 - w_n - l_n.
// Terms shrink geometrically with ratio rho = max((g^2)'(w'), |g'(w')|) when
// rho < 1; summation stops once the term falls below tol (1 - rho) / rho.
inline DurationReport expected_duration_series(const OffspringDistribution& dist,
                                               ParamPair params, double tol = 1e-10,
                                               const Tolerances& tols = {}) {
  if (!(tol > 0.0)) throw InvalidParameters("series tolerance must be positive");
  const FixedPointReport fp = analyze(dist, params, tols);
  if (fp.bond.draw > tols.verdict) {
    throw DrawRegimeError("duration undefined under optimal-draw play: draw probability " +
                          detail::format_double(fp.bond.draw) + " > 0");
  }
  DurationReport r;
  r.w_prime = fp.w_prime;
  r.derivative_g2_at_wprime = g2_derivative(dist, params, fp.w_prime);
  r.derivative_g_at_wprime_abs = std::abs(g_derivative(dist, params, fp.w_prime));
  r.criterion_met = r.derivative_g2_at_wprime < 1.0 && r.derivative_g_at_wprime_abs < 1.0;
  const double rho = std::max(r.derivative_g2_at_wprime, r.derivative_g_at_wprime_abs);
  const double stop = rho < 1.0 ? (rho > 0.0 ? tol * (1.0 - rho) / rho : tol) : tol;

  const double s = params.safe();
  double w = 0.0, l = 0.0;
  double sum = 1.0;
  double prev_term = 1.0;
  std::int64_t n = 0;
  while (n < tols.max_iterations) {
    const double w_next = 1.0 - dist.pgf((1.0 - params.q) - s * l);
    const double l_next = dist.pgf(params.p + s * w);
    w = w_next;
    l = l_next;
    ++n;
    const double term = std::max(0.0, 1.0 - w - l);
    sum += term;
    const double ratio = prev_term > 0.0 ? term / prev_term : 0.0;
    prev_term = term;
    if (term < stop) {
      const double rho_eff = std::max(rho < 1.0 ? rho : 0.0, ratio);
      r.terms_used = n;
      if (rho_eff < 1.0) {
        r.series_value = sum;
        r.tail_bound = kTailSafety * term * rho_eff / (1.0 - rho_eff);
        r.status = rho < 1.0 ? SeriesStatus::converged : SeriesStatus::indeterminate;
      } else {
        r.status = SeriesStatus::indeterminate;
        r.series_value = std::numeric_limits<double>::quiet_NaN();
        r.tail_bound = std::numeric_limits<double>::infinity();
      }
      return r;
    }
  }
  r.status = SeriesStatus::indeterminate;
  r.terms_used = n;
  r.series_value = std::numeric_limits<double>::quiet_NaN();
  r.tail_bound = std::numeric_limits<double>::infinity();
  return r;
}

// Optimal-play durations for every vertex of a bond-labeled tree; -1 where the
// game is undecided within the horizon. The winner picks the quickest win, the
// loser the longest loss. A player stuck at a childless vertex loses in that
// round, which counts as played.
inline std::vector<std::int64_t> optimal_durations(const LabeledTree& tree,
                                                   const Classification& states) {
  std::vector<std::int64_t> dur(states.size(), -1);
  for (std::int64_t v = tree.size() - 1; v >= 0; --v) {
    const State sv = states[static_cast<std::size_t>(v)];
    if (sv == State::D) continue;
    const std::int64_t c0 = tree.first_child[v];
    const std::int64_t m = tree.child_count[v];
    if (sv == State::W) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (std::int64_t c = c0; c < c0 + m; ++c) {
        if (tree.label[c] == Label::Target) best = std::min<std::int64_t>(best, 1);
        else if (tree.label[c] == Label::Safe && states[c] == State::L) best = std::min(best, 1 + dur[c]);
      }
      dur[v] = best;
    } else {
      std::int64_t worst = 1;
      for (std::int64_t c = c0; c < c0 + m; ++c) {
        if (tree.label[c] == Label::Safe) worst = std::max(worst, 1 + dur[c]);
      }
      dur[v] = worst;
    }
  }
  return dur;
}

struct DurationEstimate {
  std::int64_t replicates = 0;
  std::int64_t resolved = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();  // over resolved games
  double se = std::numeric_limits<double>::quiet_NaN();
  double unresolved_fraction = 0.0;
};

inline DurationEstimate monte_carlo_duration(const OffspringDistribution& dist, ParamPair params,
                                             int depth, std::int64_t replicates,
                                             std::uint64_t seed, unsigned workers = 1,
                                             std::int64_t max_vertices = kDefaultMaxVertices) {
  if (replicates < 1) throw InvalidParameters("replicates must be >= 1");
  struct Acc {
    std::int64_t resolved = 0;
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
  };
  const Acc a = parallel_replicates(
      replicates, workers, seed, Acc{},
      [&](Acc& acc, Stream& rng, std::int64_t) {
        const LabeledTree t = sample_labeled_tree(dist, params, Mode::bond, depth, rng, max_vertices);
        const auto states = classify_bond(t);
        if (states[0] == State::D) return;
        const std::int64_t d0 = optimal_durations(t, states)[0];
        ++acc.resolved;
        acc.sum += d0;
        acc.sum_sq += d0 * d0;
      },
      [](Acc& into, const Acc& from) {
        into.resolved += from.resolved;
        into.sum += from.sum;
        into.sum_sq += from.sum_sq;
      });
  DurationEstimate e;
  e.replicates = replicates;
  e.resolved = a.resolved;
  e.unresolved_fraction = static_cast<double>(replicates - a.resolved) / replicates;
  if (a.resolved > 0) {
    const double n = static_cast<double>(a.resolved);
    e.mean = a.sum / n;
    const double var = a.resolved > 1 ? (a.sum_sq - n * e.mean * e.mean) / (n - 1.0) : 0.0;
    e.se = std::sqrt(std::max(0.0, var) / n);
  }
  return e;
}

}  // namespace percgames
