#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "percgames/errors.hpp"
#include "percgames/offspring.hpp"

namespace percgames {

// Trap probability p and target probability q, restricted to 0 < p + q < 1.
struct ParamPair {
  double p = 0.0;
  double q = 0.0;

  static bool admissible(double p, double q) noexcept {
    return p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0 && p + q > 0.0 && p + q < 1.0;
  }

  static ParamPair make(double p, double q) {
    if (!admissible(p, q)) {
      throw InvalidParameters("(p, q) = (" + detail::format_double(p) + ", " +
                              detail::format_double(q) +
                              ") is outside I = {(p, q) in [0,1]^2 : 0 < p + q < 1}");
    }
    return ParamPair{p, q};
  }

  // Probability of a safe label.
  double safe() const noexcept { return 1.0 - p - q; }
};

struct Tolerances {
  double root = 1e-12;     // bisection width
  double verdict = 1e-8;   // draw-zero / uniqueness classification
  int grid_size = 10'000;  // uniform scan of [0, 1]
  std::int64_t max_iterations = 1'000'000;
};

// g(x) = (1 - q) - (1 - p - q) G(x), defined for x in [0, 1].
inline double g(const OffspringDistribution& dist, ParamPair params, double x) {
  return (1.0 - params.q) - params.safe() * dist.pgf(x);
}

inline double g2(const OffspringDistribution& dist, ParamPair params, double x) {
  return g(dist, params, g(dist, params, x));
}

inline double g_derivative(const OffspringDistribution& dist, ParamPair params, double x) {
  return -params.safe() * dist.pgf_derivative(x);
}

inline double g2_derivative(const OffspringDistribution& dist, ParamPair params, double x) {
  return g_derivative(dist, params, g(dist, params, x)) * g_derivative(dist, params, x);
}

// Same maps on the continued domain of G (arguments may leave [0, 1]).
inline double g_continued(const OffspringDistribution& dist, ParamPair params, double x) {
  return (1.0 - params.q) - params.safe() * dist.pgf_continued(x);
}

inline double g2_continued(const OffspringDistribution& dist, ParamPair params, double x) {
  return g_continued(dist, params, g_continued(dist, params, x));
}

inline double g2_derivative_continued(const OffspringDistribution& dist, ParamPair params,
                                      double x) {
  const double inner = g_continued(dist, params, x);
  return params.safe() * params.safe() * dist.pgf_derivative_continued(inner) *
         dist.pgf_derivative_continued(x);
}

namespace detail {

// Root of a continuous f on [lo, hi] with f(lo) > 0 >= f(hi). Returns the
// midpoint of the final bracket, which has width <= tol.
template <class F>
double bisect_decreasing(F&& f, double lo, double hi, double tol) {
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <class F>
double bisect_sign_change(F&& f, double lo, double hi, double tol) {
  if (f(lo) > 0.0) return bisect_decreasing(f, lo, hi, tol);
  return bisect_decreasing([&](double x) { return -f(x); }, lo, hi, tol);
}

// Golden-section minimisation of a unimodal-ish function on [lo, hi].
template <class F>
double golden_minimize(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline std::vector<double> merge_roots(std::vector<double> roots, double radius) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> merged;
  for (double r : roots) {
    if (merged.empty() || r - merged.back() >= radius) merged.push_back(r);
  }
  return merged;
}

}  // namespace detail

// Unique fixed point alpha of g in [0, 1]; h(x) = g(x) - x is strictly
// decreasing with h(0) > 0 > h(1) = p - 1.
inline double find_alpha(const OffspringDistribution& dist, ParamPair params, double tol = 1e-12) {
  if (!(tol > 0.0)) throw InvalidParameters("tolerance must be positive");
  return detail::bisect_decreasing([&](double x) { return g(dist, params, x) - x; }, 0.0, 1.0,
                                   tol);
}

// Every fixed point of g^(2) on [0, 1]. Sign changes of g^(2)(x) - x on a
// uniform grid are bisected; grid points where |g^(2)(x) - x| < 1e-6 without a
// neighbouring sign change are rescanned ten times finer and, failing that,
// polished by minimising |g^(2)(x) - x| to catch tangential roots.
inline std::vector<double> find_all_g2_fixed_points(const OffspringDistribution& dist,
                                                    ParamPair params, int grid_size = 10'000,
                                                    double tol = 1e-12) {
  if (grid_size < 1000) throw InvalidParameters("grid_size must be >= 1000");
  if (!(tol > 0.0)) throw InvalidParameters("tolerance must be positive");
  auto h = [&](double x) { return g2(dist, params, x) - x; };

  const int n = grid_size;
  std::vector<double> xs(n + 1), hs(n + 1);
  for (int i = 0; i <= n; ++i) {
    xs[i] = static_cast<double>(i) / n;
    hs[i] = h(xs[i]);
  }
  auto changes = [](double a, double b) { return (a > 0.0) != (b > 0.0); };

  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    if (changes(hs[i], hs[i + 1])) {
      roots.push_back(detail::bisect_sign_change(h, xs[i], xs[i + 1], tol));
    }
  }

  constexpr double near_touch = 1e-6;
  constexpr double touch_accept = 1e-13;
  constexpr int refine = 10;
  std::vector<double> touches;
  for (int i = 1; i < n; ++i) {
    if (std::abs(hs[i]) >= near_touch) continue;
    if (changes(hs[i - 1], hs[i]) || changes(hs[i], hs[i + 1])) continue;
    const double lo = xs[i - 1], hi = xs[i + 1];
    bool found = false;
    double prev_x = lo, prev_h = hs[i - 1];
    for (int k = 1; k <= 2 * refine; ++k) {
      const double x = lo + (hi - lo) * k / (2 * refine);
      const double hx = h(x);
      if (changes(prev_h, hx)) {
        roots.push_back(detail::bisect_sign_change(h, prev_x, x, tol));
        found = true;
      }
      prev_x = x;
      prev_h = hx;
    }
    if (found) continue;
    const double x = detail::golden_minimize([&](double t) { return std::abs(h(t)); }, lo, hi, tol);
    if (std::abs(h(x)) <= touch_accept) touches.push_back(x);
  }
  // A touch within one grid cell of a crossing is that crossing seen from the side.
  const double spacing = 1.0 / n;
  touches = detail::merge_roots(std::move(touches), spacing);
  for (double t : touches) {
    const bool near_crossing = std::any_of(roots.begin(), roots.end(),
                                           [&](double r) { return std::abs(r - t) <= spacing; });
    if (!near_crossing) roots.push_back(t);
  }

  roots = detail::merge_roots(std::move(roots), 10.0 * tol);
  if (roots.empty()) {
    // Cannot happen for admissible parameters (h(0) > 0 > h(1)).
    throw NumericError("no fixed point of g^(2) found on [0, 1]");
  }
  return roots;
}

struct IterationResult {
  double value = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
};

// w'_0 = p, w'_{k+1} = g^(2)(w'_k); nondecreasing, converges to the minimum
// positive fixed point of g^(2).
inline IterationResult iterate_w_prime(const OffspringDistribution& dist, ParamPair params,
                                       double tol = 1e-12,
                                       std::int64_t max_iterations = 1'000'000) {
  IterationResult out{params.p, 0, false};
  for (std::int64_t k = 0; k < max_iterations; ++k) {
    const double next = g2(dist, params, out.value);
    out.iterations = k + 1;
    const double step = std::abs(next - out.value);
    out.value = next;
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

namespace detail {

// Scanned roots with alpha substituted for whichever root lies within the
// merge radius of it (alpha is a fixed point of g^(2) by construction).
inline std::vector<double> roots_with_alpha(const std::vector<double>& roots, double alpha,
                                            double tol) {
  std::vector<double> out = roots;
  for (double& r : out) {
    if (std::abs(r - alpha) < 10.0 * tol) r = alpha;
  }
  return out;
}

}  // namespace detail

inline double min_positive_g2_fixed_point(const OffspringDistribution& dist, ParamPair params,
                                          double tol = 1e-12, int grid_size = 10'000) {
  const auto roots = find_all_g2_fixed_points(dist, params, grid_size, tol);
  const double alpha = find_alpha(dist, params, tol);
  return std::min(detail::roots_with_alpha(roots, alpha, tol).front(), alpha);
}

// (win, lose, draw) for the player who moves first.
struct OutcomeTriple {
  double win = 0.0;
  double lose = 0.0;
  double draw = 0.0;
};

namespace detail {

inline double checked_probability(double v, const char* what) {
  if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
    throw NumericError(std::string(what) + " probability " + format_double(v) +
                       " outside [0, 1]");
  }
  return std::clamp(v, 0.0, 1.0);
}

inline OutcomeTriple bond_outcome_from_w_prime(const OffspringDistribution& dist,
                                               ParamPair params, double w_prime) {
  const double s = params.safe();
  const double win = checked_probability((w_prime - params.p) / s, "win");
  const double lose = checked_probability(((1.0 - params.q) - g(dist, params, w_prime)) / s,
                                          "lose");
  const double draw = checked_probability(1.0 - win - lose, "draw");
  return {win, lose, draw};
}

inline OutcomeTriple site_outcome_from_w_prime(const OffspringDistribution& dist,
                                               ParamPair params, double w_prime) {
  const double win = checked_probability(w_prime, "win");
  const double lose = checked_probability(params.q + params.safe() * dist.pgf(w_prime), "lose");
  const double draw = checked_probability(1.0 - win - lose, "draw");
  return {win, lose, draw};
}

}  // namespace detail

// Bond game: w = (w' - p)/(1 - p - q), l = ((1 - q) - g(w'))/(1 - p - q).
inline OutcomeTriple outcome_probabilities(const OffspringDistribution& dist, ParamPair params,
                                           double tol = 1e-12) {
  return detail::bond_outcome_from_w_prime(dist, params,
                                           min_positive_g2_fixed_point(dist, params, tol));
}

// Site game: w~ = w', l~ = q + (1 - p - q) G(w~).
inline OutcomeTriple site_outcome_probabilities(const OffspringDistribution& dist,
                                                ParamPair params, double tol = 1e-12) {
  return detail::site_outcome_from_w_prime(dist, params,
                                           min_positive_g2_fixed_point(dist, params, tol));
}

struct FixedPointReport {
  double alpha = 0.0;
  double w_prime = 0.0;
  std::vector<double> all_g2_fixed_points;
  bool unique = false;
  double residual_alpha = 0.0;
  double residual_w_prime = 0.0;
  // Steps taken by the direct iteration w'_{k+1} = g^(2)(w'_k) from p.
  std::int64_t iterations_used = 0;
  bool iteration_converged = false;
  double iteration_value = 0.0;
  OutcomeTriple bond;
  OutcomeTriple site;
};

inline FixedPointReport analyze(const OffspringDistribution& dist, ParamPair params,
                                const Tolerances& tol = {}) {
  FixedPointReport r;
  r.alpha = find_alpha(dist, params, tol.root);
  r.all_g2_fixed_points = detail::roots_with_alpha(
      find_all_g2_fixed_points(dist, params, tol.grid_size, tol.root), r.alpha, tol.root);
  r.w_prime = std::min(r.all_g2_fixed_points.front(), r.alpha);
  r.unique = r.all_g2_fixed_points.size() == 1;
  r.residual_alpha = std::abs(g(dist, params, r.alpha) - r.alpha);
  r.residual_w_prime = std::abs(g2(dist, params, r.w_prime) - r.w_prime);
  const auto it = iterate_w_prime(dist, params, tol.root, tol.max_iterations);
  r.iterations_used = it.iterations;
  r.iteration_converged = it.converged;
  r.iteration_value = it.value;
  r.bond = detail::bond_outcome_from_w_prime(dist, params, r.w_prime);
  r.site = detail::site_outcome_from_w_prime(dist, params, r.w_prime);
  return r;
}

}  // namespace percgames
