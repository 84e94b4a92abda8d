#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "percgames/errors.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/offspring.hpp"

namespace percgames {

enum class VerdictSource { closed_form, numeric_uniqueness };

inline const char* to_string(VerdictSource s) {
  return s == VerdictSource::closed_form ? "closed_form" : "numeric_uniqueness";
}

struct PhaseVerdict {
  bool draw_free = false;
  double margin = 0.0;  // RHS - LHS of the family's threshold inequality
  bool boundary_indeterminate = false;
  VerdictSource source = VerdictSource::closed_form;
};

// Closed-form verdicts within this distance of the threshold are not trusted
// for cross-validation.
inline constexpr double kBoundaryBand = 1e-4;

namespace detail {

// Threshold inequality LHS <= RHS kept as logarithms; log_lhs = -inf encodes LHS = 0.
struct Threshold {
  double log_lhs;
  double log_rhs;
};

inline double log_regular_rhs(int d) {
  // (d+1)^{d-1} / d^d
  return (d - 1) * std::log(d + 1.0) - d * std::log(static_cast<double>(d));
}

inline Threshold threshold(const OffspringDistribution& dist, ParamPair params) {
  const double p = params.p, q = params.q;
  const double log_safe = std::log(params.safe());
  return std::visit(
      [&](const auto& law) -> Threshold {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Binomial>) {
          const int d = law.d;
          return {log_safe + std::log(law.pi) + (d - 1) * std::log1p(-law.pi * q),
                  log_regular_rhs(d)};
        } else if constexpr (std::is_same_v<T, Dirac>) {
          const int d = law.d;
          return {log_safe + (d - 1) * std::log1p(-q), log_regular_rhs(d)};
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return {log_safe + std::log(law.lambda) - law.lambda * q, 1.0};
        } else if constexpr (std::is_same_v<T, NegativeBinomial> || std::is_same_v<T, Geometric>) {
          int r = 1;
          if constexpr (std::is_same_v<T, NegativeBinomial>) r = law.r;
          const double pi = law.pi;
          const double log_rhs = (r + 1) * std::log(q + pi - q * pi) + r * std::log(r);
          if (r == 1) return {-std::numeric_limits<double>::infinity(), log_rhs};
          return {(r + 1) * std::log(r - 1.0) + std::log1p(-pi) + log_safe + r * std::log(pi),
                  log_rhs};
        } else if constexpr (std::is_same_v<T, ZeroOrD>) {
          const int d = law.d;
          const double pi = law.pi;
          return {log_safe + std::log(pi) + (d - 1) * std::log(pi * (1.0 - q) + p * (1.0 - pi)),
                  log_regular_rhs(d)};
        } else {
          throw NoClosedForm(
              "no closed-form threshold for finite-support laws; use the numeric uniqueness test");
        }
      },
      dist.law());
}

}  // namespace detail

// Draw probability is zero iff the family's threshold inequality holds.
// Geometric (and negbin with r = 1) is draw-free everywhere in I.
inline PhaseVerdict closed_form_draw_free(const OffspringDistribution& dist, ParamPair params) {
  const auto t = detail::threshold(dist, params);
  PhaseVerdict v;
  v.source = VerdictSource::closed_form;
  v.draw_free = t.log_lhs <= t.log_rhs;
  v.margin = std::exp(t.log_rhs) - std::exp(t.log_lhs);
  v.boundary_indeterminate = std::abs(v.margin) < kBoundaryBand;
  return v;
}

// Maximiser of d/dx g^(2)(x) over the generating-function domain (the
// inflection point of g^(2)).
inline double x_critical(const OffspringDistribution& dist, ParamPair params) {
  const double p = params.p, q = params.q, s = params.safe();
  return std::visit(
      [&](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Binomial>) {
          const double pi = law.pi;
          const int d = law.d;
          const double a = (1.0 - pi * q) / ((d + 1) * pi * s);
          return std::pow(a, 1.0 / d) / pi + 1.0 - 1.0 / pi;
        } else if constexpr (std::is_same_v<T, Dirac>) {
          if (law.d == 1) throw NoCriticalPoint("dirac:d=1 makes g^(2) linear; no critical point");
          const int d = law.d;
          return std::pow((1.0 - q) / ((d + 1) * s), 1.0 / d);
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return 1.0 - std::log(law.lambda) / law.lambda - std::log(s) / law.lambda;
        } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
          if (law.r == 1) throw NoCriticalPoint("negbin with r = 1 has no critical point");
          const double pi = law.pi;
          const int r = law.r;
          const double inner =
              std::pow((r - 1) * (1.0 - pi) * s / (q + pi - q * pi), 1.0 / r) * pi;
          const double x = (1.0 - inner) / (1.0 - pi);
          const double upper = dist.domain_upper();
          return std::clamp(x, 0.0, std::nextafter(upper, 0.0));
        } else if constexpr (std::is_same_v<T, Geometric>) {
          throw NoCriticalPoint("geometric law has no critical point");
        } else if constexpr (std::is_same_v<T, ZeroOrD>) {
          const double pi = law.pi;
          const int d = law.d;
          return std::pow((pi * (1.0 - q) + p * (1.0 - pi)) / (s * pi * (d + 1)), 1.0 / d);
        } else {
          throw NoClosedForm("no critical-point formula for finite-support laws");
        }
      },
      dist.law());
}

// d/dx g^(2) at the critical point; <= 1 exactly when the threshold holds.
inline double max_derivative_criterion(const OffspringDistribution& dist, ParamPair params) {
  return g2_derivative_continued(dist, params, x_critical(dist, params));
}

struct TechniqueInequalities {
  bool g2_at_xc_leq_xc = false;
  bool g_at_xc_gt_xc = false;
  double x_critical = 0.0;
  double g_at_xc = 0.0;
  double g2_at_xc = 0.0;
};

// Compares g^(2)(x_c) with x_c (holds throughout I) and g(x_c) with x_c
// (exceeds x_c exactly when the threshold fails). Equality in the first is
// attained on the phase boundary, so it is tested with 1e-12 slack.
inline TechniqueInequalities technique_inequalities(const OffspringDistribution& dist,
                                                    ParamPair params) {
  TechniqueInequalities t;
  t.x_critical = x_critical(dist, params);
  t.g_at_xc = g_continued(dist, params, t.x_critical);
  t.g2_at_xc = g_continued(dist, params, t.g_at_xc);
  const double slack = 1e-12 * std::max(1.0, std::abs(t.x_critical));
  t.g2_at_xc_leq_xc = t.g2_at_xc <= t.x_critical + slack;
  t.g_at_xc_gt_xc = t.g_at_xc > t.x_critical;
  return t;
}

// Numeric verdict: draw-free iff g^(2) has a single fixed point in [0, 1].
inline PhaseVerdict numeric_draw_free(const OffspringDistribution& dist, ParamPair params,
                                      const Tolerances& tol = {}) {
  const auto roots = find_all_g2_fixed_points(dist, params, tol.grid_size, tol.root);
  PhaseVerdict v;
  v.source = VerdictSource::numeric_uniqueness;
  v.draw_free = roots.size() == 1;
  v.margin = std::numeric_limits<double>::quiet_NaN();
  return v;
}

struct CrossValidation {
  std::optional<PhaseVerdict> closed_form;  // empty for finite-support laws
  PhaseVerdict numeric;
  std::size_t root_count = 0;
  bool skipped = false;  // closed-form margin inside the boundary band
  bool agree = true;
};

inline CrossValidation cross_validate(const OffspringDistribution& dist, ParamPair params,
                                      const Tolerances& tol = {}) {
  CrossValidation cv;
  const auto roots = find_all_g2_fixed_points(dist, params, tol.grid_size, tol.root);
  cv.root_count = roots.size();
  cv.numeric.source = VerdictSource::numeric_uniqueness;
  cv.numeric.draw_free = roots.size() == 1;
  cv.numeric.margin = std::numeric_limits<double>::quiet_NaN();
  if (!dist.is<FiniteSupport>()) {
    cv.closed_form = closed_form_draw_free(dist, params);
    cv.skipped = cv.closed_form->boundary_indeterminate;
    cv.agree = cv.skipped || cv.closed_form->draw_free == cv.numeric.draw_free;
  } else {
    cv.skipped = true;
  }
  return cv;
}

// Inclusive linear axis: `steps` points from lo to hi.
struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;

  double at(int i) const { return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1); }
};

struct GridSpec {
  Axis p;
  Axis q;

  // "p_min,p_max,steps x q_min,q_max,steps" (the separator is 'x').
  static GridSpec parse(std::string_view text) {
    const auto sep = text.find('x');
    if (sep == std::string_view::npos) {
      throw InvalidParameters("grid must look like p_min,p_max,steps x q_min,q_max,steps");
    }
    auto axis = [](std::string_view part, const char* name) {
      while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
      while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
      const auto fields = detail::split(part, ',');
      if (fields.size() != 3) {
        throw InvalidParameters(std::string(name) + " axis needs min,max,steps");
      }
      Axis a{detail::parse_double(fields[0], "grid min"), detail::parse_double(fields[1], "grid max"),
             detail::parse_int(fields[2], "grid steps")};
      if (a.steps < 1) throw InvalidParameters("grid steps must be >= 1");
      return a;
    };
    return GridSpec{axis(text.substr(0, sep), "p"), axis(text.substr(sep + 1), "q")};
  }
};

struct PhaseGridRow {
  double p = 0.0;
  double q = 0.0;
  CrossValidation cv;
};

struct PhaseGridResult {
  std::vector<PhaseGridRow> rows;
  std::int64_t skipped_outside_I = 0;
  std::int64_t compared = 0;  // rows with a closed form, outside the boundary band
  std::int64_t agreements = 0;
  std::int64_t boundary_cells = 0;

  double agreement_percent() const {
    return compared == 0 ? 100.0 : 100.0 * static_cast<double>(agreements) / compared;
  }
  bool all_agree() const { return agreements == compared; }
};

inline PhaseGridResult phase_grid(const OffspringDistribution& dist, const GridSpec& grid,
                                  const Tolerances& tol = {}) {
  PhaseGridResult out;
  for (int i = 0; i < grid.p.steps; ++i) {
    for (int j = 0; j < grid.q.steps; ++j) {
      const double p = grid.p.at(i), q = grid.q.at(j);
      if (!ParamPair::admissible(p, q)) {
        ++out.skipped_outside_I;
        continue;
      }
      PhaseGridRow row{p, q, cross_validate(dist, ParamPair{p, q}, tol)};
      if (row.cv.closed_form) {
        if (row.cv.skipped) {
          ++out.boundary_cells;
        } else {
          ++out.compared;
          if (row.cv.agree) ++out.agreements;
        }
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace percgames
