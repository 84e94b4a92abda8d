#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include "percgames/errors.hpp"
#include "percgames/random.hpp"

namespace percgames {

struct Binomial {
  int d;
  double pi;
};
struct Poisson {
  double lambda;
};
// Number of failures before the r-th success, success probability pi.
struct NegativeBinomial {
  int r;
  double pi;
};
// Number of failures before the first success; same law as NegativeBinomial{1, pi}.
struct Geometric {
  double pi;
};
// chi(0) = 1 - pi, chi(d) = pi.
struct ZeroOrD {
  int d;
  double pi;
};
struct Dirac {
  int d;
};
struct FiniteSupport {
  std::vector<double> masses;      // masses[m] = chi(m)
  std::vector<double> cumulative;  // running sums, last entry forced to 1
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InvalidParameters("cannot parse " + std::string(what) + " value '" + std::string(s) +
                            "'");
  }
  return v;
}

inline int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InvalidParameters("cannot parse integer " + std::string(what) + " value '" +
                            std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// Offspring law chi of a Galton-Watson tree. Construction validates the
// family parameters and the standing assumption chi(0) < 1.
class OffspringDistribution {
 public:
  using Law = std::variant<Binomial, Poisson, NegativeBinomial, Geometric, ZeroOrD, Dirac,
                           FiniteSupport>;

  static OffspringDistribution binomial(int d, double pi) {
    if (d < 2) throw InvalidParameters("binomial: d must be >= 2");
    if (!(pi > 0.0 && pi <= 1.0)) throw InvalidParameters("binomial: pi must lie in (0, 1]");
    return OffspringDistribution(Binomial{d, pi});
  }
  static OffspringDistribution poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw InvalidParameters("poisson: lambda must be > 0");
    }
    return OffspringDistribution(Poisson{lambda});
  }
  // pi = 1 would put all mass at 0, which the games exclude.
  static OffspringDistribution negative_binomial(int r, double pi) {
    if (r < 1) throw InvalidParameters("negbin: r must be >= 1");
    if (!(pi > 0.0 && pi < 1.0)) throw InvalidParameters("negbin: pi must lie in (0, 1)");
    return OffspringDistribution(NegativeBinomial{r, pi});
  }
  static OffspringDistribution geometric(double pi) {
    if (!(pi > 0.0 && pi < 1.0)) throw InvalidParameters("geometric: pi must lie in (0, 1)");
    return OffspringDistribution(Geometric{pi});
  }
  static OffspringDistribution zero_or_d(int d, double pi) {
    if (d < 2) throw InvalidParameters("zerod: d must be >= 2");
    if (!(pi > 0.0 && pi < 1.0)) throw InvalidParameters("zerod: pi must lie in (0, 1)");
    return OffspringDistribution(ZeroOrD{d, pi});
  }
  static OffspringDistribution dirac(int d) {
    if (d < 1) throw InvalidParameters("dirac: d must be >= 1");
    return OffspringDistribution(Dirac{d});
  }
  static OffspringDistribution finite(std::vector<double> masses) {
    if (masses.empty()) throw InvalidParameters("finite: at least one mass required");
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) {
        throw InvalidParameters("finite: masses must be non-negative");
      }
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidParameters("finite: masses must sum to 1");
    if (!(masses[0] < 1.0)) throw InvalidParameters("finite: chi(0) must be < 1");
    while (masses.size() > 1 && masses.back() == 0.0) masses.pop_back();
    std::vector<double> cumulative(masses.size());
    std::partial_sum(masses.begin(), masses.end(), cumulative.begin());
    cumulative.back() = 1.0;
    return OffspringDistribution(FiniteSupport{std::move(masses), std::move(cumulative)});
  }

  // Parses `family:key=value,...`, e.g. `binomial:d=3,pi=0.5` or `finite:0.2,0.3,0.5`.
  static OffspringDistribution parse(std::string_view text);

  const Law& law() const noexcept { return law_; }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(law_);
  }

  // Canonical spec string; parse(spec()) reproduces the distribution.
  std::string spec() const;

  double mass_at_zero() const { return pgf(0.0); }
  double mean() const { return pgf_derivative(1.0); }

  // Supremum of the evaluation domain: 1/(1 - pi) for the negative binomial
  // family (excluded), +inf otherwise.
  double domain_upper() const noexcept {
    return std::visit(
        [](const auto& law) -> double {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, NegativeBinomial> || std::is_same_v<T, Geometric>) {
            return 1.0 / (1.0 - law.pi);
          } else {
            return std::numeric_limits<double>::infinity();
          }
        },
        law_);
  }

  bool in_domain(double x) const noexcept { return x >= 0.0 && x < domain_upper(); }

  // G(x) on the evaluation domain; throws DomainError outside it.
  double pgf(double x) const {
    check_domain(x);
    return pgf_continued(x);
  }

  double pgf_derivative(double x) const {
    check_domain(x);
    return pgf_derivative_continued(x);
  }

  // Closed-form continuation of G to x < 0 (entire families and the
  // negative-binomial rational form). Used where the inflection analysis
  // evaluates g at points whose image falls below zero.
  double pgf_continued(double x) const {
    if (std::isnan(x) || !(x < domain_upper())) {
      throw DomainError("pgf argument " + detail::format_double(x) + " outside domain");
    }
    return std::visit(
        [x](const auto& law) -> double {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, Binomial>) {
            return std::pow(law.pi * x + (1.0 - law.pi), law.d);
          } else if constexpr (std::is_same_v<T, Poisson>) {
            return std::exp(law.lambda * (x - 1.0));
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            return std::pow(law.pi / (1.0 - (1.0 - law.pi) * x), law.r);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return law.pi / (1.0 - (1.0 - law.pi) * x);
          } else if constexpr (std::is_same_v<T, ZeroOrD>) {
            return (1.0 - law.pi) + law.pi * std::pow(x, law.d);
          } else if constexpr (std::is_same_v<T, Dirac>) {
            return std::pow(x, law.d);
          } else {
            // Horner
            double acc = 0.0;
            for (auto it = law.masses.rbegin(); it != law.masses.rend(); ++it) acc = acc * x + *it;
            return acc;
          }
        },
        law_);
  }

  double pgf_derivative_continued(double x) const {
    if (std::isnan(x) || !(x < domain_upper())) {
      throw DomainError("pgf argument " + detail::format_double(x) + " outside domain");
    }
    return std::visit(
        [x](const auto& law) -> double {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, Binomial>) {
            return law.d * law.pi * std::pow(law.pi * x + (1.0 - law.pi), law.d - 1);
          } else if constexpr (std::is_same_v<T, Poisson>) {
            return law.lambda * std::exp(law.lambda * (x - 1.0));
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            const double base = 1.0 - (1.0 - law.pi) * x;
            return law.r * (1.0 - law.pi) * std::pow(law.pi, law.r) / std::pow(base, law.r + 1);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            const double base = 1.0 - (1.0 - law.pi) * x;
            return law.pi * (1.0 - law.pi) / (base * base);
          } else if constexpr (std::is_same_v<T, ZeroOrD>) {
            return law.d * law.pi * std::pow(x, law.d - 1);
          } else if constexpr (std::is_same_v<T, Dirac>) {
            return law.d * std::pow(x, law.d - 1);
          } else {
            double acc = 0.0;
            const auto k = law.masses.size();
            for (std::size_t m = k; m-- > 1;) acc = acc * x + static_cast<double>(m) * law.masses[m];
            return acc;
          }
        },
        law_);
  }

  int sample(Stream& rng) const {
    return std::visit(
        [&rng](const auto& law) -> int {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, Binomial>) {
            return std::binomial_distribution<int>(law.d, law.pi)(rng);
          } else if constexpr (std::is_same_v<T, Poisson>) {
            return std::poisson_distribution<int>(law.lambda)(rng);
          } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
            return std::negative_binomial_distribution<int>(law.r, law.pi)(rng);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return std::geometric_distribution<int>(law.pi)(rng);
          } else if constexpr (std::is_same_v<T, ZeroOrD>) {
            return uniform01(rng) < law.pi ? law.d : 0;
          } else if constexpr (std::is_same_v<T, Dirac>) {
            return law.d;
          } else {
            const double u = uniform01(rng);
            const auto it = std::upper_bound(law.cumulative.begin(), law.cumulative.end(), u);
            const auto m = std::distance(law.cumulative.begin(), it);
            return static_cast<int>(std::min<std::ptrdiff_t>(m, law.cumulative.size() - 1));
          }
        },
        law_);
  }

 private:
  explicit OffspringDistribution(Law law) : law_(std::move(law)) {}

  void check_domain(double x) const {
    if (!in_domain(x)) {
      throw DomainError("pgf argument " + detail::format_double(x) + " outside domain [0, " +
                        detail::format_double(domain_upper()) + ")");
    }
  }

  Law law_;
};

inline double pgf(const OffspringDistribution& dist, double x) { return dist.pgf(x); }

inline double pgf_derivative(const OffspringDistribution& dist, double x) {
  return dist.pgf_derivative(x);
}

inline int sample_offspring(const OffspringDistribution& dist, Stream& rng) {
  return dist.sample(rng);
}

inline std::string OffspringDistribution::spec() const {
  using detail::format_double;
  return std::visit(
      [](const auto& law) -> std::string {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Binomial>) {
          return "binomial:d=" + std::to_string(law.d) + ",pi=" + format_double(law.pi);
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return "poisson:lambda=" + format_double(law.lambda);
        } else if constexpr (std::is_same_v<T, NegativeBinomial>) {
          return "negbin:r=" + std::to_string(law.r) + ",pi=" + format_double(law.pi);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return "geometric:pi=" + format_double(law.pi);
        } else if constexpr (std::is_same_v<T, ZeroOrD>) {
          return "zerod:d=" + std::to_string(law.d) + ",pi=" + format_double(law.pi);
        } else if constexpr (std::is_same_v<T, Dirac>) {
          return "dirac:d=" + std::to_string(law.d);
        } else {
          std::string out = "finite:";
          for (std::size_t i = 0; i < law.masses.size(); ++i) {
            if (i > 0) out += ',';
            out += format_double(law.masses[i]);
          }
          return out;
        }
      },
      law_);
}

inline OffspringDistribution OffspringDistribution::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidParameters("distribution spec '" + std::string(text) +
                            "' must look like family:key=value,...");
  }
  const std::string_view family = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);

  if (family == "finite") {
    std::vector<double> masses;
    for (auto tok : detail::split(body, ',')) masses.push_back(detail::parse_double(tok, "mass"));
    return finite(std::move(masses));
  }

  std::map<std::string, std::string, std::less<>> kv;
  for (auto tok : detail::split(body, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidParameters("expected key=value in '" + std::string(tok) + "'");
    }
    kv.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  auto take = [&](std::string_view key) -> std::string {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw InvalidParameters(std::string(family) + ": missing parameter '" + std::string(key) +
                              "'");
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto done = [&](OffspringDistribution d) {
    if (!kv.empty()) {
      throw InvalidParameters(std::string(family) + ": unknown parameter '" + kv.begin()->first +
                              "'");
    }
    return d;
  };

  if (family == "binomial") {
    const int d = detail::parse_int(take("d"), "d");
    return done(binomial(d, detail::parse_double(take("pi"), "pi")));
  }
  if (family == "poisson") return done(poisson(detail::parse_double(take("lambda"), "lambda")));
  if (family == "negbin") {
    const int r = detail::parse_int(take("r"), "r");
    return done(negative_binomial(r, detail::parse_double(take("pi"), "pi")));
  }
  if (family == "geometric") return done(geometric(detail::parse_double(take("pi"), "pi")));
  if (family == "zerod") {
    const int d = detail::parse_int(take("d"), "d");
    return done(zero_or_d(d, detail::parse_double(take("pi"), "pi")));
  }
  if (family == "dirac") return done(dirac(detail::parse_int(take("d"), "d")));
  throw InvalidParameters("unknown distribution family '" + std::string(family) + "'");
}

}  // namespace percgames
