#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percgames/engine.hpp"
#include "percgames/errors.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/random.hpp"

namespace percgames {

// Distribution over {W, L, D}, indexed by State.
using StateLaw = std::array<double, 3>;

inline double& at(StateLaw& law, State s) { return law[static_cast<int>(s)]; }
inline double at(const StateLaw& law, State s) { return law[static_cast<int>(s)]; }

inline constexpr std::int64_t kDefaultLevelCap = std::int64_t{1} << 26;

// Transition kernel of the automaton on the d-regular tree. A vertex with i
// children in L and j children in D becomes
//   W with probability 1 - p^i (1-q)^{d-i},
//   D with probability p^i (1-q)^{d-i} - p^{i+j} (1-q)^{d-i-j},
//   L with probability p^{i+j} (1-q)^{d-i-j}.
class UpdateMatrix {
 public:
  UpdateMatrix(int d, ParamPair params) : d_(d), params_(params) {
    if (d < 2) throw InvalidParameters("the automaton needs d >= 2");
    ParamPair::make(params.p, params.q);
    table_.resize(static_cast<std::size_t>((d + 1) * (d + 1)));
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; i + j <= d; ++j) {
        const double a = std::pow(params.p, i) * std::pow(1.0 - params.q, d - i);
        const double b = std::pow(params.p, i + j) * std::pow(1.0 - params.q, d - i - j);
        StateLaw& row = table_[index(i, j)];
        at(row, State::W) = 1.0 - a;
        at(row, State::D) = j == 0 ? 0.0 : a - b;
        at(row, State::L) = b;
      }
    }
  }

  int d() const { return d_; }
  ParamPair params() const { return params_; }

  const StateLaw& row(int i, int j) const {
    if (i < 0 || j < 0 || i + j > d_) {
      throw InvalidParameters("update index (i=" + std::to_string(i) + ", j=" + std::to_string(j) +
                              ") needs i, j >= 0 and i + j <= " + std::to_string(d_));
    }
    return table_[index(i, j)];
  }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * (d_ + 1) + j); }

  int d_;
  ParamPair params_;
  std::vector<StateLaw> table_;
};

struct UpdateProbs {
  double w = 0.0;
  double d = 0.0;
  double l = 0.0;
};

inline UpdateProbs update_probs(const UpdateMatrix& m, int i, int j) {
  const StateLaw& r = m.row(i, j);
  return {at(r, State::W), at(r, State::D), at(r, State::L)};
}

enum class BoundaryKind { all_L, all_W, all_D, iid, materialized };

inline const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::all_L: return "all_L";
    case BoundaryKind::all_W: return "all_W";
    case BoundaryKind::all_D: return "all_D";
    case BoundaryKind::iid: return "iid";
    default: return "materialized";
  }
}

// States assigned to the d^n vertices of level n.
struct BoundaryConfig {
  BoundaryKind kind = BoundaryKind::all_L;
  int level = 0;
  StateLaw mu{};               // iid only
  std::vector<State> states;   // materialized only

  static BoundaryConfig constant(State s, int level) {
    BoundaryConfig b;
    b.kind = s == State::W ? BoundaryKind::all_W
                           : s == State::L ? BoundaryKind::all_L : BoundaryKind::all_D;
    b.level = level;
    return b;
  }
  static BoundaryConfig all_L(int level) { return constant(State::L, level); }
  static BoundaryConfig all_W(int level) { return constant(State::W, level); }
  static BoundaryConfig all_D(int level) { return constant(State::D, level); }

  static BoundaryConfig iid(StateLaw mu, int level) {
    const double total = mu[0] + mu[1] + mu[2];
    if (mu[0] < 0 || mu[1] < 0 || mu[2] < 0 || std::abs(total - 1.0) > 1e-9) {
      throw InvalidParameters("iid boundary law must be a probability vector");
    }
    BoundaryConfig b;
    b.kind = BoundaryKind::iid;
    b.level = level;
    b.mu = mu;
    return b;
  }

  static BoundaryConfig materialized(int d, int level, std::vector<State> states) {
    const double expected = std::pow(static_cast<double>(d), level);
    if (static_cast<double>(states.size()) != expected) {
      throw InvalidParameters("materialized boundary needs d^n = " +
                              detail::format_double(expected) + " states");
    }
    BoundaryConfig b;
    b.kind = BoundaryKind::materialized;
    b.level = level;
    b.states = std::move(states);
    return b;
  }

  // Law shared by every boundary vertex; only for non-materialized configs.
  StateLaw vertex_law() const {
    StateLaw law{};
    switch (kind) {
      case BoundaryKind::all_W: at(law, State::W) = 1.0; break;
      case BoundaryKind::all_L: at(law, State::L) = 1.0; break;
      case BoundaryKind::all_D: at(law, State::D) = 1.0; break;
      case BoundaryKind::iid: law = mu; break;
      case BoundaryKind::materialized:
        throw InvalidParameters("materialized boundary has no common vertex law");
    }
    return law;
  }
};

namespace detail {

inline std::int64_t level_size(int d, int n, std::int64_t cap) {
  std::int64_t size = 1;
  for (int k = 0; k < n; ++k) {
    if (size > cap / d) {
      throw LevelCapExceeded("level " + std::to_string(n) + " of the " + std::to_string(d) +
                             "-regular tree exceeds " + std::to_string(cap) + " states");
    }
    size *= d;
  }
  return size;
}

inline State draw_state(const StateLaw& law, Stream& rng) {
  const double u = uniform01(rng);
  if (u < at(law, State::L)) return State::L;
  if (u < at(law, State::L) + at(law, State::D)) return State::D;
  return State::W;
}

// Overwrites the first size/d entries with the parents of buf[0, size).
// Parent v reads buf[d v, d v + d), all at or after v, so the update is in place.
inline void step_up(const UpdateMatrix& m, std::vector<State>& buf, std::int64_t size,
                    Stream& rng) {
  const int d = m.d();
  for (std::int64_t v = 0; v < size / d; ++v) {
    int i = 0, j = 0;
    for (int k = 0; k < d; ++k) {
      const State s = buf[static_cast<std::size_t>(d * v + k)];
      i += s == State::L;
      j += s == State::D;
    }
    buf[static_cast<std::size_t>(v)] = draw_state(m.row(i, j), rng);
  }
}

}  // namespace detail

// Law of one vertex whose d children are independent with the given laws.
inline StateLaw parent_law(const UpdateMatrix& m, std::span<const StateLaw> children) {
  const int d = m.d();
  if (static_cast<int>(children.size()) != d) {
    throw InvalidParameters("parent_law needs exactly d child laws");
  }
  // dist[i][j]: probability that i children are L and j are D so far.
  std::vector<double> dist(static_cast<std::size_t>((d + 1) * (d + 1)), 0.0);
  auto cell = [d](int i, int j) { return static_cast<std::size_t>(i * (d + 1) + j); };
  dist[cell(0, 0)] = 1.0;
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(dist.size(), 0.0);
    const StateLaw& c = children[static_cast<std::size_t>(k)];
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; i + j <= k; ++j) {
        const double mass = dist[cell(i, j)];
        if (mass == 0.0) continue;
        next[cell(i, j)] += mass * at(c, State::W);
        next[cell(i + 1, j)] += mass * at(c, State::L);
        next[cell(i, j + 1)] += mass * at(c, State::D);
      }
    }
    dist = std::move(next);
  }
  StateLaw out{};
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; i + j <= d; ++j) {
      const double mass = dist[cell(i, j)];
      const StateLaw& r = m.row(i, j);
      for (int s = 0; s < 3; ++s) out[static_cast<std::size_t>(s)] += mass * r[static_cast<std::size_t>(s)];
    }
  }
  return out;
}

inline StateLaw parent_law_iid(const UpdateMatrix& m, const StateLaw& child) {
  std::vector<StateLaw> children(static_cast<std::size_t>(m.d()), child);
  return parent_law(m, children);
}

// Per-vertex laws at `level` (0 <= level <= boundary.level). Vertices within a
// level have disjoint subtrees, hence are independent, so this is exact.
inline std::vector<StateLaw> level_laws(const UpdateMatrix& m, const BoundaryConfig& boundary,
                                        int level, std::int64_t level_cap = kDefaultLevelCap) {
  if (level < 0 || level > boundary.level) throw InvalidParameters("level outside [0, n]");
  const int d = m.d();
  if (boundary.kind != BoundaryKind::materialized) {
    StateLaw law = boundary.vertex_law();
    for (int k = boundary.level; k > level; --k) law = parent_law_iid(m, law);
    return std::vector<StateLaw>(static_cast<std::size_t>(detail::level_size(d, level, level_cap)),
                                 law);
  }
  detail::level_size(d, boundary.level, level_cap);
  std::vector<StateLaw> laws;
  laws.reserve(boundary.states.size());
  for (State s : boundary.states) {
    StateLaw law{};
    at(law, s) = 1.0;
    laws.push_back(law);
  }
  for (int k = boundary.level; k > level; --k) {
    std::vector<StateLaw> up(laws.size() / static_cast<std::size_t>(d));
    for (std::size_t v = 0; v < up.size(); ++v) {
      up[v] = parent_law(m, std::span<const StateLaw>(laws).subspan(v * d, static_cast<std::size_t>(d)));
    }
    laws = std::move(up);
  }
  return laws;
}

inline StateLaw exact_root_law(const UpdateMatrix& m, const BoundaryConfig& boundary,
                               std::int64_t level_cap = kDefaultLevelCap) {
  return level_laws(m, boundary, 0, level_cap).front();
}

// Draws every boundary state and applies the automaton level by level up to the
// root, holding one level in memory.
inline State propagate(const UpdateMatrix& m, const BoundaryConfig& boundary, Stream& rng,
                       std::int64_t level_cap = kDefaultLevelCap) {
  const std::int64_t size = detail::level_size(m.d(), boundary.level, level_cap);
  std::vector<State> buf;
  if (boundary.kind == BoundaryKind::materialized) {
    buf = boundary.states;
  } else {
    const StateLaw law = boundary.vertex_law();
    buf.resize(static_cast<std::size_t>(size));
    for (auto& s : buf) s = detail::draw_state(law, rng);
  }
  std::int64_t n = size;
  for (int k = boundary.level; k > 0; --k) {
    detail::step_up(m, buf, n, rng);
    n /= m.d();
  }
  return buf[0];
}

// Samples the root by drawing the top `frontier_level` levels explicitly from
// the exact independent laws of the frontier vertices. Same distribution as
// propagate() at a cost of O(d^frontier_level) per draw.
class RootSampler {
 public:
  RootSampler(const UpdateMatrix& m, const BoundaryConfig& boundary,
              std::int64_t frontier_cap = 64, std::int64_t level_cap = kDefaultLevelCap)
      : m_(m) {
    frontier_level_ = 0;
    std::int64_t size = 1;
    while (frontier_level_ < boundary.level && size * m.d() <= frontier_cap) {
      size *= m.d();
      ++frontier_level_;
    }
    laws_ = level_laws(m, boundary, frontier_level_, level_cap);
    buf_.resize(laws_.size());
  }

  int frontier_level() const { return frontier_level_; }

  State operator()(Stream& rng) {
    for (std::size_t v = 0; v < laws_.size(); ++v) buf_[v] = detail::draw_state(laws_[v], rng);
    std::int64_t n = static_cast<std::int64_t>(buf_.size());
    for (int k = frontier_level_; k > 0; --k) {
      detail::step_up(m_, buf_, n, rng);
      n /= m_.d();
    }
    return buf_[0];
  }

 private:
  UpdateMatrix m_;
  int frontier_level_;
  std::vector<StateLaw> laws_;
  std::vector<State> buf_;
};

enum class Propagation { frontier, full };

struct RootLawEstimate {
  std::array<std::int64_t, 3> counts{};
  std::int64_t replicates = 0;

  double freq(State s) const {
    return static_cast<double>(counts[static_cast<std::size_t>(s)]) / replicates;
  }
  double se(State s) const {
    const double f = freq(s);
    return std::sqrt(f * (1.0 - f) / replicates);
  }
};

// Root states over `replicates` independent propagations.
inline RootLawEstimate estimate_root_law(const UpdateMatrix& m, const BoundaryConfig& boundary,
                                         std::int64_t replicates, std::uint64_t seed,
                                         unsigned workers = 1,
                                         Propagation method = Propagation::frontier,
                                         std::int64_t level_cap = kDefaultLevelCap) {
  if (replicates < 1) throw InvalidParameters("replicates must be >= 1");
  using Counts = std::array<std::int64_t, 3>;
  std::optional<RootSampler> prototype;
  if (method == Propagation::frontier) prototype.emplace(m, boundary, 64, level_cap);
  else detail::level_size(m.d(), boundary.level, level_cap);

  // Chunk-local samplers keep their own scratch buffers.
  struct Acc {
    Counts counts{};
    std::optional<RootSampler> sampler;
  };
  const Acc init{Counts{}, prototype};
  const Acc total = parallel_replicates(
      replicates, workers, seed, init,
      [&](Acc& acc, Stream& rng, std::int64_t) {
        const State s = acc.sampler ? (*acc.sampler)(rng) : propagate(m, boundary, rng, level_cap);
        ++acc.counts[static_cast<std::size_t>(s)];
      },
      [](Acc& into, const Acc& from) {
        for (std::size_t k = 0; k < 3; ++k) into.counts[k] += from.counts[k];
      });
  RootLawEstimate e;
  e.counts = total.counts;
  e.replicates = replicates;
  return e;
}

struct TvEstimate {
  double tv_hat = 0.0;
  double ci_halfwidth = 0.0;  // 95% normal approximation; tv_hat is biased up by O(1/sqrt(N))
  RootLawEstimate sigma;
  RootLawEstimate tau;
};

inline TvEstimate tv_distance_estimate(const UpdateMatrix& m, const BoundaryConfig& sigma,
                                       const BoundaryConfig& tau, std::int64_t replicates,
                                       std::uint64_t seed, unsigned workers = 1,
                                       Propagation method = Propagation::frontier) {
  if (sigma.level != tau.level) throw InvalidParameters("boundaries must sit on the same level");
  TvEstimate out;
  out.sigma = estimate_root_law(m, sigma, replicates, splitmix64(seed ^ 0x5347ULL), workers, method);
  out.tau = estimate_root_law(m, tau, replicates, splitmix64(seed ^ 0x5441ULL), workers, method);
  double l1 = 0.0, spread = 0.0;
  for (State s : {State::W, State::L, State::D}) {
    l1 += std::abs(out.sigma.freq(s) - out.tau.freq(s));
    spread += std::sqrt(out.sigma.se(s) * out.sigma.se(s) + out.tau.se(s) * out.tau.se(s));
  }
  out.tv_hat = 0.5 * l1;
  out.ci_halfwidth = 1.96 * 0.5 * spread;
  return out;
}

enum class ErgodicityVerdict { ergodic_consistent, non_ergodic_consistent, inconclusive };

inline const char* to_string(ErgodicityVerdict v) {
  switch (v) {
    case ErgodicityVerdict::ergodic_consistent: return "ergodic-consistent";
    case ErgodicityVerdict::non_ergodic_consistent: return "non-ergodic-consistent";
    default: return "inconclusive";
  }
}

inline ErgodicityVerdict judge(double tv_hat, double ci) {
  if (tv_hat + ci < 0.01) return ErgodicityVerdict::ergodic_consistent;
  if (tv_hat - ci > 0.05) return ErgodicityVerdict::non_ergodic_consistent;
  return ErgodicityVerdict::inconclusive;
}

struct ProbePoint {
  int n = 0;
  double tv_hat = 0.0;
  double ci = 0.0;
  ErgodicityVerdict verdict = ErgodicityVerdict::inconclusive;
};

inline constexpr const char* kProxyNote =
    "sup over boundary pairs approximated by the extremal pair (all_L, all_D); "
    "not established to attain the supremum";

struct ProbeResult {
  int d = 2;
  ParamPair params;
  std::int64_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<ProbePoint> curve;

  ErgodicityVerdict verdict() const {
    return curve.empty() ? ErgodicityVerdict::inconclusive : curve.back().verdict;
  }
};

// TV between the root laws under all_L and all_D boundaries for n = 1..n_max.
inline ProbeResult ergodicity_probe(int d, ParamPair params, int n_max, std::int64_t replicates,
                                    std::uint64_t seed, unsigned workers = 1,
                                    Propagation method = Propagation::frontier) {
  if (n_max < 1) throw InvalidParameters("n_max must be >= 1");
  const UpdateMatrix m(d, params);
  detail::level_size(d, n_max, kDefaultLevelCap);
  ProbeResult r;
  r.d = d;
  r.params = params;
  r.replicates = replicates;
  r.seed = seed;
  for (int n = 1; n <= n_max; ++n) {
    const auto tv = tv_distance_estimate(m, BoundaryConfig::all_L(n), BoundaryConfig::all_D(n),
                                         replicates, splitmix64(seed + static_cast<std::uint64_t>(n)),
                                         workers, method);
    r.curve.push_back({n, tv.tv_hat, tv.ci_halfwidth, judge(tv.tv_hat, tv.ci_halfwidth)});
  }
  return r;
}

}  // namespace percgames
