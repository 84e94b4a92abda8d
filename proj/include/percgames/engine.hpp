#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "percgames/errors.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/offspring.hpp"
#include "percgames/random.hpp"

namespace percgames {

enum class Label : std::uint8_t { Safe, Trap, Target };
enum class State : std::uint8_t { W, L, D };
enum class Mode { bond, site };

inline const char* to_string(State s) {
  switch (s) {
    case State::W: return "W";
    case State::L: return "L";
    default: return "D";
  }
}

inline const char* to_string(Mode m) { return m == Mode::bond ? "bond" : "site"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "bond") return Mode::bond;
  if (s == "site") return Mode::site;
  throw InvalidParameters("mode must be bond or site, got '" + std::string(s) + "'");
}

inline constexpr std::int64_t kDefaultMaxVertices = 10'000'000;

// Breadth-first arena. Children of v occupy [first_child[v], first_child[v] + child_count[v]).
// label[v] is the label of the edge into v in bond mode and of v itself in
// site mode; the root's entry is unused in bond mode.
struct LabeledTree {
  int depth = 0;
  Mode mode = Mode::bond;
  std::vector<std::int64_t> first_child;
  std::vector<std::int32_t> child_count;
  std::vector<std::int32_t> level;
  std::vector<Label> label;

  std::int64_t size() const { return static_cast<std::int64_t>(child_count.size()); }
};

inline LabeledTree sample_tree(const OffspringDistribution& dist, int depth,
                               std::int64_t max_vertices, Stream& rng) {
  if (depth < 0) throw InvalidParameters("depth must be >= 0");
  if (max_vertices < 1) throw InvalidParameters("max_vertices must be >= 1");
  LabeledTree t;
  t.depth = depth;
  t.first_child.push_back(0);
  t.child_count.push_back(0);
  t.level.push_back(0);
  for (std::int64_t v = 0; v < t.size(); ++v) {
    if (t.level[v] == depth) continue;
    const int m = dist.sample(rng);
    if (t.size() + m > max_vertices) {
      throw VertexCapExceeded("sampled tree exceeds " + std::to_string(max_vertices) +
                              " vertices; lower the depth");
    }
    t.first_child[v] = t.size();
    t.child_count[v] = m;
    for (int k = 0; k < m; ++k) {
      t.first_child.push_back(0);
      t.child_count.push_back(0);
      t.level.push_back(t.level[v] + 1);
    }
  }
  t.label.assign(t.child_count.size(), Label::Safe);
  return t;
}

namespace detail {

inline Label draw_label(ParamPair params, Stream& rng) {
  const double u = uniform01(rng);
  if (u < params.p) return Label::Trap;
  if (u < params.p + params.q) return Label::Target;
  return Label::Safe;
}

}  // namespace detail

inline void label_edges(LabeledTree& tree, ParamPair params, Stream& rng) {
  tree.mode = Mode::bond;
  tree.label[0] = Label::Safe;
  for (std::int64_t v = 1; v < tree.size(); ++v) tree.label[v] = detail::draw_label(params, rng);
}

inline void label_vertices(LabeledTree& tree, ParamPair params, Stream& rng) {
  tree.mode = Mode::site;
  for (std::int64_t v = 0; v < tree.size(); ++v) tree.label[v] = detail::draw_label(params, rng);
}

// Same skeleton cut at a shallower depth, keeping labels.
inline LabeledTree truncated(const LabeledTree& tree, int depth) {
  if (depth >= tree.depth) return tree;
  LabeledTree t;
  t.depth = depth;
  t.mode = tree.mode;
  std::int64_t n = 0;
  while (n < tree.size() && tree.level[n] <= depth) ++n;
  t.first_child.assign(tree.first_child.begin(), tree.first_child.begin() + n);
  t.child_count.assign(tree.child_count.begin(), tree.child_count.begin() + n);
  t.level.assign(tree.level.begin(), tree.level.begin() + n);
  t.label.assign(tree.label.begin(), tree.label.begin() + n);
  for (std::int64_t v = 0; v < n; ++v) {
    if (t.level[v] == depth) t.child_count[v] = 0;
  }
  return t;
}

using Classification = std::vector<State>;

// Backward induction for the bond game. State of v is from the point of view
// of the player about to move from v.
inline Classification classify_bond(const LabeledTree& tree) {
  Classification s(tree.child_count.size(), State::D);
  for (std::int64_t v = tree.size() - 1; v >= 0; --v) {
    if (tree.level[v] == tree.depth) continue;
    const std::int64_t c0 = tree.first_child[v];
    const std::int64_t m = tree.child_count[v];
    bool win = false, draw = false;
    for (std::int64_t c = c0; c < c0 + m && !win; ++c) {
      switch (tree.label[c]) {
        case Label::Target: win = true; break;
        case Label::Safe:
          if (s[c] == State::L) win = true;
          else if (s[c] == State::D) draw = true;
          break;
        case Label::Trap: break;
      }
    }
    s[v] = win ? State::W : draw ? State::D : State::L;
  }
  return s;
}

// Site game: a vertex's state is for the player who has just been moved onto
// it. Traps lose for the one who moved there, so the player now to move wins.
inline Classification classify_site(const LabeledTree& tree) {
  Classification s(tree.child_count.size(), State::D);
  for (std::int64_t v = tree.size() - 1; v >= 0; --v) {
    if (tree.label[v] == Label::Trap) { s[v] = State::W; continue; }
    if (tree.label[v] == Label::Target) { s[v] = State::L; continue; }
    if (tree.level[v] == tree.depth) continue;
    const std::int64_t c0 = tree.first_child[v];
    const std::int64_t m = tree.child_count[v];
    bool win = false, draw = false;
    for (std::int64_t c = c0; c < c0 + m; ++c) {
      if (s[c] == State::L) { win = true; break; }
      if (s[c] == State::D) draw = true;
    }
    s[v] = win ? State::W : draw ? State::D : State::L;
  }
  return s;
}

// Root becomes Safe; every other vertex takes the label of the edge into it.
inline LabeledTree couple_bond_to_site(const LabeledTree& bond_tree) {
  LabeledTree t = bond_tree;
  t.mode = Mode::site;
  t.label[0] = Label::Safe;
  return t;
}

inline Classification classify(const LabeledTree& tree) {
  return tree.mode == Mode::bond ? classify_bond(tree) : classify_site(tree);
}

struct WinLose {
  double w = 0.0;
  double l = 0.0;
};

// w_n = 1 - G((1-q) - (1-p-q) l_{n-1}),  l_n = G(p + (1-p-q) w_{n-1}),  w_0 = l_0 = 0.
inline WinLose recurrence_wn_ln(const OffspringDistribution& dist, ParamPair params, int n) {
  if (n < 0) throw InvalidParameters("n must be >= 0");
  WinLose x;
  const double s = params.safe();
  for (int k = 0; k < n; ++k) {
    const WinLose prev = x;
    x.w = 1.0 - dist.pgf((1.0 - params.q) - s * prev.l);
    x.l = dist.pgf(params.p + s * prev.w);
  }
  return x;
}

// Site game root labeled at random: s_0 = p, t_0 = q,
// s_n = p + (1-p-q)(1 - G(1 - t_{n-1})),  t_n = q + (1-p-q) G(s_{n-1}).
inline WinLose site_recurrence(const OffspringDistribution& dist, ParamPair params, int n) {
  if (n < 0) throw InvalidParameters("n must be >= 0");
  WinLose x{params.p, params.q};
  const double s = params.safe();
  for (int k = 0; k < n; ++k) {
    const WinLose prev = x;
    x.w = params.p + s * (1.0 - dist.pgf(1.0 - prev.l));
    x.l = params.q + s * dist.pgf(prev.w);
  }
  return x;
}

struct OutcomeEstimate {
  std::int64_t replicates = 0;
  double w_hat = 0.0, l_hat = 0.0, d_hat = 0.0;
  double se_w = 0.0, se_l = 0.0, se_d = 0.0;
  double w_exact = 0.0, l_exact = 0.0;
};

namespace detail {

struct StateCounts {
  std::int64_t w = 0, l = 0, d = 0;
};

inline double binomial_se(double p, std::int64_t n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace detail

inline LabeledTree sample_labeled_tree(const OffspringDistribution& dist, ParamPair params,
                                       Mode mode, int depth, Stream& rng,
                                       std::int64_t max_vertices = kDefaultMaxVertices) {
  LabeledTree t = sample_tree(dist, depth, max_vertices, rng);
  if (mode == Mode::bond) label_edges(t, params, rng);
  else label_vertices(t, params, rng);
  return t;
}

// Root-state frequencies over independent labeled trees; the result does not
// depend on `workers`.
inline OutcomeEstimate monte_carlo_outcomes(const OffspringDistribution& dist, ParamPair params,
                                            Mode mode, int depth, std::int64_t replicates,
                                            std::uint64_t seed, unsigned workers = 1,
                                            std::int64_t max_vertices = kDefaultMaxVertices) {
  if (replicates < 1) throw InvalidParameters("replicates must be >= 1");
  const auto counts = parallel_replicates(
      replicates, workers, seed, detail::StateCounts{},
      [&](detail::StateCounts& acc, Stream& rng, std::int64_t) {
        const LabeledTree t = sample_labeled_tree(dist, params, mode, depth, rng, max_vertices);
        switch (classify(t)[0]) {
          case State::W: ++acc.w; break;
          case State::L: ++acc.l; break;
          case State::D: ++acc.d; break;
        }
      },
      [](detail::StateCounts& into, const detail::StateCounts& from) {
        into.w += from.w;
        into.l += from.l;
        into.d += from.d;
      });
  OutcomeEstimate e;
  e.replicates = replicates;
  const double n = static_cast<double>(replicates);
  e.w_hat = counts.w / n;
  e.l_hat = counts.l / n;
  e.d_hat = counts.d / n;
  e.se_w = detail::binomial_se(e.w_hat, replicates);
  e.se_l = detail::binomial_se(e.l_hat, replicates);
  e.se_d = detail::binomial_se(e.d_hat, replicates);
  const WinLose exact = mode == Mode::bond ? recurrence_wn_ln(dist, params, depth)
                                           : site_recurrence(dist, params, depth);
  e.w_exact = exact.w;
  e.l_exact = exact.l;
  return e;
}

}  // namespace percgames
