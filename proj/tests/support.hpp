#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "percgames/engine.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/offspring.hpp"
#include "percgames/random.hpp"

namespace testsupport {

using namespace percgames;

inline ParamPair random_params(Stream& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double p = u(rng), q = u(rng);
    if (ParamPair::admissible(p, q) && p + q > 1e-3 && p + q < 0.999) return {p, q};
  }
}

// One of the named families with random parameters in a moderate range.
inline OffspringDistribution random_named(Stream& rng, int family) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> small(2, 6);
  switch (family % 6) {
    case 0: return OffspringDistribution::binomial(small(rng), 0.05 + 0.95 * u(rng));
    case 1: return OffspringDistribution::poisson(0.2 + 6.0 * u(rng));
    case 2: return OffspringDistribution::negative_binomial(small(rng) - 1, 0.1 + 0.8 * u(rng));
    case 3: return OffspringDistribution::geometric(0.05 + 0.9 * u(rng));
    case 4: return OffspringDistribution::zero_or_d(small(rng), 0.05 + 0.9 * u(rng));
    default: return OffspringDistribution::dirac(small(rng) - 1);
  }
}

inline OffspringDistribution random_finite(Stream& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 6);
  std::vector<double> m(static_cast<std::size_t>(len(rng)));
  double total = 0;
  for (auto& x : m) total += (x = u(rng));
  for (auto& x : m) x /= total;
  double s = 0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) s += m[i];
  m.back() = 1.0 - s;
  return OffspringDistribution::finite(m);
}

// Weighted enumeration of every depth-truncated tree shape and every edge
// labeling for an offspring law with finite support given by `masses`.
// Calls visit(tree, probability) for each configuration.
inline void enumerate_bond_trees(const std::vector<double>& masses, ParamPair params, int depth,
                                 const std::function<void(const LabeledTree&, double)>& visit) {
  LabeledTree t;
  t.depth = depth;
  t.mode = Mode::bond;
  t.first_child = {0};
  t.child_count = {0};
  t.level = {0};

  std::function<void(std::int64_t, double)> shapes = [&](std::int64_t v, double weight) {
    if (v == t.size()) {
      t.label.assign(t.child_count.size(), Label::Safe);
      const std::int64_t edges = t.size() - 1;
      std::int64_t total = 1;
      for (std::int64_t e = 0; e < edges; ++e) total *= 3;
      for (std::int64_t code = 0; code < total; ++code) {
        double w = weight;
        std::int64_t c = code;
        for (std::int64_t e = 1; e <= edges; ++e) {
          const int k = static_cast<int>(c % 3);
          c /= 3;
          t.label[e] = k == 0 ? Label::Trap : k == 1 ? Label::Target : Label::Safe;
          w *= k == 0 ? params.p : k == 1 ? params.q : params.safe();
        }
        visit(t, w);
      }
      return;
    }
    if (t.level[v] == depth) {
      shapes(v + 1, weight);
      return;
    }
    for (std::size_t m = 0; m < masses.size(); ++m) {
      if (masses[m] == 0.0) continue;
      const auto saved = t.size();
      t.first_child[v] = saved;
      t.child_count[v] = static_cast<std::int32_t>(m);
      for (std::size_t k = 0; k < m; ++k) {
        t.first_child.push_back(0);
        t.child_count.push_back(0);
        t.level.push_back(t.level[v] + 1);
      }
      shapes(v + 1, weight * masses[m]);
      t.first_child.resize(static_cast<std::size_t>(saved));
      t.child_count.resize(static_cast<std::size_t>(saved));
      t.level.resize(static_cast<std::size_t>(saved));
      t.first_child[v] = 0;
      t.child_count[v] = 0;
    }
  };
  shapes(0, 1.0);
}

struct Enumerated {
  double w = 0.0;
  double l = 0.0;
  double total = 0.0;
};

inline Enumerated enumerate_bond_outcomes(const std::vector<double>& masses, ParamPair params,
                                          int depth) {
  Enumerated e;
  enumerate_bond_trees(masses, params, depth, [&](const LabeledTree& t, double w) {
    const State root = classify_bond(t)[0];
    if (root == State::W) e.w += w;
    if (root == State::L) e.l += w;
    e.total += w;
  });
  return e;
}

}  // namespace testsupport
