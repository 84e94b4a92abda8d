// Prints bond-game outcome probabilities and the closed-form verdict for a
// Binomial(3, 0.8) offspring law along the diagonal p = q.
#include <cstdio>

#include "percgames/percgames.hpp"

int main() {
  using namespace percgames;
  const auto dist = OffspringDistribution::binomial(3, 0.8);
  std::printf("%6s %10s %10s %10s %8s\n", "p=q", "win", "lose", "draw", "margin");
  for (int k = 1; k <= 9; ++k) {
    const double p = 0.05 * k;
    const ParamPair params{p, p};
    const auto out = outcome_probabilities(dist, params);
    const auto verdict = closed_form_draw_free(dist, params);
    std::printf("%6.2f %10.6f %10.6f %10.6f %8.4f\n", p, out.win, out.lose, out.draw,
                verdict.margin);
  }
}
