#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "percgames/percgames.hpp"

namespace {

using nlohmann::ordered_json;
using namespace percgames;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string dist;
  std::optional<double> p;
  std::optional<double> q;
  std::string grid;
  std::optional<int> depth;
  std::optional<std::int64_t> replicates;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<double> tol;
  unsigned workers = 0;
  std::string mode = "bond";
};

// Non-finite doubles become null so the JSON stays valid.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json triple(const OutcomeTriple& t) {
  return {{"win", num(t.win)}, {"lose", num(t.lose)}, {"draw", num(t.draw)}};
}

std::string csv_double(double v) { return std::isfinite(v) ? detail::format_double(v) : "nan"; }

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + o.out);
  f << text;
}

ParamPair require_params(const Options& o) {
  if (!o.p || !o.q) throw InvalidParameters("--p and --q are required");
  return ParamPair::make(*o.p, *o.q);
}

OffspringDistribution require_dist(const Options& o) {
  if (o.dist.empty()) throw InvalidParameters("--dist is required");
  return OffspringDistribution::parse(o.dist);
}

ordered_json base_config(const std::string& command, const Options& o) {
  ordered_json c;
  c["command"] = command;
  c["dist"] = o.dist;
  if (o.p) c["p"] = *o.p;
  if (o.q) c["q"] = *o.q;
  return c;
}

std::string header_comments(const ordered_json& config) {
  return "# percgames " + std::string(version()) + "\n# config: " + config.dump() + "\n";
}

int cmd_solve(const Options& o) {
  const auto dist = require_dist(o);
  const auto params = require_params(o);
  Tolerances tol;
  if (o.tol) tol.root = *o.tol;
  const auto r = analyze(dist, params, tol);

  ordered_json cfg = base_config("solve", o);
  cfg["tol"] = tol.root;
  ordered_json j;
  j["version"] = version();
  j["config"] = cfg;
  j["alpha"] = num(r.alpha);
  j["w_prime"] = num(r.w_prime);
  j["all_g2_fixed_points"] = r.all_g2_fixed_points;
  j["unique"] = r.unique;
  j["residual_alpha"] = num(r.residual_alpha);
  j["residual_w_prime"] = num(r.residual_w_prime);
  j["iterations_used"] = r.iterations_used;
  j["iteration_converged"] = r.iteration_converged;
  j["w"] = num(r.bond.win);
  j["l"] = num(r.bond.lose);
  j["draw"] = num(r.bond.draw);
  j["bond"] = triple(r.bond);
  j["site"] = triple(r.site);
  j["draw_free"] = r.bond.draw <= tol.verdict;
  if (dist.is<FiniteSupport>()) {
    j["closed_form"] = nullptr;
    j["boundary_indeterminate"] = false;
  } else {
    const auto v = closed_form_draw_free(dist, params);
    j["closed_form"] = {{"draw_free", v.draw_free}, {"margin", num(v.margin)}};
    j["boundary_indeterminate"] = v.boundary_indeterminate;
  }
  emit(o, j.dump(2) + "\n");
  return 0;
}

int cmd_phase_grid(const Options& o) {
  const auto dist = require_dist(o);
  if (o.grid.empty()) throw InvalidParameters("--grid is required");
  const auto grid = GridSpec::parse(o.grid);
  Tolerances tol;
  if (o.tol) tol.root = *o.tol;
  const auto res = phase_grid(dist, grid, tol);

  ordered_json cfg = base_config("phase-grid", o);
  cfg["grid"] = o.grid;
  cfg["tol"] = tol.root;
  std::ostringstream csv;
  csv << header_comments(cfg);
  csv << "p,q,margin,draw_free_closed_form,draw_free_numeric,agreement\n";
  for (const auto& row : res.rows) {
    csv << csv_double(row.p) << ',' << csv_double(row.q) << ',';
    if (row.cv.closed_form) {
      csv << csv_double(row.cv.closed_form->margin) << ','
          << (row.cv.closed_form->draw_free ? "true" : "false") << ',';
    } else {
      csv << "-,-,";
    }
    csv << (row.cv.numeric.draw_free ? "true" : "false") << ',';
    if (row.cv.skipped) csv << "-";
    else csv << (row.cv.agree ? "true" : "false");
    csv << '\n';
  }
  std::ostringstream summary;
  summary << "agreement " << csv_double(res.agreement_percent()) << "% (" << res.agreements << '/'
          << res.compared << " compared, " << res.boundary_cells << " in boundary band, "
          << res.skipped_outside_I << " outside I)";
  csv << "# summary: " << summary.str() << '\n';
  emit(o, csv.str());
  std::cerr << summary.str() << '\n';
  if (!res.all_agree()) {
    std::cerr << "error: closed-form and numeric verdicts disagree off the boundary band\n";
    return kExitNumeric;
  }
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto dist = require_dist(o);
  const auto params = require_params(o);
  const Mode mode = parse_mode(o.mode);
  const int depth = o.depth.value_or(10);
  const std::int64_t reps = o.replicates.value_or(10'000);
  const auto e = monte_carlo_outcomes(dist, params, mode, depth, reps, o.seed,
                                      resolve_workers(o.workers));
  ordered_json j;
  j["version"] = version();
  j["dist"] = dist.spec();
  j["p"] = params.p;
  j["q"] = params.q;
  j["mode"] = to_string(mode);
  j["depth"] = depth;
  j["replicates"] = reps;
  j["w_hat"] = num(e.w_hat);
  j["l_hat"] = num(e.l_hat);
  j["d_hat"] = num(e.d_hat);
  j["se_w"] = num(e.se_w);
  j["se_l"] = num(e.se_l);
  j["se_d"] = num(e.se_d);
  j["w_n_exact"] = num(e.w_exact);
  j["l_n_exact"] = num(e.l_exact);
  j["seed"] = o.seed;
  emit(o, j.dump(2) + "\n");
  return 0;
}

int cmd_pta(const Options& o) {
  const auto dist = require_dist(o);
  if (!dist.is<Dirac>()) {
    throw InvalidParameters("pta runs on the d-regular tree; pass --dist dirac:d=<d>");
  }
  const int d = std::get<Dirac>(dist.law()).d;
  const auto params = require_params(o);
  const int n_max = o.depth.value_or(20);
  const std::int64_t reps = o.replicates.value_or(100'000);
  const auto r = ergodicity_probe(d, params, n_max, reps, o.seed, resolve_workers(o.workers));

  ordered_json meta;
  meta["version"] = version();
  meta["d"] = d;
  meta["p"] = params.p;
  meta["q"] = params.q;
  meta["n_max"] = n_max;
  meta["boundary_pair"] = {"all_L", "all_D"};
  meta["replicates"] = reps;
  meta["seed"] = o.seed;
  meta["proxy_note"] = kProxyNote;
  meta["verdict"] = to_string(r.verdict());

  ordered_json cfg = base_config("pta", o);
  cfg["depth"] = n_max;
  cfg["replicates"] = reps;
  cfg["seed"] = o.seed;
  std::ostringstream csv;
  csv << header_comments(cfg);
  csv << "# meta: " << meta.dump() << '\n';
  csv << "n,tv_hat,ci,verdict\n";
  for (const auto& pt : r.curve) {
    csv << pt.n << ',' << csv_double(pt.tv_hat) << ',' << csv_double(pt.ci) << ','
        << to_string(pt.verdict) << '\n';
  }
  emit(o, csv.str());
  if (!o.out.empty()) {
    std::ofstream f(o.out + ".meta.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + o.out + ".meta.json");
    f << meta.dump(2) << '\n';
  }
  return 0;
}

int cmd_duration(const Options& o) {
  const auto dist = require_dist(o);
  const auto params = require_params(o);
  const double tol = o.tol.value_or(1e-10);
  const int depth = o.depth.value_or(30);
  const std::int64_t reps = o.replicates.value_or(10'000);
  const auto s = expected_duration_series(dist, params, tol);
  const auto mc = monte_carlo_duration(dist, params, depth, reps, o.seed, resolve_workers(o.workers));

  ordered_json cfg = base_config("duration", o);
  cfg["tol"] = tol;
  cfg["depth"] = depth;
  cfg["replicates"] = reps;
  cfg["seed"] = o.seed;
  ordered_json j;
  j["version"] = version();
  j["config"] = cfg;
  j["series"] = {
      {"status", to_string(s.status)},
      {"series_value", s.status == SeriesStatus::converged ? num(s.series_value)
                                                           : ordered_json("diverged")},
      {"terms_used", s.terms_used},
      {"tail_bound", num(s.tail_bound)},
      {"derivative_g2_at_wprime", num(s.derivative_g2_at_wprime)},
      {"derivative_g_at_wprime_abs", num(s.derivative_g_at_wprime_abs)},
      {"criterion_met", s.criterion_met},
  };
  const bool comparable = s.status == SeriesStatus::converged && std::isfinite(mc.mean) &&
                          mc.unresolved_fraction < 1e-3;
  ordered_json block = {
      {"depth", depth},
      {"replicates", reps},
      {"mean", num(mc.mean)},
      {"se", num(mc.se)},
      {"unresolved_fraction", num(mc.unresolved_fraction)},
  };
  if (comparable) {
    block["z_vs_series"] = num((mc.mean - s.series_value) / mc.se);
    block["within_4se"] = std::abs(mc.mean - s.series_value) <= 4.0 * mc.se;
  } else {
    block["z_vs_series"] = nullptr;
    block["within_4se"] = nullptr;
  }
  j["monte_carlo"] = block;
  emit(o, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Percolation games on Galton-Watson trees"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--dist", o.dist, "offspring law, e.g. binomial:d=3,pi=0.5");
    sub->add_option("--p", o.p, "trap probability");
    sub->add_option("--q", o.q, "target probability");
    sub->add_option("--out", o.out, "output file (stdout if omitted)");
    sub->add_option("--tol", o.tol, "root tolerance, or series tolerance for duration");
    sub->add_option("--workers", o.workers, "worker threads (PERCGAMES_WORKERS overrides)");
  };
  auto add_random = [&o](CLI::App* sub) {
    sub->add_option("--depth", o.depth, "truncation depth / boundary level");
    sub->add_option("--replicates", o.replicates, "independent replicates");
    sub->add_option("--seed", o.seed, "master seed");
  };

  auto* solve = app.add_subcommand("solve", "fixed points and outcome probabilities");
  add_common(solve);
  auto* grid = app.add_subcommand("phase-grid", "closed-form vs numeric phase sweep");
  add_common(grid);
  grid->add_option("--grid", o.grid, "p_min,p_max,steps x q_min,q_max,steps");
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo root outcomes on truncated trees");
  add_common(simulate);
  add_random(simulate);
  simulate->add_option("--mode", o.mode, "bond or site");
  auto* pta = app.add_subcommand("pta", "ergodicity probe of the tree automaton");
  add_common(pta);
  add_random(pta);
  auto* duration = app.add_subcommand("duration", "expected game duration, series and Monte Carlo");
  add_common(duration);
  add_random(duration);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (grid->parsed()) return cmd_phase_grid(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (pta->parsed()) return cmd_pta(o);
    if (duration->parsed()) return cmd_duration(o);
  } catch (const InvalidParameters& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}
