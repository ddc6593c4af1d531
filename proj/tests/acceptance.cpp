// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single pass/fail line. Run without arguments for the full set
// or pass criterion numbers (1-8) to run a subset. Exits nonzero on any
// failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "metametrics/bootstrap.hpp"
#include "metametrics/dependence.hpp"
#include "metametrics/io.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/rng.hpp"
#include "metametrics/shrinkage.hpp"
#include "metametrics/synth.hpp"
#include "metametrics/tensor.hpp"

namespace fs = std::filesystem;
using namespace mm;
using Clock = std::chrono::steady_clock;

namespace {

double secs_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// Random correlation matrix: two factor loadings plus noise, normalized to
// unit diagonal. PSD by construction.
Eigen::MatrixXd random_correlation(Rng& rng, int m) {
  Eigen::MatrixXd loadings(m, 2);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < 2; ++k) loadings(i, k) = rng.normal() * 0.7;
  Eigen::MatrixXd c = loadings * loadings.transpose();
  for (int i = 0; i < m; ++i) c(i, i) += 0.3 + rng.uniform();
  Eigen::VectorXd d = c.diagonal().cwiseSqrt();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c(i, j) /= d(i) * d(j);
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd equicorrelation(int m, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(m, m, rho);
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd single_factor(const Eigen::VectorXd& loadings) {
  Eigen::MatrixXd c = loadings * loadings.transpose();
  c.diagonal().setOnes();
  return c;
}

// Best (lowest) residual score over every conditioning subset of the given
// size; the exhaustive reference for the greedy curve.
double exhaustive_best(const Eigen::MatrixXd& c, int target, int size,
                       const std::vector<int>& others) {
  double best = std::numeric_limits<double>::infinity();
  int n = static_cast<int>(others.size());
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != size) continue;
    std::vector<int> given;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) given.push_back(others[i]);
    best = std::min(best, independence_score(c, target, given));
  }
  return best;
}

struct MetaRun {
  MetaResult meta;
  double elapsed = 0.0;
};

// Full pipeline on a mixed-effects league: generate, aggregate, bootstrap
// the sampling variance, score.
MetaRun run_mixed_league(const MixedEffectsParams& params, int players,
                         int seasons, int games, std::uint64_t seed,
                         int replicates) {
  auto start = Clock::now();
  MixedEffectsSynthSpec spec;
  spec.players = players;
  spec.seasons = seasons;
  spec.games = games;
  spec.params = params;
  spec.seed = seed;
  SynthData data = generate(spec);
  auto agg = aggregate_and_evaluate(*data.log, data.definitions,
                                    AggregateOptions{.exposure_stat = ""});
  BootstrapConfig bc;
  bc.replicates = replicates;
  bc.seed = seed + 1;
  bc.exposure_stat = "";
  auto bv = bootstrap_variance(*data.log, data.definitions, bc);
  MetaOptions mo;
  mo.min_exposure_rate = 0.0;
  MetaRun run;
  run.meta = compute_meta(agg.tensor, bv, mo);
  run.elapsed = secs_since(start);
  return run;
}

Outcome criterion_1() {
  MixedEffectsParams params{100.0, 1.0, 2.0, 1.0, 1.0};
  MetaRun run = run_mixed_league(params, 2000, 10, 82, 1, 500);
  double d = run.meta.scores[0].discrimination;
  double s = run.meta.scores[0].stability;
  double d_err = std::abs(d - closed_form_discrimination(params));
  double s_err = std::abs(s - closed_form_stability(params));
  bool pass = d_err <= 0.03 && s_err <= 0.05 && run.elapsed <= 300.0;
  return {pass, fmt("D=%.5f (|err| %.5f <= 0.03), S=%.5f (|err| %.5f <= 0.05), %.0fs <= 300s",
                    d, d_err, s, s_err, run.elapsed)};
}

Outcome criterion_2() {
  Rng rng(Rng::hash("stability-bounds"));
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    auto draw = [&] { return rng.uniform() < 0.15 ? 0.0 : rng.uniform() * 10.0; };
    MixedEffectsParams p;
    p.player_var = draw();
    p.season_var = draw();
    p.interaction_var = draw();
    if (p.player_var == 0.0 && p.season_var == 0.0 && p.interaction_var == 0.0)
      p.interaction_var = 0.5;
    double s = closed_form_stability(p);
    if (!(s >= 0.0 && s <= 1.0)) ++violations;
  }

  MixedEffectsParams null_params{100.0, 1.0, 0.0, 1.0, 1.0};
  double worst = 0.0;
  for (std::uint64_t seed : {311ULL, 312ULL}) {
    MetaRun run = run_mixed_league(null_params, 2000, 10, 82, seed, 200);
    worst = std::max(worst, std::abs(run.meta.scores[0].stability_raw));
  }
  bool pass = violations == 0 && worst <= 0.1;
  return {pass, fmt("closed-form S in [0,1] on 10000 draws (%d violations), "
                    "null-league raw S worst |.|=%.5f <= 0.1",
                    violations, worst)};
}

Outcome criterion_3() {
  BinomialLeagueSynthSpec spec;
  spec.players = 5000;
  spec.seasons = 1;
  spec.games = 25;
  spec.attempts_per_game = 4;
  spec.seed = 402;
  SynthData data = generate(spec);
  auto agg = aggregate_and_evaluate(*data.log, data.definitions,
                                    AggregateOptions{.exposure_stat = ""});
  BootstrapConfig bc;
  bc.replicates = 500;
  bc.seed = 403;
  bc.exposure_stat = "";
  auto bv = bootstrap_variance(*data.log, data.definitions, bc);
  MetaOptions mo;
  mo.min_exposure_rate = 0.0;
  double d = discrimination(agg.tensor, bv, agg.tensor.seasons[0], "FG%", mo);

  // Analytic target for a Beta(a,b) shooter over n attempts:
  // Var(p) / (Var(p) + E[p(1-p)]/n).
  double a = spec.ability_alpha, b = spec.ability_beta;
  double n = static_cast<double>(spec.games) * spec.attempts_per_game;
  double mean_p = a / (a + b);
  double var_p = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  double noise = (mean_p - (var_p + mean_p * mean_p)) / n;
  double target = var_p / (var_p + noise);
  double err = std::abs(d - target);
  bool pass = err <= 0.03;
  return {pass, fmt("D=%.5f vs analytic %.5f (|err| %.5f <= 0.03)", d, target, err)};
}

Outcome criterion_4() {
  auto start = Clock::now();
  Eigen::VectorXd lam(5);
  lam << 0.9, 0.7, -0.5, 0.3, -0.75;
  Eigen::MatrixXd c = single_factor(lam);
  double worst_offdiag = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) worst_offdiag = std::max(worst_offdiag, std::abs(c(i, j)));

  CopulaSynthSpec spec;
  spec.rows = 2000;
  spec.correlation = c;
  spec.marginals = {{Marginal::Kind::normal, 0.0, 1.0},
                    {Marginal::Kind::lognormal, 0.0, 0.5},
                    {Marginal::Kind::uniform, 0.0, 1.0},
                    {Marginal::Kind::counts, 4.0, 0.0},
                    {Marginal::Kind::counts, 1.5, 0.0}};
  spec.seed = 501;
  SynthData data = generate(spec);
  CopulaConfig cc;
  cc.iterations = 2000;
  cc.burnin = 500;
  cc.thin = 5;
  cc.seed = 502;
  auto corr = fit_copula(*data.tensor, cc);
  double err = (corr.mean - c).cwiseAbs().maxCoeff();
  double elapsed = secs_since(start);
  bool pass = worst_offdiag <= 0.7 && err <= 0.10 && elapsed <= 600.0;
  return {pass, fmt("max offdiag %.3f <= 0.7, max|mean-C|=%.4f <= 0.10, %.0fs <= 600s",
                    worst_offdiag, err, elapsed)};
}

Outcome criterion_5() {
  // Bivariate closed form: residual variance is exactly 1 - rho^2.
  double worst_bivariate = 0.0;
  for (double rho : {-0.95, -0.6, -0.3, 0.0, 0.25, 0.5, 0.8, 0.99}) {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, rho, rho, 1.0;
    std::vector<int> given{1};
    double score = independence_score(c, 0, given);
    worst_bivariate = std::max(worst_bivariate, std::abs(score - (1.0 - rho * rho)));
  }

  // Greedy curve equals the exhaustive optimum on structured 4-metric
  // families: equicorrelation, single common factor, AR(1) bands, block
  // diagonal.
  std::vector<Eigen::MatrixXd> fixtures;
  for (double rho : {0.0, 0.2, 0.5, 0.8, 0.95}) fixtures.push_back(equicorrelation(4, rho));
  Rng rng(Rng::hash("independence-fixtures"));
  for (int i = 0; i < 400; ++i) {
    Eigen::VectorXd lam(4);
    for (int k = 0; k < 4; ++k) lam(k) = (2.0 * rng.uniform() - 1.0) * 0.95;
    fixtures.push_back(single_factor(lam));
  }
  for (double rho : {0.2, 0.5, 0.8, 0.95}) {
    Eigen::MatrixXd c(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) c(i, j) = std::pow(rho, std::abs(i - j));
    fixtures.push_back(c);
  }
  {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
    c(0, 1) = c(1, 0) = 0.7;
    c(2, 3) = c(3, 2) = 0.4;
    fixtures.push_back(c);
  }

  std::vector<std::string> names = {"A", "B", "C", "D"};
  int mismatches = 0;
  double worst_gap = 0.0;
  for (const auto& c : fixtures) {
    for (int t = 0; t < 4; ++t) {
      std::vector<int> others;
      for (int i = 0; i < 4; ++i)
        if (i != t) others.push_back(i);
      IndependenceCurve curve = independence_curve(c, names, names[t]);
      for (const auto& pt : curve.points) {
        double gap = pt.score - exhaustive_best(c, t, pt.set_size, others);
        worst_gap = std::max(worst_gap, gap);
        if (gap > 1e-9) {
          ++mismatches;
          break;
        }
      }
    }
  }

  // Monotonicity: shrinking the conditioning set can only raise the score.
  std::vector<std::string> wide_names = {"A", "B", "C", "D", "E"};
  int monotone_violations = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    Rng mono_rng(Rng::mix({Rng::hash("independence-monotone"),
                           static_cast<std::uint64_t>(seed)}));
    Eigen::MatrixXd c = random_correlation(mono_rng, 5);
    for (int t = 0; t < 5; ++t) {
      IndependenceCurve curve = independence_curve(c, wide_names, wide_names[t]);
      for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        if (curve.points[i + 1].score < curve.points[i].score - 1e-12) {
          ++monotone_violations;
          break;
        }
      }
    }
  }

  bool pass = worst_bivariate <= 1e-12 && mismatches == 0 && monotone_violations == 0;
  return {pass,
          fmt("bivariate worst |err|=%.2e <= 1e-12, greedy vs exhaustive on %zu "
              "fixtures: %d mismatches (worst gap %.2e), monotone violations %d/5000",
              worst_bivariate, fixtures.size(), mismatches, worst_gap,
              monotone_violations)};
}

Outcome criterion_6() {
  double worst_total = 0.0;
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(Rng::mix({Rng::hash("pca-fractions"), static_cast<std::uint64_t>(seed)}));
    int m = 3 + seed % 6;
    PcaResult decomposition = pca(random_correlation(rng, m));
    worst_total = std::max(worst_total,
                           std::abs(decomposition.cumulative_fraction.back() - 1.0));
  }
  PcaResult equi = pca(equicorrelation(5, 0.5));
  double lead_err = std::abs(equi.cumulative_fraction.front() - 0.6);
  bool pass = worst_total <= 1e-10 && lead_err <= 1e-10;
  return {pass, fmt("full-set fraction worst |err|=%.2e <= 1e-10 on 200 matrices, "
                    "equicorrelated lead fraction err=%.2e <= 1e-10",
                    worst_total, lead_err)};
}

Outcome criterion_7() {
  // MSE contest on the pinned-career league: shrunken season rates against
  // the known truth, one win per replication where shrinkage has lower MSE.
  int wins = 0;
  for (int rep = 0; rep < 100; ++rep) {
    BinomialLeagueSynthSpec spec;
    spec.players = 400;
    spec.seasons = 5;
    spec.games = 10;
    spec.attempts_per_game = 20;
    spec.ability_alpha = 3.5e7;
    spec.ability_beta = 6.5e7;
    spec.season_concentration = 100.0;
    spec.seed = 7000 + static_cast<std::uint64_t>(rep);
    SynthData data = generate(spec);
    auto agg = aggregate_and_evaluate(*data.log, data.definitions,
                                      AggregateOptions{.exposure_stat = ""});
    auto fit = fit_shrinkage(agg.tensor, spec.metric_name);
    double mse_raw = 0.0, mse_eb = 0.0;
    for (const auto& p : fit.players) {
      int pi = agg.tensor.player_index(p.player);
      for (std::size_t i = 0; i < p.seasons.size(); ++i) {
        int si = agg.tensor.season_index(p.seasons[i]);
        double truth = data.truth.season_rates[pi][si];
        mse_raw += (p.raw[i] - truth) * (p.raw[i] - truth);
        mse_eb += (p.shrunk[i] - truth) * (p.shrunk[i] - truth);
      }
    }
    if (mse_eb < mse_raw) ++wins;
  }

  // Meta-metric contest on a league whose careers differ: the shrunken
  // column must beat the raw column on both scores.
  BinomialLeagueSynthSpec spec;
  spec.players = 400;
  spec.seasons = 5;
  spec.games = 10;
  spec.attempts_per_game = 20;
  spec.ability_alpha = 14.0;
  spec.ability_beta = 26.0;
  spec.season_concentration = 150.0;
  spec.seed = 601;
  SynthData data = generate(spec);
  auto agg = aggregate_and_evaluate(*data.log, data.definitions,
                                    AggregateOptions{.exposure_stat = ""});
  auto fit = fit_shrinkage(agg.tensor, spec.metric_name);
  auto tensor = append_shrunken_column(agg.tensor, fit, "EB");
  BootstrapConfig bc;
  bc.replicates = 300;
  bc.seed = 602;
  bc.exposure_stat = "";
  std::vector<EbColumn> eb = {{spec.metric_name, "EB", {}}};
  auto bv = bootstrap_variance(*data.log, data.definitions, bc, eb);
  auto meta = compute_meta(tensor, bv, MetaOptions{});
  double raw_d = meta.scores[0].discrimination;
  double raw_s = meta.scores[0].stability;
  double eb_d = meta.scores[1].discrimination;
  double eb_s = meta.scores[1].stability;

  bool pass = wins >= 95 && eb_d > raw_d && eb_s > raw_s;
  return {pass, fmt("MSE wins %d/100 >= 95; D %.4f > %.4f raw and S %.4f > %.4f raw",
                    wins, eb_d, raw_d, eb_s, raw_s)};
}

#ifdef MM_CLI_PATH
int run_command(const std::string& args, const fs::path& dir, int idx) {
  fs::path out = dir / ("cmd" + std::to_string(idx) + ".out");
  fs::path err = dir / ("cmd" + std::to_string(idx) + ".err");
  std::string cmd = std::string("\"") + MM_CLI_PATH + "\" " + args + " >" +
                    out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}
#endif

Outcome criterion_8() {
#ifndef MM_CLI_PATH
  return {false, "command line tool was not built"};
#else
  fs::path dir = fs::temp_directory_path() / "mm_acceptance_report";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string base = "report --log \"" MM_DATA_DIR "/sample_league.csv\" "
                     "--metrics \"" MM_DATA_DIR "/sample_metrics.mmdef\" "
                     "--seed 99 --eb FG% --out ";
  std::string r1 = (dir / "r1.json").string();
  std::string r2 = (dir / "r2.json").string();
  if (run_command(base + r1, dir, 1) != 0) return {false, "first report run failed"};
  if (run_command(base + r2, dir, 2) != 0) return {false, "second report run failed"};
  if (read_text_file(r1) != read_text_file(r2))
    return {false, "two runs with the same seed differ"};

  nlohmann::json rep = read_json_file(r1);
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  for (const char* key :
       {"meta", "independence", "pca", "cluster", "shrinkage", "provenance"})
    expect(rep.contains(key), std::string("missing section ") + key);
  if (!problems.empty()) return {false, problems.front()};

  const auto& scores = rep["meta"].at("scores");
  expect(scores.size() == 7, "expected 7 scored metrics");
  for (const auto& s : scores) {
    if (!s.at("discrimination").is_number() || !s.at("stability").is_number()) {
      expect(false, "score missing a value for " + s.at("metric").get<std::string>());
      continue;
    }
    double d = s["discrimination"].get<double>();
    double st = s["stability"].get<double>();
    expect(d >= 0.0 && d <= 1.0, "discrimination out of [0,1]");
    expect(st >= 0.0 && st <= 1.0, "stability out of [0,1]");
  }

  const auto& corr = rep["independence"].at("correlation");
  const auto& metrics = corr.at("metrics");
  std::size_t m = metrics.size();
  expect(m == 7, "expected 7 correlated metrics");
  const auto& mean = corr.at("mean");
  expect(mean.size() == m, "correlation row count");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double v = mean[i][j].get<double>();
      double w = mean[j][i].get<double>();
      expect(std::abs(v - w) <= 1e-12, "correlation not symmetric");
      expect(std::abs(v) <= 1.0 + 1e-12, "correlation entry outside [-1,1]");
      if (i == j) expect(std::abs(v - 1.0) <= 1e-12, "correlation diagonal not 1");
    }
  }

  const auto& curves = rep["independence"].at("curves");
  expect(curves.size() == m, "one curve per metric");
  for (const auto& curve : curves) {
    const auto& points = curve.at("points");
    expect(points.size() == m, "curve runs from all others down to none");
    expect(points.front().at("set_size").get<std::size_t>() == m - 1,
           "curve starts at the full conditioning set");
    expect(points.back().at("set_size").get<int>() == 0, "curve ends unconditioned");
    expect(std::abs(points.back().at("score").get<double>() - 1.0) <= 1e-10,
           "unconditioned score is 1");
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
      expect(points[i + 1].at("score").get<double>() >=
                 points[i].at("score").get<double>() - 1e-9,
             "curve not monotone");
  }

  const auto& fractions = rep["pca"].at("cumulative_fraction");
  expect(fractions.size() == m, "one variance fraction per component");
  expect(std::abs(fractions.back().get<double>() - 1.0) <= 1e-10,
         "variance fractions end at 1");
  for (std::size_t i = 0; i + 1 < fractions.size(); ++i)
    expect(fractions[i + 1].get<double>() >= fractions[i].get<double>() - 1e-12,
           "variance fractions not nondecreasing");

  std::string newick = rep["cluster"].at("newick").get<std::string>();
  expect(!newick.empty() && newick.back() == ';', "newick not terminated");
  expect(rep["cluster"].at("leaves").size() == m, "cluster leaves");

  expect(rep["shrinkage"].size() == 1, "one shrinkage fit");
  expect(rep["shrinkage"][0].at("column") == "FG%_EB", "shrunken column name");

  const auto& prov = rep["provenance"];
  expect(prov.contains("version") && prov.contains("settings") &&
             prov.contains("warnings"),
         "provenance fields");
  expect(prov.at("seed").get<int>() == 99, "provenance seed");
  expect(prov.at("inputs").size() == 2, "two hashed inputs");
  for (const auto& input : prov["inputs"])
    expect(input.at("hash").get<std::string>().size() == 16, "input hash length");

  if (!problems.empty())
    return {false, fmt("%zu invariant failures, first: %s", problems.size(),
                       problems.front().c_str())};
  return {true, fmt("two identical runs, %zu metrics, all sections and invariants hold", m)};
#endif
}

struct Entry {
  int id;
  const char* name;
  Outcome (*fn)();
};

const Entry kEntries[] = {
    {1, "estimator consistency", criterion_1},
    {2, "stability bounds", criterion_2},
    {3, "binomial discrimination oracle", criterion_3},
    {4, "copula correlation recovery", criterion_4},
    {5, "independence curve correctness", criterion_5},
    {6, "principal component fractions", criterion_6},
    {7, "shrinkage improvements", criterion_7},
    {8, "report pipeline", criterion_8},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    int id = std::atoi(argv[i]);
    if (id < 1 || id > 8) {
      std::fprintf(stderr, "usage: %s [criterion 1-8]...\n", argv[0]);
      return 2;
    }
    selected.push_back(id);
  }
  if (selected.empty())
    for (const auto& e : kEntries) selected.push_back(e.id);

  bool all_pass = true;
  for (int id : selected) {
    const Entry& entry = kEntries[id - 1];
    Outcome outcome;
    try {
      outcome = entry.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("unexpected error: ") + e.what()};
    }
    all_pass = all_pass && outcome.pass;
    std::printf("criterion %d (%s): %s - %s\n", entry.id, entry.name,
                outcome.pass ? "PASS" : "FAIL", outcome.details.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
