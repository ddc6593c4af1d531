#include "metametrics/synth.hpp"

#include <cmath>
#include <cstdio>

#include "metametrics/error.hpp"
#include "metametrics/rng.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

std::string padded_id(const char* prefix, int i, int count) {
  int width = 1;
  for (int c = count; c >= 10; c /= 10) ++width;
  std::string digits = std::to_string(i + 1);
  std::string out = prefix;
  if (static_cast<int>(digits.size()) < width)
    out.append(static_cast<std::size_t>(width) - digits.size(), '0');
  return out + digits;
}

void check_league_shape(int players, int seasons, int games) {
  if (players < 1 || seasons < 1 || games < 1) {
    fail(ErrorCode::invalid_argument,
         "league needs at least 1 player, season, and game");
  }
}

}  // namespace

SynthData generate(const MixedEffectsSynthSpec& spec) {
  check_league_shape(spec.players, spec.seasons, spec.games);
  const MixedEffectsParams& pr = spec.params;
  if (pr.season_var < 0 || pr.player_var < 0 || pr.interaction_var < 0 ||
      pr.noise_var < 0) {
    fail(ErrorCode::invalid_argument, "variance components must be nonnegative");
  }

  Rng rng(Rng::mix({spec.seed, Rng::hash("mixed_effects")}));

  const int P = spec.players, S = spec.seasons, G = spec.games;
  std::vector<double> season_effect(S), player_effect(P);
  const double sd_s = std::sqrt(pr.season_var);
  const double sd_p = std::sqrt(pr.player_var);
  const double sd_sp = std::sqrt(pr.interaction_var);
  // Game noise scaled so the season mean over G games has noise_var.
  const double sd_game = std::sqrt(pr.noise_var * G);

  for (int s = 0; s < S; ++s) season_effect[s] = rng.normal(0.0, sd_s);
  for (int p = 0; p < P; ++p) player_effect[p] = rng.normal(0.0, sd_p);

  SynthData out;
  GameLog log;
  log.set_stats({"VAL", "GP"});

  std::vector<int> season_ids(S), player_ids(P), team_ids(P);
  for (int s = 0; s < S; ++s) {
    season_ids[s] = log.intern_season(padded_id("S", s, S));
  }
  for (int p = 0; p < P; ++p) {
    std::string id = padded_id("P", p, P);
    player_ids[p] = log.intern_player(id, "Player " + id);
    team_ids[p] = log.intern_team(padded_id("T", p, P));
  }
  std::vector<int> game_ids(G);
  for (int g = 0; g < G; ++g) {
    game_ids[g] = log.intern_game(padded_id("G", g, G));
  }

  double row[2];
  for (int s = 0; s < S; ++s) {
    for (int p = 0; p < P; ++p) {
      double level = pr.grand_mean + season_effect[s] + player_effect[p] +
                     rng.normal(0.0, sd_sp);
      for (int g = 0; g < G; ++g) {
        double v = level + rng.normal(0.0, sd_game);
        if (v < 0.0) {
          fail(ErrorCode::invalid_argument,
               "game value went negative; raise grand_mean relative to the "
               "variance components");
        }
        row[0] = v;
        row[1] = 1.0;
        log.add_row(season_ids[s], player_ids[p], team_ids[p], game_ids[g], row);
      }
    }
  }

  out.log = std::move(log);
  out.definitions.push_back(parse_metric(spec.metric_name + " rate = VAL / GP"));
  out.truth.model = "mixed_effects";
  out.truth.seed = spec.seed;
  out.truth.params = pr;
  out.truth.closed_discrimination = closed_form_discrimination(pr);
  out.truth.closed_stability = closed_form_stability(pr);
  return out;
}

SynthData generate(const BinomialLeagueSynthSpec& spec) {
  check_league_shape(spec.players, spec.seasons, spec.games);
  if (spec.attempts_per_game < 1) {
    fail(ErrorCode::invalid_argument, "attempts_per_game must be positive");
  }
  if (!(spec.ability_alpha > 0.0) || !(spec.ability_beta > 0.0)) {
    fail(ErrorCode::invalid_argument, "ability prior needs positive shapes");
  }
  if (spec.season_concentration < 0.0) {
    fail(ErrorCode::invalid_argument, "season_concentration must be >= 0");
  }

  Rng rng(Rng::mix({spec.seed, Rng::hash("binomial_league")}));
  const int P = spec.players, S = spec.seasons, G = spec.games;
  const int A = spec.attempts_per_game;

  SynthData out;
  out.truth.model = "binomial_league";
  out.truth.seed = spec.seed;
  out.truth.career_rates.resize(P);
  out.truth.season_rates.assign(P, std::vector<double>(S));

  GameLog log;
  log.set_stats({"FG", "FGA"});
  std::vector<int> season_ids(S), player_ids(P), team_ids(P), game_ids(G);
  for (int s = 0; s < S; ++s) {
    season_ids[s] = log.intern_season(padded_id("S", s, S));
  }
  for (int p = 0; p < P; ++p) {
    std::string id = padded_id("P", p, P);
    player_ids[p] = log.intern_player(id, "Player " + id);
    team_ids[p] = log.intern_team(padded_id("T", p, P));
  }
  for (int g = 0; g < G; ++g) {
    game_ids[g] = log.intern_game(padded_id("G", g, G));
  }

  for (int p = 0; p < P; ++p) {
    out.truth.career_rates[p] = rng.beta(spec.ability_alpha, spec.ability_beta);
  }

  double row[2];
  for (int s = 0; s < S; ++s) {
    for (int p = 0; p < P; ++p) {
      double career = out.truth.career_rates[p];
      double rate = career;
      if (spec.season_concentration > 0.0) {
        rate = rng.beta(spec.season_concentration * career,
                        spec.season_concentration * (1.0 - career));
      }
      out.truth.season_rates[p][s] = rate;
      for (int g = 0; g < G; ++g) {
        row[0] = static_cast<double>(rng.binomial(A, rate));
        row[1] = static_cast<double>(A);
        log.add_row(season_ids[s], player_ids[p], team_ids[p], game_ids[g], row);
      }
    }
  }

  out.log = std::move(log);
  out.definitions.push_back(
      parse_metric(spec.metric_name + " percentage attempts=FGA = FG / FGA"));
  return out;
}

SynthData generate(const CopulaSynthSpec& spec) {
  const int M = static_cast<int>(spec.correlation.rows());
  if (M < 1 || spec.correlation.cols() != M) {
    fail(ErrorCode::invalid_argument, "correlation matrix must be square");
  }
  if (static_cast<int>(spec.marginals.size()) != M) {
    fail(ErrorCode::invalid_argument, "need one marginal per metric");
  }
  if (spec.rows < 2) {
    fail(ErrorCode::invalid_argument, "need at least 2 rows");
  }
  std::vector<std::string> names = spec.metric_names;
  if (names.empty()) {
    for (int m = 0; m < M; ++m) names.push_back("X" + std::to_string(m + 1));
  }
  if (static_cast<int>(names.size()) != M) {
    fail(ErrorCode::invalid_argument, "need one metric name per column");
  }
  for (const Marginal& mg : spec.marginals) {
    switch (mg.kind) {
      case Marginal::Kind::normal:
      case Marginal::Kind::lognormal:
        if (!(mg.b > 0.0)) {
          fail(ErrorCode::invalid_argument, "marginal scale must be positive");
        }
        break;
      case Marginal::Kind::uniform:
        if (!(mg.b > mg.a)) {
          fail(ErrorCode::invalid_argument, "uniform marginal needs a < b");
        }
        break;
      case Marginal::Kind::counts:
        if (!(mg.a > 0.0)) {
          fail(ErrorCode::invalid_argument, "counts marginal needs a positive rate");
        }
        break;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(spec.correlation);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::not_positive_definite,
         "correlation matrix is not positive definite");
  }
  Eigen::MatrixXd chol = llt.matrixL();

  Rng rng(Rng::mix({spec.seed, Rng::hash("copula_synth")}));

  MetricTensor t;
  t.seasons = {"S1"};
  t.metrics = names;
  t.kinds.assign(M, MetricKind::total);
  const int n = spec.rows;
  t.players.reserve(n);
  for (int i = 0; i < n; ++i) {
    t.players.push_back(padded_id("P", i, n));
  }
  t.values.resize(static_cast<std::size_t>(n) * M);
  t.attempts.assign(static_cast<std::size_t>(n) * M,
                    std::numeric_limits<double>::quiet_NaN());
  t.exposure.assign(n, std::numeric_limits<double>::quiet_NaN());
  t.games.assign(n, 1);

  Eigen::VectorXd g(M), z(M);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < M; ++m) g(m) = rng.normal();
    z = chol * g;
    for (int m = 0; m < M; ++m) {
      const Marginal& mg = spec.marginals[m];
      double x = 0.0;
      switch (mg.kind) {
        case Marginal::Kind::normal:
          x = mg.a + mg.b * z(m);
          break;
        case Marginal::Kind::lognormal:
          x = std::exp(mg.a + mg.b * z(m));
          break;
        case Marginal::Kind::uniform:
          x = mg.a + (mg.b - mg.a) * pnorm(z(m));
          break;
        case Marginal::Kind::counts:
          x = poisson_quantile(pnorm(z(m)), mg.a);
          break;
      }
      t.values[static_cast<std::size_t>(i) * M + m] = x;
    }
  }

  SynthData out;
  out.tensor = std::move(t);
  out.truth.model = "copula";
  out.truth.seed = spec.seed;
  out.truth.correlation = spec.correlation;
  out.truth.marginals = spec.marginals;
  return out;
}

}  // namespace mm
