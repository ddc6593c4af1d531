#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "metametrics/error.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/stats.hpp"
#include "metametrics/synth.hpp"
#include "metametrics/tensor.hpp"

using namespace mm;

namespace {

MetricTensor aggregate_plain(const SynthData& data) {
  return aggregate_and_evaluate(*data.log, data.definitions,
                                AggregateOptions{.exposure_stat = ""})
      .tensor;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("mixed-effects league is deterministic and carries its closed forms") {
  MixedEffectsSynthSpec spec;
  spec.players = 6;
  spec.seasons = 3;
  spec.games = 4;
  spec.params = {50.0, 1.0, 2.0, 0.5, 1.0};
  spec.seed = 77;

  SynthData a = generate(spec);
  SynthData b = generate(spec);
  CHECK(a.truth.model == "mixed_effects");
  CHECK(a.truth.seed == 77);
  CHECK(a.truth.closed_discrimination ==
        closed_form_discrimination(spec.params));
  CHECK(a.truth.closed_stability == closed_form_stability(spec.params));
  CHECK(a.truth.closed_discrimination == doctest::Approx(2.5 / 3.5));
  CHECK(a.truth.closed_stability == doctest::Approx(2.0 / 3.5));

  MetricTensor ta = aggregate_plain(a);
  MetricTensor tb = aggregate_plain(b);
  REQUIRE(ta.metrics == std::vector<std::string>{"X1"});
  CHECK(ta.kinds[0] == MetricKind::rate);
  CHECK(ta.seasons == std::vector<std::string>{"S1", "S2", "S3"});
  CHECK(ta.players.size() == 6);
  CHECK(ta.players[0] == "P1");
  CHECK(ta.player_names.at("P1") == "Player P1");
  for (std::size_t i = 0; i < ta.values.size(); ++i) {
    CHECK(ta.values[i] == tb.values[i]);
  }
  for (std::size_t c = 0; c < ta.games.size(); ++c) CHECK(ta.games[c] == 4);

  spec.seed = 78;
  MetricTensor tc = aggregate_plain(generate(spec));
  double diff = 0.0;
  for (std::size_t i = 0; i < ta.values.size(); ++i) {
    diff = std::max(diff, std::abs(ta.values[i] - tc.values[i]));
  }
  CHECK(diff > 0.0);
}

TEST_CASE("mixed-effects game values refuse to go negative") {
  MixedEffectsSynthSpec spec;
  spec.players = 2;
  spec.seasons = 1;
  spec.games = 2;
  spec.params = {-100.0, 0.0, 0.0, 0.0, 1.0};
  spec.seed = 1;
  CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("negative"), Error);

  spec.params = {100.0, -1.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(generate(spec), Error);
  spec.params = {100.0, 0.0, 0.0, 0.0, 1.0};
  spec.players = 0;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("binomial league respects per-game attempt budgets") {
  BinomialLeagueSynthSpec spec;
  spec.players = 12;
  spec.seasons = 2;
  spec.games = 6;
  spec.attempts_per_game = 5;
  spec.ability_alpha = 8.0;
  spec.ability_beta = 12.0;
  spec.season_concentration = 50.0;
  spec.seed = 415;

  SynthData data = generate(spec);
  CHECK(data.truth.model == "binomial_league");
  REQUIRE(data.truth.career_rates.size() == 12);
  REQUIRE(data.truth.season_rates.size() == 12);
  REQUIRE(data.truth.season_rates[0].size() == 2);

  MetricTensor t = aggregate_plain(data);
  REQUIRE(t.metrics == std::vector<std::string>{"FG%"});
  CHECK(t.kinds[0] == MetricKind::percentage);
  CHECK(t.players[0] == "P01");
  CHECK(t.players[11] == "P12");
  for (std::size_t s = 0; s < t.season_count(); ++s) {
    for (std::size_t p = 0; p < t.player_count(); ++p) {
      std::size_t at = t.index(s, p, 0);
      CHECK(t.attempts[at] == 30.0);
      CHECK(t.values[at] >= 0.0);
      CHECK(t.values[at] <= 1.0);
      // season totals of made shots are integers
      double makes = t.values[at] * t.attempts[at];
      CHECK(std::abs(makes - std::round(makes)) < 1e-9);
    }
  }
  for (double c : data.truth.career_rates) {
    CHECK(c > 0.0);
    CHECK(c < 1.0);
  }

  SynthData again = generate(spec);
  for (std::size_t p = 0; p < 12; ++p) {
    CHECK(again.truth.career_rates[p] == data.truth.career_rates[p]);
  }
}

TEST_CASE("zero season concentration pins every season to the career rate") {
  BinomialLeagueSynthSpec spec;
  spec.players = 5;
  spec.seasons = 3;
  spec.games = 4;
  spec.season_concentration = 0.0;
  spec.seed = 9;
  SynthData data = generate(spec);
  for (int p = 0; p < 5; ++p) {
    for (int s = 0; s < 3; ++s) {
      CHECK(data.truth.season_rates[p][s] == data.truth.career_rates[p]);
    }
  }

  spec.season_concentration = 30.0;
  SynthData wobbly = generate(spec);
  bool moved = false;
  for (int p = 0; p < 5; ++p) {
    for (int s = 0; s < 3; ++s) {
      if (wobbly.truth.season_rates[p][s] != wobbly.truth.career_rates[p]) {
        moved = true;
      }
    }
  }
  CHECK(moved);
}

TEST_CASE("binomial league validates its spec") {
  BinomialLeagueSynthSpec spec;
  spec.attempts_per_game = 0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.ability_alpha = 0.0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.season_concentration = -1.0;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.seasons = 0;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("copula league transforms latent normals through each marginal") {
  Eigen::MatrixXd C(4, 4);
  C.setIdentity();
  C(0, 1) = C(1, 0) = 0.8;
  C(2, 3) = C(3, 2) = -0.4;

  CopulaSynthSpec spec;
  spec.rows = 3000;
  spec.correlation = C;
  spec.marginals = {{Marginal::Kind::normal, 1.0, 2.0},
                    {Marginal::Kind::lognormal, 0.0, 0.5},
                    {Marginal::Kind::uniform, -1.0, 3.0},
                    {Marginal::Kind::counts, 2.5, 0.0}};
  spec.seed = 33;

  SynthData data = generate(spec);
  REQUIRE(data.tensor.has_value());
  const MetricTensor& t = *data.tensor;
  CHECK(t.metrics == std::vector<std::string>{"X1", "X2", "X3", "X4"});
  CHECK(t.seasons == std::vector<std::string>{"S1"});
  CHECK(t.players.size() == 3000);
  CHECK(t.players[0] == "P0001");
  CHECK((data.truth.correlation - C).cwiseAbs().maxCoeff() == 0.0);

  RunningMoments normal_m;
  for (std::size_t p = 0; p < t.player_count(); ++p) {
    double x1 = t.values[t.index(0, p, 0)];
    double x2 = t.values[t.index(0, p, 1)];
    double x3 = t.values[t.index(0, p, 2)];
    double x4 = t.values[t.index(0, p, 3)];
    normal_m.add(x1);
    CHECK(x2 > 0.0);
    CHECK(x3 >= -1.0);
    CHECK(x3 <= 3.0);
    CHECK(x4 >= 0.0);
    CHECK(x4 == std::round(x4));
  }
  CHECK(normal_m.mean() == doctest::Approx(1.0).epsilon(0.15));
  CHECK(normal_m.variance() == doctest::Approx(4.0).epsilon(0.15));

  // latent correlation survives the monotone transforms in rank terms; for
  // the two normal-ish columns the plain correlation is close to C(0,1)
  RunningMoments m1, m2;
  double cross = 0.0;
  for (std::size_t p = 0; p < t.player_count(); ++p) {
    double a = t.values[t.index(0, p, 0)];
    double b = std::log(t.values[t.index(0, p, 1)]);
    m1.add(a);
    m2.add(b);
    cross += a * b;
  }
  double n = static_cast<double>(t.player_count());
  double cov = (cross - n * m1.mean() * m2.mean()) / (n - 1.0);
  double corr = cov / std::sqrt(m1.variance() * m2.variance());
  CHECK(corr == doctest::Approx(0.8).epsilon(0.08));

  SynthData again = generate(spec);
  double diff = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    diff = std::max(diff, std::abs(t.values[i] - again.tensor->values[i]));
  }
  CHECK(diff == 0.0);
}

TEST_CASE("copula league accepts custom metric names") {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
  CopulaSynthSpec spec;
  spec.rows = 10;
  spec.correlation = C;
  spec.marginals = {{Marginal::Kind::normal, 0.0, 1.0},
                    {Marginal::Kind::normal, 0.0, 1.0}};
  spec.metric_names = {"PTS", "AST"};
  SynthData data = generate(spec);
  CHECK(data.tensor->metrics == std::vector<std::string>{"PTS", "AST"});
}

TEST_CASE("copula league validates its spec") {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
  std::vector<Marginal> normals = {{Marginal::Kind::normal, 0.0, 1.0},
                                   {Marginal::Kind::normal, 0.0, 1.0}};

  CopulaSynthSpec spec;
  spec.rows = 100;
  spec.correlation = Eigen::MatrixXd::Zero(2, 3);
  spec.marginals = normals;
  CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("square"), Error);

  spec.correlation = C;
  spec.marginals = {normals[0]};
  CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("marginal"), Error);

  spec.marginals = normals;
  spec.rows = 1;
  CHECK_THROWS_AS(generate(spec), Error);

  spec.rows = 100;
  spec.metric_names = {"only_one"};
  CHECK_THROWS_AS(generate(spec), Error);
  spec.metric_names.clear();

  spec.marginals = {{Marginal::Kind::normal, 0.0, 0.0}, normals[1]};
  CHECK_THROWS_AS(generate(spec), Error);
  spec.marginals = {{Marginal::Kind::uniform, 2.0, 2.0}, normals[1]};
  CHECK_THROWS_AS(generate(spec), Error);
  spec.marginals = {{Marginal::Kind::counts, 0.0, 0.0}, normals[1]};
  CHECK_THROWS_AS(generate(spec), Error);

  spec.marginals = normals;
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 1.2, 1.2, 1.0;
  spec.correlation = bad;
  try {
    generate(spec);
    FAIL("expected indefinite correlation to throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_positive_definite);
  }
}

}  // TEST_SUITE
