#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "metametrics/error.hpp"
#include "metametrics/io.hpp"
#include "metametrics/shrinkage.hpp"

using namespace mm;
namespace fs = std::filesystem;

namespace {

bool same_or_both_nan(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

fs::path scratch(const char* name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("content_hash matches known FNV-1a 64 vectors") {
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
  CHECK(content_hash("foobar") == "85944171f73967e8");
  CHECK(content_hash("foobar") != content_hash("foobaz"));
}

TEST_CASE("format_double picks the shortest round-trip form") {
  CHECK(format_double(std::nan("")) == "");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(0.0) == "0");
  for (double x : {1.0 / 3.0, -2.5e-7, 6.02214076e23, 1.5, -0.0, 42.0,
                   0.30000000000000004}) {
    std::string s = format_double(x);
    REQUIRE(!s.empty());
    CHECK(std::stod(s) == x);
  }
  // adjacent doubles keep distinct text
  CHECK(format_double(0.1) != format_double(std::nextafter(0.1, 1.0)));
}

TEST_CASE("text and json files round-trip and fail loudly") {
  fs::path p = scratch("mm_io_test.txt");
  write_text_file(p.string(), "line1\nline2\x01\xff");
  CHECK(read_text_file(p.string()) == "line1\nline2\x01\xff");
  fs::remove(p);

  try {
    read_text_file((scratch("mm_io_missing_dir") / "nope.txt").string());
    FAIL("expected missing file to throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
    CHECK(std::string(e.what()).find("nope.txt") != std::string::npos);
  }

  fs::path jp = scratch("mm_io_test.json");
  write_json_file(jp.string(), {{"k", 1}, {"arr", {1, 2, 3}}});
  std::string text = read_text_file(jp.string());
  CHECK(text.back() == '\n');
  nlohmann::json j = read_json_file(jp.string());
  CHECK(j["k"] == 1);
  CHECK(j["arr"].size() == 3);

  write_text_file(jp.string(), "{not valid json");
  try {
    read_json_file(jp.string());
    FAIL("expected malformed json to throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
  fs::remove(jp);
}

TEST_CASE("matrices serialize NaN entries as nulls") {
  Eigen::MatrixXd m(2, 3);
  m << 1.0, mmtest::kNan, -0.5, 2.25, 1e-300, 0.0;
  nlohmann::json j = matrix_to_json(m);
  CHECK(j[0][1].is_null());
  Eigen::MatrixXd back = matrix_from_json(j);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 3; ++c) CHECK(same_or_both_nan(m(i, c), back(i, c)));

  CHECK(matrix_from_json(nlohmann::json::array()).size() == 0);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse("5")), Error);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse("[[1,2],[3]]")), Error);
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse("[[1,\"x\"]]")), Error);
}

namespace {

MetricTensor sample_tensor() {
  MetricTensor t = mmtest::build_tensor(
      {"2021", "2022"}, {"P1", "P2"}, {"FG%", "PTS"},
      {MetricKind::percentage, MetricKind::total},
      {0.5, 10.0, mmtest::kNan, mmtest::kNan,
       0.25, 12.5, 0.75, 30.0});
  t.attempts[t.index(0, 0, 0)] = 8.0;
  t.attempts[t.index(1, 0, 0)] = 4.0;
  t.attempts[t.index(1, 1, 0)] = 16.0;
  t.exposure_stat = "MIN";
  t.exposure[t.cell(0, 0)] = 120.0;
  t.exposure[t.cell(1, 0)] = 90.5;
  t.exposure[t.cell(1, 1)] = 200.0;
  t.games[t.cell(0, 0)] = 5;
  t.games[t.cell(1, 0)] = 4;
  t.games[t.cell(1, 1)] = 9;
  t.player_names["P1"] = "Ann Archer";
  return t;
}

}  // namespace

TEST_CASE("tensor json round-trips values, gaps, and names") {
  MetricTensor t = sample_tensor();
  nlohmann::json j = tensor_to_json(t);
  CHECK(j["format"] == "metric-tensor");
  CHECK(j["values"][0][1][0].is_null());
  CHECK(j["metrics"][0]["kind"] == "percentage");
  CHECK(j["player_names"][1] == "");

  MetricTensor back = tensor_from_json(j);
  CHECK(back.seasons == t.seasons);
  CHECK(back.players == t.players);
  CHECK(back.metrics == t.metrics);
  CHECK(back.kinds == t.kinds);
  CHECK(back.exposure_stat == "MIN");
  CHECK(back.player_names == t.player_names);
  CHECK(back.games == t.games);
  REQUIRE(back.values.size() == t.values.size());
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    CHECK(same_or_both_nan(t.values[i], back.values[i]));
    CHECK(same_or_both_nan(t.attempts[i], back.attempts[i]));
  }
  for (std::size_t i = 0; i < t.exposure.size(); ++i) {
    CHECK(same_or_both_nan(t.exposure[i], back.exposure[i]));
  }
}

TEST_CASE("tensor json rejects malformed documents") {
  nlohmann::json j = tensor_to_json(sample_tensor());

  nlohmann::json wrong = j;
  wrong["format"] = "something-else";
  CHECK_THROWS_WITH_AS(tensor_from_json(wrong),
                       doctest::Contains("not a metric-tensor"), Error);

  wrong = j;
  wrong.erase("values");
  CHECK_THROWS_WITH_AS(tensor_from_json(wrong),
                       doctest::Contains("missing field 'values'"), Error);

  wrong = j;
  wrong["metrics"][0]["kind"] = "fraction";
  CHECK_THROWS_WITH_AS(tensor_from_json(wrong),
                       doctest::Contains("unknown metric kind"), Error);

  wrong = j;
  wrong["values"][0][0][0] = "oops";
  CHECK_THROWS_AS(tensor_from_json(wrong), Error);

  wrong = j;
  wrong["games"][0][0] = 2.5;
  CHECK_THROWS_WITH_AS(tensor_from_json(wrong),
                       doctest::Contains("integers"), Error);

  wrong = j;
  wrong["values"][0].erase(1);
  CHECK_THROWS_AS(tensor_from_json(wrong), Error);
}

namespace {

BootstrapVariance sample_bv() {
  BootstrapVariance bv;
  bv.seasons = {"2021"};
  bv.players = {"P1", "P2", "P3"};
  bv.metrics = {"FG%"};
  bv.replicates = 200;
  bv.seed = 42;
  bv.bv = {0.25, mmtest::kNan, mmtest::kNan};
  bv.replicates_used = {200, 3, 0};
  bv.observed = {1, 1, 0};
  bv.warnings = {"metric 'FG%': 1 entries lost too many replicates; no variance estimate"};
  return bv;
}

}  // namespace

TEST_CASE("bootstrap variance json round-trips exclusions") {
  BootstrapVariance bv = sample_bv();
  nlohmann::json j = bv_to_json(bv);
  CHECK(j["format"] == "bootstrap-variance");
  CHECK(j["bv"][0][1][0].is_null());
  CHECK(j["observed"][0][2][0] == false);

  BootstrapVariance back = bv_from_json(j);
  CHECK(back.seasons == bv.seasons);
  CHECK(back.players == bv.players);
  CHECK(back.metrics == bv.metrics);
  CHECK(back.replicates == 200);
  CHECK(back.seed == 42);
  CHECK(back.warnings == bv.warnings);
  CHECK(back.replicates_used == bv.replicates_used);
  CHECK(back.observed == bv.observed);
  for (std::size_t i = 0; i < bv.bv.size(); ++i) {
    CHECK(same_or_both_nan(bv.bv[i], back.bv[i]));
  }

  nlohmann::json wrong = j;
  wrong["format"] = "tensor";
  CHECK_THROWS_AS(bv_from_json(wrong), Error);
  wrong = j;
  wrong["observed"][0][0][0] = 1;
  CHECK_THROWS_WITH_AS(bv_from_json(wrong), doctest::Contains("boolean"), Error);
}

TEST_CASE("bootstrap variance csv lists base-observed entries only") {
  std::ostringstream os;
  write_bv_csv(os, sample_bv());
  CHECK(os.str() ==
        "season,player_id,metric,bv,replicates_used\n"
        "2021,P1,FG%,0.25,200\n"
        "2021,P2,FG%,,3\n");
}

TEST_CASE("meta results serialize scores and per-season columns") {
  MetaResult r;
  MetaScore sc;
  sc.metric = "FG,raw";  // force csv quoting
  sc.kind = MetricKind::percentage;
  sc.discrimination = 0.75;
  sc.discrimination_raw = 0.875;
  sc.stability = 0.5;
  sc.stability_raw = -0.125;
  sc.stability_players = 41;
  sc.player_seasons = 82;
  SeasonDiscrimination d1;
  d1.season = "2021";
  d1.raw = 1.25;
  d1.clamped = 1.0;
  d1.players = 40;
  SeasonDiscrimination d2;
  d2.season = "2022";
  d2.raw = 0.75;
  d2.clamped = 0.75;
  d2.players = 42;
  sc.seasons = {d1, d2};
  r.scores.push_back(sc);
  r.warnings = {"something odd"};

  nlohmann::json j = meta_to_json(r);
  CHECK(j["format"] == "meta-scores");
  CHECK(j["scores"][0]["metric"] == "FG,raw");
  CHECK(j["scores"][0]["stability_raw"] == -0.125);
  CHECK(j["scores"][0]["seasons"][1]["discrimination"] == 0.75);
  CHECK(j["warnings"][0] == "something odd");

  std::ostringstream os;
  write_meta_csv(os, r);
  CHECK(os.str() ==
        "metric,kind,discrimination,discrimination_raw,stability,stability_raw,"
        "stability_players,player_seasons,D_2021,D_2022\n"
        "\"FG,raw\",percentage,0.75,0.875,0.5,-0.125,41,82,1,0.75\n");
}

TEST_CASE("latent correlation json keeps the posterior mean but drops draws") {
  LatentCorrelation corr;
  corr.metrics = {"A", "B"};
  corr.mean = Eigen::MatrixXd::Identity(2, 2);
  corr.mean(0, 1) = corr.mean(1, 0) = 0.625;
  corr.draws = {corr.mean, corr.mean};
  corr.config.iterations = 120;
  corr.config.burnin = 40;
  corr.config.thin = 4;
  corr.config.seed = 31;
  corr.rows_used = 392;
  corr.warnings = {"w"};

  nlohmann::json j = correlation_to_json(corr);
  CHECK(j["format"] == "latent-correlation");
  CHECK(j["draws_recorded"] == 2);
  CHECK(j["config"]["thin"] == 4);

  LatentCorrelation back = correlation_from_json(j);
  CHECK(back.metrics == corr.metrics);
  CHECK((back.mean - corr.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.draws.empty());
  CHECK(back.rows_used == 392);
  CHECK(back.config.iterations == 120);
  CHECK(back.config.burnin == 40);
  CHECK(back.config.seed == 31);
  CHECK(back.warnings == corr.warnings);

  nlohmann::json wrong = j;
  wrong["mean"] = matrix_to_json(Eigen::MatrixXd::Identity(3, 2));
  CHECK_THROWS_WITH_AS(correlation_from_json(wrong),
                       doctest::Contains("square"), Error);
}

TEST_CASE("independence curves and pca serialize for the report") {
  IndependenceCurve curve;
  curve.metric = "eFG%";
  IndependencePoint a;
  a.set_size = 1;
  a.score = 0.36;
  a.conditioning = {"TS%"};
  IndependencePoint b;
  b.set_size = 0;
  b.score = 1.0;
  curve.points = {a, b};
  nlohmann::json cj = curve_to_json(curve);
  CHECK(cj["metric"] == "eFG%");
  CHECK(cj["points"][0]["conditioning"][0] == "TS%");
  CHECK(cj["points"][1]["score"] == 1.0);

  PcaResult pr;
  pr.eigenvalues = {3.0, 0.5};
  pr.cumulative_fraction = {6.0 / 7.0, 1.0};
  pr.eigenvectors = Eigen::MatrixXd::Identity(2, 2);
  std::vector<std::string> names = {"A", "B"};
  nlohmann::json pj = pca_to_json(pr, names);
  CHECK(pj["metrics"] == nlohmann::json({"A", "B"}));
  CHECK(pj["eigenvalues"][0] == 3.0);
  CHECK(pj["cumulative_fraction"][1] == 1.0);
  CHECK(pj["loadings"][1][1] == 1.0);

  ClusterTree tree;
  tree.leaves = {"A", "B"};
  ClusterMerge m;
  m.left = 0;
  m.right = 1;
  m.height = 0.25;
  m.size = 2;
  tree.merges = {m};
  nlohmann::json tj = cluster_to_json(tree);
  CHECK(tj["leaves"].size() == 2);
  CHECK(tj["merges"][0]["height"] == 0.25);
  std::string nw = tj["newick"].get<std::string>();
  CHECK(nw == tree.newick());
  CHECK(nw.back() == ';');
}

TEST_CASE("shrinkage fits serialize as json and csv") {
  MetricTensor t = mmtest::build_tensor(
      {"2021", "2022"}, {"P1", "P9"}, {"FG%"}, {MetricKind::percentage},
      {0.25, 1.0, 0.75, 1.0});
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t p = 0; p < 2; ++p) t.attempts[t.index(s, p, 0)] = 8.0;
  ShrinkageFit fit = fit_shrinkage(t, "FG%");
  REQUIRE(fit.players.size() == 2);

  nlohmann::json j = shrinkage_to_json(fit);
  CHECK(j["format"] == "shrinkage-fit");
  CHECK(j["metric"] == "FG%");
  CHECK(j["players"].size() == 2);
  CHECK(j["players"][0]["player"] == "P1");
  CHECK(j["players"][0]["career_rate"] == 0.5);
  CHECK(j["players"][0]["raw"][0] == 0.25);
  // P9 is all makes: no concentration, shrunk == raw
  CHECK(j["players"][1]["concentration"].is_null());
  CHECK(j["players"][1]["shrunk"][1] == 1.0);

  std::ostringstream players_csv;
  write_shrinkage_players_csv(players_csv, fit);
  std::string pc = players_csv.str();
  CHECK(pc.find("player_id,seasons,makes,attempts,career_rate,concentration,"
                "log_marginal\n") == 0);
  CHECK(pc.find("P1,2,8,16,0.5,") != std::string::npos);
  CHECK(pc.find("P9,2,16,16,1,,0\n") != std::string::npos);

  std::ostringstream seasons_csv;
  write_shrinkage_seasons_csv(seasons_csv, fit);
  std::string sc = seasons_csv.str();
  CHECK(sc.find("player_id,season,makes,attempts,raw,shrunk\n") == 0);
  CHECK(sc.find("P1,2021,2,8,0.25,") != std::string::npos);
  CHECK(sc.find("P9,2022,8,8,1,1\n") != std::string::npos);
}

TEST_CASE("synthetic truth json varies by model") {
  SynthTruth mixed;
  mixed.model = "mixed_effects";
  mixed.seed = 7;
  mixed.params = {100.0, 1.0, 2.0, 1.0, 1.0};
  mixed.closed_discrimination = 0.75;
  mixed.closed_stability = 0.5;
  nlohmann::json mj = truth_to_json(mixed);
  CHECK(mj["format"] == "synthetic-truth");
  CHECK(mj["model"] == "mixed_effects");
  CHECK(mj["params"]["player_var"] == 2.0);
  CHECK(mj["closed_discrimination"] == 0.75);
  CHECK(!mj.contains("career_rates"));

  SynthTruth binom;
  binom.model = "binomial_league";
  binom.career_rates = {0.35, 0.4};
  binom.season_rates = {{0.35}, {0.42}};
  nlohmann::json bj = truth_to_json(binom);
  CHECK(!bj.contains("params"));
  CHECK(bj["career_rates"][1] == 0.4);
  CHECK(bj["season_rates"][1][0] == 0.42);
  CHECK(bj["closed_discrimination"].is_null());

  SynthTruth cop;
  cop.model = "copula";
  cop.correlation = Eigen::MatrixXd::Identity(2, 2);
  cop.marginals = {{Marginal::Kind::lognormal, 0.0, 0.5},
                   {Marginal::Kind::counts, 2.0, 0.0}};
  nlohmann::json cj = truth_to_json(cop);
  CHECK(cj["correlation"][0][0] == 1.0);
  CHECK(cj["marginals"][0]["kind"] == "lognormal");
  CHECK(cj["marginals"][1]["kind"] == "counts");
  CHECK(cj["marginals"][1]["a"] == 2.0);
}

TEST_CASE("pc score csv skips players with no scores and quotes names") {
  PcScores scores;
  scores.seasons = {"2021"};
  scores.players = {"P1", "P2", "P3"};
  scores.components = {"PC1", "PC2"};
  scores.w = {1.5, -0.25,
              mmtest::kNan, mmtest::kNan,
              0.5, mmtest::kNan};
  scores.player_names["P1"] = "Smith, Jo";

  std::ostringstream os;
  write_pc_scores_csv(os, scores);
  CHECK(os.str() ==
        "season,player_id,player_name,PC1,PC2\n"
        "2021,P1,\"Smith, Jo\",1.5,-0.25\n"
        "2021,P3,,0.5,\n");
}

}  // TEST_SUITE
