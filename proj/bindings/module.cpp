#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "metametrics/bootstrap.hpp"
#include "metametrics/dependence.hpp"
#include "metametrics/dsl.hpp"
#include "metametrics/error.hpp"
#include "metametrics/io.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/model.hpp"
#include "metametrics/shrinkage.hpp"
#include "metametrics/stats.hpp"
#include "metametrics/synth.hpp"
#include "metametrics/tensor.hpp"
#include "metametrics/version.hpp"

namespace py = pybind11;

namespace {

py::array_t<double> grid3(const std::vector<double>& v, std::size_t S,
                          std::size_t P, std::size_t M) {
  py::array_t<double> a({S, P, M});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> grid2(const std::vector<double>& v, std::size_t S,
                          std::size_t P) {
  py::array_t<double> a({S, P});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<std::int32_t> grid3i(const std::vector<std::int32_t>& v,
                                 std::size_t S, std::size_t P, std::size_t M) {
  py::array_t<std::int32_t> a({S, P, M});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "meta-metrics for player performance measures";
  m.attr("__version__") = mm::kVersion;

  static py::exception<mm::Error> exc(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mm::Error& e) {
      py::set_error(exc,
                    (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<mm::MetricKind>(m, "MetricKind")
      .value("total", mm::MetricKind::total)
      .value("rate", mm::MetricKind::rate)
      .value("percentage", mm::MetricKind::percentage);

  py::class_<mm::MetricDefinition>(m, "MetricDefinition")
      .def_readonly("name", &mm::MetricDefinition::name)
      .def_readonly("kind", &mm::MetricDefinition::kind)
      .def_readonly("attempts_stat", &mm::MetricDefinition::attempts_stat)
      .def("__str__",
           [](const mm::MetricDefinition& d) { return mm::to_string(d); })
      .def("__repr__", [](const mm::MetricDefinition& d) {
        return "<MetricDefinition " + mm::to_string(d) + ">";
      });

  m.def("parse_metric",
        [](const std::string& s) { return mm::parse_metric(s); },
        py::arg("source"), "Parse one metric definition line");
  m.def("parse_metric_file",
        [](const std::string& path) { return mm::parse_metric_file(path); },
        py::arg("path"), "Parse a metric definitions file");

  py::class_<mm::GameLog>(m, "GameLog")
      .def_static("read_csv",
                  [](const std::string& path) { return mm::GameLog::read_csv(path); },
                  py::arg("path"))
      .def("write_csv",
           [](const mm::GameLog& g, const std::string& path) { g.write_csv(path); },
           py::arg("path"))
      .def_property_readonly("rows", &mm::GameLog::rows)
      .def_property_readonly("stat_names", &mm::GameLog::stat_names)
      .def_property_readonly("seasons", &mm::GameLog::seasons)
      .def_property_readonly("players", &mm::GameLog::players)
      .def_property_readonly("teams", &mm::GameLog::teams);

  py::class_<mm::MetricTensor>(m, "MetricTensor")
      .def_readonly("seasons", &mm::MetricTensor::seasons)
      .def_readonly("players", &mm::MetricTensor::players)
      .def_readonly("metrics", &mm::MetricTensor::metrics)
      .def_readonly("kinds", &mm::MetricTensor::kinds)
      .def_readonly("exposure_stat", &mm::MetricTensor::exposure_stat)
      .def_readonly("player_names", &mm::MetricTensor::player_names)
      .def("values",
           [](const mm::MetricTensor& t) {
             return grid3(t.values, t.season_count(), t.player_count(),
                          t.metric_count());
           },
           "Season values as a (seasons, players, metrics) array, NaN missing")
      .def("attempts",
           [](const mm::MetricTensor& t) {
             return grid3(t.attempts, t.season_count(), t.player_count(),
                          t.metric_count());
           })
      .def("exposure",
           [](const mm::MetricTensor& t) {
             return grid2(t.exposure, t.season_count(), t.player_count());
           })
      .def("filter_players",
           [](const mm::MetricTensor& t, const std::vector<std::string>& keep) {
             return t.filter_players(keep);
           },
           py::arg("keep"));

  m.def("tensor_to_json",
        [](const mm::MetricTensor& t) { return mm::tensor_to_json(t).dump(2); },
        py::arg("tensor"), "Serialize a tensor to a JSON string");
  m.def("tensor_from_json",
        [](const std::string& text) {
          return mm::tensor_from_json(nlohmann::json::parse(text));
        },
        py::arg("text"), "Parse a tensor from a JSON string");

  py::class_<mm::AggregateResult>(m, "AggregateResult")
      .def_readonly("tensor", &mm::AggregateResult::tensor)
      .def_readonly("warnings", &mm::AggregateResult::warnings);

  m.def("aggregate_and_evaluate",
        [](const mm::GameLog& log, const std::vector<mm::MetricDefinition>& defs,
           const std::string& exposure_stat) {
          return mm::aggregate_and_evaluate(
              log, defs, mm::AggregateOptions{.exposure_stat = exposure_stat});
        },
        py::arg("log"), py::arg("definitions"), py::arg("exposure_stat") = "MIN",
        "Sum game lines per (season, player) and evaluate every metric");

  py::class_<mm::ShrinkageOptions>(m, "ShrinkageOptions")
      .def(py::init<>())
      .def_readwrite("log_r_lo", &mm::ShrinkageOptions::log_r_lo)
      .def_readwrite("log_r_hi", &mm::ShrinkageOptions::log_r_hi)
      .def_readwrite("tolerance", &mm::ShrinkageOptions::tolerance)
      .def_readwrite("grid_points", &mm::ShrinkageOptions::grid_points);

  py::class_<mm::EbColumn>(m, "EbColumn")
      .def(py::init([](const std::string& source, const std::string& name,
                       const mm::ShrinkageOptions& options) {
             return mm::EbColumn{source, name, options};
           }),
           py::arg("source_metric"), py::arg("name"),
           py::arg("options") = mm::ShrinkageOptions{})
      .def_readonly("source_metric", &mm::EbColumn::source_metric)
      .def_readonly("name", &mm::EbColumn::name);

  py::class_<mm::BootstrapConfig>(m, "BootstrapConfig")
      .def(py::init<>())
      .def_readwrite("replicates", &mm::BootstrapConfig::replicates)
      .def_readwrite("seed", &mm::BootstrapConfig::seed)
      .def_readwrite("max_excluded_fraction",
                     &mm::BootstrapConfig::max_excluded_fraction)
      .def_readwrite("exposure_stat", &mm::BootstrapConfig::exposure_stat);

  py::class_<mm::BootstrapVariance>(m, "BootstrapVariance")
      .def_readonly("seasons", &mm::BootstrapVariance::seasons)
      .def_readonly("players", &mm::BootstrapVariance::players)
      .def_readonly("metrics", &mm::BootstrapVariance::metrics)
      .def_readonly("replicates", &mm::BootstrapVariance::replicates)
      .def_readonly("seed", &mm::BootstrapVariance::seed)
      .def_readonly("warnings", &mm::BootstrapVariance::warnings)
      .def("bv",
           [](const mm::BootstrapVariance& b) {
             return grid3(b.bv, b.seasons.size(), b.players.size(),
                          b.metrics.size());
           },
           "Sampling variance per entry, NaN where no estimate survived")
      .def("replicates_used", [](const mm::BootstrapVariance& b) {
        return grid3i(b.replicates_used, b.seasons.size(), b.players.size(),
                      b.metrics.size());
      });

  m.def("bootstrap_variance",
        [](const mm::GameLog& log, const std::vector<mm::MetricDefinition>& defs,
           const mm::BootstrapConfig& config,
           const std::vector<mm::EbColumn>& eb_columns) {
          return mm::bootstrap_variance(log, defs, config, eb_columns);
        },
        py::arg("log"), py::arg("definitions"), py::arg("config"),
        py::arg("eb_columns") = std::vector<mm::EbColumn>{},
        "Per-entry sampling variance by resampling games within (season, team)");

  py::class_<mm::MixedEffectsParams>(m, "MixedEffectsParams")
      .def(py::init([](double grand_mean, double season_var, double player_var,
                       double interaction_var, double noise_var) {
             return mm::MixedEffectsParams{grand_mean, season_var, player_var,
                                           interaction_var, noise_var};
           }),
           py::arg("grand_mean") = 0.0, py::arg("season_var") = 0.0,
           py::arg("player_var") = 0.0, py::arg("interaction_var") = 0.0,
           py::arg("noise_var") = 0.0)
      .def_readwrite("grand_mean", &mm::MixedEffectsParams::grand_mean)
      .def_readwrite("season_var", &mm::MixedEffectsParams::season_var)
      .def_readwrite("player_var", &mm::MixedEffectsParams::player_var)
      .def_readwrite("interaction_var", &mm::MixedEffectsParams::interaction_var)
      .def_readwrite("noise_var", &mm::MixedEffectsParams::noise_var);

  m.def("closed_form_discrimination", &mm::closed_form_discrimination,
        py::arg("params"));
  m.def("closed_form_stability", &mm::closed_form_stability, py::arg("params"));

  py::enum_<mm::MomentConvention>(m, "MomentConvention")
      .value("unbiased", mm::MomentConvention::unbiased)
      .value("population", mm::MomentConvention::population);

  py::class_<mm::MetaOptions>(m, "MetaOptions")
      .def(py::init<>())
      .def_readwrite("moments", &mm::MetaOptions::moments)
      .def_readwrite("min_exposure_rate", &mm::MetaOptions::min_exposure_rate)
      .def_readwrite("min_exposure_total", &mm::MetaOptions::min_exposure_total)
      .def_readwrite("min_exposure_percentage",
                     &mm::MetaOptions::min_exposure_percentage)
      .def_readwrite("min_seasons", &mm::MetaOptions::min_seasons);

  py::class_<mm::SeasonDiscrimination>(m, "SeasonDiscrimination")
      .def_readonly("season", &mm::SeasonDiscrimination::season)
      .def_readonly("raw", &mm::SeasonDiscrimination::raw)
      .def_readonly("clamped", &mm::SeasonDiscrimination::clamped)
      .def_readonly("players", &mm::SeasonDiscrimination::players);

  py::class_<mm::MetaScore>(m, "MetaScore")
      .def_readonly("metric", &mm::MetaScore::metric)
      .def_readonly("kind", &mm::MetaScore::kind)
      .def_readonly("seasons", &mm::MetaScore::seasons)
      .def_readonly("discrimination", &mm::MetaScore::discrimination)
      .def_readonly("discrimination_raw", &mm::MetaScore::discrimination_raw)
      .def_readonly("stability", &mm::MetaScore::stability)
      .def_readonly("stability_raw", &mm::MetaScore::stability_raw)
      .def_readonly("stability_players", &mm::MetaScore::stability_players)
      .def_readonly("player_seasons", &mm::MetaScore::player_seasons);

  py::class_<mm::MetaResult>(m, "MetaResult")
      .def_readonly("scores", &mm::MetaResult::scores)
      .def_readonly("warnings", &mm::MetaResult::warnings);

  m.def("compute_meta", &mm::compute_meta, py::arg("tensor"), py::arg("bv"),
        py::arg("options") = mm::MetaOptions{},
        "Discrimination and stability for every metric");
  m.def("conditional_scores",
        [](const mm::MetricTensor& tensor, const mm::BootstrapVariance& bv,
           const std::vector<std::string>& players, const mm::MetaOptions& options) {
          return mm::conditional_scores(tensor, bv, players, options);
        },
        py::arg("tensor"), py::arg("bv"), py::arg("players"),
        py::arg("options") = mm::MetaOptions{},
        "Meta scores restricted to a player subset");
  m.def("discrimination", &mm::discrimination, py::arg("tensor"), py::arg("bv"),
        py::arg("season"), py::arg("metric"), py::arg("options") = mm::MetaOptions{});
  m.def("stability", &mm::stability, py::arg("tensor"), py::arg("bv"),
        py::arg("metric"), py::arg("options") = mm::MetaOptions{});

  py::class_<mm::LatentScores>(m, "LatentScores")
      .def_readonly("seasons", &mm::LatentScores::seasons)
      .def_readonly("players", &mm::LatentScores::players)
      .def_readonly("metrics", &mm::LatentScores::metrics)
      .def("z", [](const mm::LatentScores& s) {
        return grid3(s.z, s.seasons.size(), s.players.size(), s.metrics.size());
      });

  m.def("latent_scores", &mm::latent_scores, py::arg("tensor"),
        "Normal scores of each metric column");

  py::class_<mm::CopulaConfig>(m, "CopulaConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &mm::CopulaConfig::iterations)
      .def_readwrite("burnin", &mm::CopulaConfig::burnin)
      .def_readwrite("thin", &mm::CopulaConfig::thin)
      .def_readwrite("seed", &mm::CopulaConfig::seed);

  py::class_<mm::LatentCorrelation>(m, "LatentCorrelation")
      .def_readonly("metrics", &mm::LatentCorrelation::metrics)
      .def_readonly("mean", &mm::LatentCorrelation::mean)
      .def_readonly("draws", &mm::LatentCorrelation::draws)
      .def_readonly("rows_used", &mm::LatentCorrelation::rows_used)
      .def_readonly("warnings", &mm::LatentCorrelation::warnings);

  m.def("fit_copula", &mm::fit_copula, py::arg("tensor"),
        py::arg("config") = mm::CopulaConfig{},
        "Posterior over the latent rank correlation via Gibbs sampling");

  m.def("independence_score",
        [](const Eigen::MatrixXd& corr, int target, const std::vector<int>& given) {
          return mm::independence_score(corr, target, given);
        },
        py::arg("corr"), py::arg("target"), py::arg("given"),
        "Residual variance of target conditioned on the given metrics");

  py::class_<mm::IndependencePoint>(m, "IndependencePoint")
      .def_readonly("set_size", &mm::IndependencePoint::set_size)
      .def_readonly("score", &mm::IndependencePoint::score)
      .def_readonly("conditioning", &mm::IndependencePoint::conditioning);

  py::class_<mm::IndependenceCurve>(m, "IndependenceCurve")
      .def_readonly("metric", &mm::IndependenceCurve::metric)
      .def_readonly("points", &mm::IndependenceCurve::points);

  m.def("independence_curve",
        [](const Eigen::MatrixXd& corr, const std::vector<std::string>& metrics,
           const std::string& target) {
          return mm::independence_curve(corr, metrics, target);
        },
        py::arg("corr"), py::arg("metrics"), py::arg("target"),
        "Greedy conditioning-set curve for one metric");

  py::class_<mm::PcaResult>(m, "PcaResult")
      .def_readonly("eigenvalues", &mm::PcaResult::eigenvalues)
      .def_readonly("eigenvectors", &mm::PcaResult::eigenvectors)
      .def_readonly("cumulative_fraction", &mm::PcaResult::cumulative_fraction);

  m.def("pca", &mm::pca, py::arg("corr"),
        "Eigendecomposition of a correlation matrix, descending");

  py::class_<mm::PcScores>(m, "PcScores")
      .def_readonly("seasons", &mm::PcScores::seasons)
      .def_readonly("players", &mm::PcScores::players)
      .def_readonly("components", &mm::PcScores::components)
      .def_readonly("imputed", &mm::PcScores::imputed)
      .def("w", [](const mm::PcScores& s) {
        return grid3(s.w, s.seasons.size(), s.players.size(),
                     s.components.size());
      });

  m.def("pc_scores", &mm::pc_scores, py::arg("scores"), py::arg("decomposition"),
        py::arg("components"), "Orthogonal metric values W = Z U");

  py::class_<mm::PlayerRank>(m, "PlayerRank")
      .def_readonly("player", &mm::PlayerRank::player)
      .def_readonly("name", &mm::PlayerRank::name)
      .def_readonly("score", &mm::PlayerRank::score);

  m.def("rank_players", &mm::rank_players, py::arg("scores"), py::arg("season"),
        py::arg("component"), py::arg("top_n"));

  py::class_<mm::ClusterMerge>(m, "ClusterMerge")
      .def_readonly("left", &mm::ClusterMerge::left)
      .def_readonly("right", &mm::ClusterMerge::right)
      .def_readonly("height", &mm::ClusterMerge::height)
      .def_readonly("size", &mm::ClusterMerge::size);

  py::class_<mm::ClusterTree>(m, "ClusterTree")
      .def_readonly("leaves", &mm::ClusterTree::leaves)
      .def_readonly("merges", &mm::ClusterTree::merges)
      .def("newick", &mm::ClusterTree::newick);

  m.def("cluster_metrics",
        [](const Eigen::MatrixXd& corr, const std::vector<std::string>& metrics) {
          return mm::cluster_metrics(corr, metrics);
        },
        py::arg("corr"), py::arg("metrics"),
        "Average-linkage clustering on distance 1 - |corr|");

  py::class_<mm::PlayerShrinkage>(m, "PlayerShrinkage")
      .def_readonly("player", &mm::PlayerShrinkage::player)
      .def_readonly("career_rate", &mm::PlayerShrinkage::career_rate)
      .def_readonly("concentration", &mm::PlayerShrinkage::concentration)
      .def_readonly("log_marginal", &mm::PlayerShrinkage::log_marginal)
      .def_readonly("seasons", &mm::PlayerShrinkage::seasons)
      .def_readonly("makes", &mm::PlayerShrinkage::makes)
      .def_readonly("attempts", &mm::PlayerShrinkage::attempts)
      .def_readonly("raw", &mm::PlayerShrinkage::raw)
      .def_readonly("shrunk", &mm::PlayerShrinkage::shrunk);

  py::class_<mm::ShrinkageFit>(m, "ShrinkageFit")
      .def_readonly("metric", &mm::ShrinkageFit::metric)
      .def_readonly("players", &mm::ShrinkageFit::players);

  m.def("fit_shrinkage", &mm::fit_shrinkage, py::arg("tensor"), py::arg("metric"),
        py::arg("options") = mm::ShrinkageOptions{},
        "Empirical-Bayes beta-binomial fit of a percentage metric");
  m.def("append_shrunken_column", &mm::append_shrunken_column, py::arg("tensor"),
        py::arg("fit"), py::arg("new_name"));
  m.def("shrunken_rate", &mm::shrunken_rate, py::arg("makes"), py::arg("attempts"),
        py::arg("career_rate"), py::arg("r"));

  py::class_<mm::Marginal> marginal(m, "Marginal");
  py::enum_<mm::Marginal::Kind>(marginal, "Kind")
      .value("normal", mm::Marginal::Kind::normal)
      .value("lognormal", mm::Marginal::Kind::lognormal)
      .value("uniform", mm::Marginal::Kind::uniform)
      .value("counts", mm::Marginal::Kind::counts);
  marginal
      .def(py::init([](mm::Marginal::Kind kind, double a, double b) {
             return mm::Marginal{kind, a, b};
           }),
           py::arg("kind"), py::arg("a") = 0.0, py::arg("b") = 1.0)
      .def_readwrite("kind", &mm::Marginal::kind)
      .def_readwrite("a", &mm::Marginal::a)
      .def_readwrite("b", &mm::Marginal::b);

  py::class_<mm::MixedEffectsSynthSpec>(m, "MixedEffectsSynthSpec")
      .def(py::init<>())
      .def_readwrite("players", &mm::MixedEffectsSynthSpec::players)
      .def_readwrite("seasons", &mm::MixedEffectsSynthSpec::seasons)
      .def_readwrite("games", &mm::MixedEffectsSynthSpec::games)
      .def_readwrite("params", &mm::MixedEffectsSynthSpec::params)
      .def_readwrite("seed", &mm::MixedEffectsSynthSpec::seed)
      .def_readwrite("metric_name", &mm::MixedEffectsSynthSpec::metric_name);

  py::class_<mm::BinomialLeagueSynthSpec>(m, "BinomialLeagueSynthSpec")
      .def(py::init<>())
      .def_readwrite("players", &mm::BinomialLeagueSynthSpec::players)
      .def_readwrite("seasons", &mm::BinomialLeagueSynthSpec::seasons)
      .def_readwrite("games", &mm::BinomialLeagueSynthSpec::games)
      .def_readwrite("attempts_per_game",
                     &mm::BinomialLeagueSynthSpec::attempts_per_game)
      .def_readwrite("ability_alpha", &mm::BinomialLeagueSynthSpec::ability_alpha)
      .def_readwrite("ability_beta", &mm::BinomialLeagueSynthSpec::ability_beta)
      .def_readwrite("season_concentration",
                     &mm::BinomialLeagueSynthSpec::season_concentration)
      .def_readwrite("seed", &mm::BinomialLeagueSynthSpec::seed)
      .def_readwrite("metric_name", &mm::BinomialLeagueSynthSpec::metric_name);

  py::class_<mm::CopulaSynthSpec>(m, "CopulaSynthSpec")
      .def(py::init<>())
      .def_readwrite("rows", &mm::CopulaSynthSpec::rows)
      .def_readwrite("correlation", &mm::CopulaSynthSpec::correlation)
      .def_readwrite("marginals", &mm::CopulaSynthSpec::marginals)
      .def_readwrite("metric_names", &mm::CopulaSynthSpec::metric_names)
      .def_readwrite("seed", &mm::CopulaSynthSpec::seed);

  py::class_<mm::SynthTruth>(m, "SynthTruth")
      .def_readonly("model", &mm::SynthTruth::model)
      .def_readonly("seed", &mm::SynthTruth::seed)
      .def_readonly("params", &mm::SynthTruth::params)
      .def_readonly("closed_discrimination", &mm::SynthTruth::closed_discrimination)
      .def_readonly("closed_stability", &mm::SynthTruth::closed_stability)
      .def_readonly("career_rates", &mm::SynthTruth::career_rates)
      .def_readonly("season_rates", &mm::SynthTruth::season_rates)
      .def_readonly("correlation", &mm::SynthTruth::correlation);

  py::class_<mm::SynthData>(m, "SynthData")
      .def_readonly("log", &mm::SynthData::log)
      .def_readonly("definitions", &mm::SynthData::definitions)
      .def_readonly("tensor", &mm::SynthData::tensor)
      .def_readonly("truth", &mm::SynthData::truth);

  m.def("generate",
        [](const mm::MixedEffectsSynthSpec& s) { return mm::generate(s); },
        py::arg("spec"), "League following the additive variance-components model");
  m.def("generate",
        [](const mm::BinomialLeagueSynthSpec& s) { return mm::generate(s); },
        py::arg("spec"), "League of binomial shooters");
  m.def("generate",
        [](const mm::CopulaSynthSpec& s) { return mm::generate(s); },
        py::arg("spec"), "Season tensor drawn from a Gaussian copula");

  m.def("qnorm", &mm::qnorm, py::arg("p"), "Standard normal quantile");
  m.def("pnorm", &mm::pnorm, py::arg("x"), "Standard normal CDF");
}
