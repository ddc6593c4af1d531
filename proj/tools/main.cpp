#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "metametrics/bootstrap.hpp"
#include "metametrics/dependence.hpp"
#include "metametrics/dsl.hpp"
#include "metametrics/error.hpp"
#include "metametrics/io.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/model.hpp"
#include "metametrics/shrinkage.hpp"
#include "metametrics/synth.hpp"
#include "metametrics/tensor.hpp"
#include "metametrics/version.hpp"

namespace {

using mm::fail;
using mm::ErrorCode;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

mm::GameLog load_logs(const std::vector<std::string>& paths) {
  mm::GameLog log = mm::GameLog::read_csv(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) {
    mm::GameLog extra = mm::GameLog::read_csv(paths[i]);
    for (std::size_t r = 0; r < extra.rows(); ++r) log.add(extra.line(r));
  }
  return log;
}

std::vector<std::string> load_players(const std::string& list,
                                      const std::string& file) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    std::string id = list.substr(start, comma - start);
    while (!id.empty() && id.front() == ' ') id.erase(id.begin());
    while (!id.empty() && id.back() == ' ') id.pop_back();
    if (!id.empty()) out.push_back(std::move(id));
    start = comma + 1;
  }
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + file + "' for reading");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      out.push_back(line);
    }
  }
  return out;
}

// "SRC" or "SRC:NAME"; the shrunken column defaults to SRC_EB.
mm::EbColumn parse_eb_spec(const std::string& spec) {
  mm::EbColumn col;
  std::size_t colon = spec.rfind(':');
  if (colon == std::string::npos) {
    col.source_metric = spec;
    col.name = spec + "_EB";
  } else {
    col.source_metric = spec.substr(0, colon);
    col.name = spec.substr(colon + 1);
  }
  if (col.source_metric.empty() || col.name.empty())
    fail(ErrorCode::invalid_argument, "bad EB column spec '" + spec + "'");
  return col;
}

// "normal:MU:SD" | "lognormal:MEANLOG:SDLOG" | "uniform:LO:HI" | "counts:RATE"
mm::Marginal parse_marginal(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t colon = spec.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(spec.substr(start));
      break;
    }
    parts.push_back(spec.substr(start, colon - start));
    start = colon + 1;
  }
  auto num = [&](std::size_t i) {
    try {
      return std::stod(parts.at(i));
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "bad number in marginal '" + spec + "'");
    }
  };
  mm::Marginal m;
  if (parts[0] == "normal" && parts.size() == 3) {
    m.kind = mm::Marginal::Kind::normal;
    m.a = num(1);
    m.b = num(2);
  } else if (parts[0] == "lognormal" && parts.size() == 3) {
    m.kind = mm::Marginal::Kind::lognormal;
    m.a = num(1);
    m.b = num(2);
  } else if (parts[0] == "uniform" && parts.size() == 3) {
    m.kind = mm::Marginal::Kind::uniform;
    m.a = num(1);
    m.b = num(2);
  } else if (parts[0] == "counts" && parts.size() == 2) {
    m.kind = mm::Marginal::Kind::counts;
    m.a = num(1);
  } else {
    fail(ErrorCode::invalid_argument,
         "marginal '" + spec +
             "' must be normal:MU:SD, lognormal:MEANLOG:SDLOG, uniform:LO:HI, "
             "or counts:RATE");
  }
  return m;
}

void write_csv_file(const std::string& path, const std::string& content) {
  mm::write_text_file(path, content);
}

mm::MetricTensor load_tensor(const std::string& path) {
  return mm::tensor_from_json(mm::read_json_file(path));
}

mm::LatentCorrelation load_correlation(const std::string& path) {
  return mm::correlation_from_json(mm::read_json_file(path));
}

std::string draws_csv(const mm::LatentCorrelation& corr) {
  std::ostringstream os;
  os << "draw,metric_i,metric_j,value\n";
  const auto& names = corr.metrics;
  for (std::size_t d = 0; d < corr.draws.size(); ++d)
    for (Eigen::Index i = 0; i < corr.draws[d].rows(); ++i)
      for (Eigen::Index j = i + 1; j < corr.draws[d].cols(); ++j)
        os << d << ',' << names[static_cast<std::size_t>(i)] << ','
           << names[static_cast<std::size_t>(j)] << ','
           << mm::format_double(corr.draws[d](i, j)) << '\n';
  return std::move(os).str();
}

std::string curves_csv(const std::vector<mm::IndependenceCurve>& curves) {
  std::ostringstream os;
  os << "metric,set_size,score,conditioning\n";
  for (const auto& c : curves)
    for (const auto& pt : c.points) {
      os << c.metric << ',' << pt.set_size << ',' << mm::format_double(pt.score)
         << ',';
      for (std::size_t i = 0; i < pt.conditioning.size(); ++i) {
        if (i > 0) os << '|';
        os << pt.conditioning[i];
      }
      os << '\n';
    }
  return std::move(os).str();
}

struct IngestArgs {
  std::vector<std::string> logs;
  std::string metrics;
  std::string exposure = "MIN";
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  mm::GameLog log = load_logs(a.logs);
  auto defs = mm::parse_metric_file(a.metrics);
  auto agg = mm::aggregate_and_evaluate(log, defs,
                                        mm::AggregateOptions{.exposure_stat = a.exposure});
  print_warnings(agg.warnings);
  mm::write_json_file(a.out, mm::tensor_to_json(agg.tensor));
  std::cout << "tensor: " << agg.tensor.season_count() << " seasons, "
            << agg.tensor.player_count() << " players, "
            << agg.tensor.metric_count() << " metrics -> " << a.out << "\n";
}

struct BootstrapArgs {
  std::vector<std::string> logs;
  std::string metrics;
  std::uint64_t seed = 0;
  int replicates = 500;
  double max_excluded_fraction = 0.5;
  std::string exposure = "MIN";
  std::vector<std::string> eb_specs;
  std::string out;
  std::string csv;
};

void run_bootstrap(const BootstrapArgs& a) {
  mm::GameLog log = load_logs(a.logs);
  auto defs = mm::parse_metric_file(a.metrics);
  std::vector<mm::EbColumn> eb;
  for (const auto& spec : a.eb_specs) eb.push_back(parse_eb_spec(spec));
  mm::BootstrapConfig config;
  config.replicates = a.replicates;
  config.seed = a.seed;
  config.max_excluded_fraction = a.max_excluded_fraction;
  config.exposure_stat = a.exposure;
  auto bv = mm::bootstrap_variance(log, defs, config, eb);
  print_warnings(bv.warnings);
  mm::write_json_file(a.out, mm::bv_to_json(bv));
  if (!a.csv.empty()) {
    std::ostringstream os;
    mm::write_bv_csv(os, bv);
    write_csv_file(a.csv, std::move(os).str());
  }
  std::cout << "variance estimates for " << bv.metrics.size() << " metrics ("
            << bv.replicates << " replicates, seed " << bv.seed << ") -> "
            << a.out << "\n";
}

struct MetaArgs {
  std::string tensor;
  std::string bv;
  std::string moments = "unbiased";
  double min_exposure_rate = 500.0;
  double min_exposure_total = 0.0;
  double min_exposure_percentage = 0.0;
  int min_seasons = 2;
  std::string players;
  std::string players_file;
  std::string out;
  std::string csv;
};

void run_meta(const MetaArgs& a) {
  mm::MetricTensor tensor = load_tensor(a.tensor);
  mm::BootstrapVariance bv = mm::bv_from_json(mm::read_json_file(a.bv));
  mm::MetaOptions options;
  options.moments = a.moments == "population" ? mm::MomentConvention::population
                                              : mm::MomentConvention::unbiased;
  options.min_exposure_rate = a.min_exposure_rate;
  options.min_exposure_total = a.min_exposure_total;
  options.min_exposure_percentage = a.min_exposure_percentage;
  options.min_seasons = a.min_seasons;
  auto players = load_players(a.players, a.players_file);
  mm::MetaResult result =
      players.empty() ? mm::compute_meta(tensor, bv, options)
                      : mm::conditional_scores(tensor, bv, players, options);
  print_warnings(result.warnings);
  if (!a.out.empty()) mm::write_json_file(a.out, mm::meta_to_json(result));
  if (!a.csv.empty()) {
    std::ostringstream os;
    mm::write_meta_csv(os, result);
    write_csv_file(a.csv, std::move(os).str());
  }
  for (const auto& sc : result.scores)
    std::cout << sc.metric << ": discrimination " << mm::format_double(sc.discrimination)
              << ", stability " << mm::format_double(sc.stability) << " ("
              << sc.stability_players << " players)\n";
}

struct CopulaArgs {
  std::string tensor;
  std::uint64_t seed = 0;
  int iterations = 2000;
  int burnin = 500;
  int thin = 5;
  std::string out;
  std::string draws_out;
};

void run_copula(const CopulaArgs& a) {
  mm::MetricTensor tensor = load_tensor(a.tensor);
  mm::CopulaConfig config;
  config.iterations = a.iterations;
  config.burnin = a.burnin;
  config.thin = a.thin;
  config.seed = a.seed;
  auto corr = mm::fit_copula(tensor, config);
  print_warnings(corr.warnings);
  mm::write_json_file(a.out, mm::correlation_to_json(corr));
  if (!a.draws_out.empty()) write_csv_file(a.draws_out, draws_csv(corr));
  std::cout << "latent correlation over " << corr.metrics.size() << " metrics, "
            << corr.draws.size() << " recorded draws (seed " << config.seed
            << ") -> " << a.out << "\n";
}

struct IndependenceArgs {
  std::string corr;
  std::vector<std::string> targets;
  std::string out;
  std::string csv;
};

void run_independence(const IndependenceArgs& a) {
  mm::LatentCorrelation corr = load_correlation(a.corr);
  std::vector<std::string> targets =
      a.targets.empty() ? corr.metrics : a.targets;
  std::vector<mm::IndependenceCurve> curves;
  for (const auto& t : targets)
    curves.push_back(mm::independence_curve(corr.mean, corr.metrics, t));
  nlohmann::json j = {{"format", "independence-curves"},
                      {"curves", nlohmann::json::array()}};
  for (const auto& c : curves) j["curves"].push_back(mm::curve_to_json(c));
  if (!a.out.empty()) mm::write_json_file(a.out, j);
  if (!a.csv.empty()) write_csv_file(a.csv, curves_csv(curves));
  for (const auto& c : curves)
    std::cout << c.metric << ": independence "
              << mm::format_double(c.points.front().score) << " given all others\n";
}

struct PcaArgs {
  std::string corr;
  std::string tensor;
  int components = 0;
  std::string out;
  std::string scree_csv;
  std::string scores_csv;
  std::string rank_csv;
  std::string rank_season;
  int rank_top = 10;
};

void run_pca(const PcaArgs& a) {
  mm::LatentCorrelation corr = load_correlation(a.corr);
  mm::PcaResult decomposition = mm::pca(corr.mean);
  if (!a.out.empty())
    mm::write_json_file(a.out, mm::pca_to_json(decomposition, corr.metrics));
  if (!a.scree_csv.empty()) {
    std::ostringstream os;
    os << "component,eigenvalue,cumulative_fraction\n";
    for (std::size_t i = 0; i < decomposition.eigenvalues.size(); ++i)
      os << (i + 1) << ',' << mm::format_double(decomposition.eigenvalues[i])
         << ',' << mm::format_double(decomposition.cumulative_fraction[i]) << '\n';
    write_csv_file(a.scree_csv, std::move(os).str());
  }
  const bool need_scores = !a.scores_csv.empty() || !a.rank_csv.empty();
  if (need_scores) {
    if (a.tensor.empty())
      fail(ErrorCode::invalid_argument,
           "--scores-csv and --rank-csv need --tensor for latent scores");
    mm::MetricTensor tensor = load_tensor(a.tensor);
    if (tensor.metrics != corr.metrics)
      fail(ErrorCode::invalid_argument,
           "tensor metrics do not match the correlation document");
    mm::LatentScores scores = mm::latent_scores(tensor);
    int k = a.components > 0 ? a.components
                             : static_cast<int>(corr.metrics.size());
    mm::PcScores pcs = mm::pc_scores(scores, decomposition, k);
    if (pcs.imputed > 0)
      std::cerr << "warning: " << pcs.imputed
                << " missing latent entries imputed at 0 for component scores\n";
    if (!a.scores_csv.empty()) {
      std::ostringstream os;
      mm::write_pc_scores_csv(os, pcs);
      write_csv_file(a.scores_csv, std::move(os).str());
    }
    if (!a.rank_csv.empty()) {
      if (a.rank_season.empty())
        fail(ErrorCode::invalid_argument, "--rank-csv needs --rank-season");
      std::ostringstream os;
      os << "component,rank,player_id,player_name,score\n";
      for (int c = 1; c <= k; ++c) {
        auto ranked = mm::rank_players(pcs, a.rank_season, c, a.rank_top);
        for (std::size_t r = 0; r < ranked.size(); ++r)
          os << "PC" << c << ',' << (r + 1) << ',' << ranked[r].player << ','
             << ranked[r].name << ',' << mm::format_double(ranked[r].score)
             << '\n';
      }
      write_csv_file(a.rank_csv, std::move(os).str());
    }
  }
  std::size_t show = std::min<std::size_t>(decomposition.eigenvalues.size(), 5);
  for (std::size_t i = 0; i < show; ++i)
    std::cout << "PC" << (i + 1) << ": eigenvalue "
              << mm::format_double(decomposition.eigenvalues[i])
              << ", cumulative fraction "
              << mm::format_double(decomposition.cumulative_fraction[i]) << "\n";
}

struct ClusterArgs {
  std::string corr;
  std::string out;
  std::string newick;
};

void run_cluster(const ClusterArgs& a) {
  mm::LatentCorrelation corr = load_correlation(a.corr);
  mm::ClusterTree tree = mm::cluster_metrics(corr.mean, corr.metrics);
  if (!a.out.empty()) mm::write_json_file(a.out, mm::cluster_to_json(tree));
  if (!a.newick.empty()) mm::write_text_file(a.newick, tree.newick() + "\n");
  std::cout << "clustered " << tree.leaves.size() << " metrics, "
            << tree.merges.size() << " merges\n";
}

struct ShrinkArgs {
  std::string tensor;
  std::string metric;
  std::string name;
  std::string out;
  std::string players_csv;
  std::string seasons_csv;
  std::string tensor_out;
};

void run_shrink(const ShrinkArgs& a) {
  mm::MetricTensor tensor = load_tensor(a.tensor);
  auto fit = mm::fit_shrinkage(tensor, a.metric);
  if (!a.out.empty()) mm::write_json_file(a.out, mm::shrinkage_to_json(fit));
  if (!a.players_csv.empty()) {
    std::ostringstream os;
    mm::write_shrinkage_players_csv(os, fit);
    write_csv_file(a.players_csv, std::move(os).str());
  }
  if (!a.seasons_csv.empty()) {
    std::ostringstream os;
    mm::write_shrinkage_seasons_csv(os, fit);
    write_csv_file(a.seasons_csv, std::move(os).str());
  }
  if (!a.tensor_out.empty()) {
    std::string name = a.name.empty() ? a.metric + "_EB" : a.name;
    mm::MetricTensor augmented = mm::append_shrunken_column(tensor, fit, name);
    mm::write_json_file(a.tensor_out, mm::tensor_to_json(augmented));
  }
  std::cout << "shrinkage fit for " << a.metric << ": " << fit.players.size()
            << " players\n";
}

struct SynthArgs {
  std::string model;
  std::uint64_t seed = 0;
  std::string out_dir;
  // league shape; -1 keeps the model default
  int players = -1;
  int seasons = -1;
  int games = -1;
  std::string metric_name;
  // mixed effects
  double grand_mean = 100.0;
  double season_var = 1.0;
  double player_var = 1.0;
  double interaction_var = 1.0;
  double noise_var = 1.0;
  // binomial league
  int attempts = 4;
  double alpha = 20.0;
  double beta = 20.0;
  double season_concentration = 0.0;
  // copula
  int rows = 1000;
  std::string correlation;
  std::vector<std::string> marginals;
  std::string names;
};

void run_synth(const SynthArgs& a) {
  std::filesystem::create_directories(a.out_dir);
  auto path = [&](const char* file) {
    return (std::filesystem::path(a.out_dir) / file).string();
  };

  mm::SynthData data;
  if (a.model == "mixed") {
    mm::MixedEffectsSynthSpec spec;
    if (a.players >= 0) spec.players = a.players;
    if (a.seasons >= 0) spec.seasons = a.seasons;
    if (a.games >= 0) spec.games = a.games;
    spec.params = {a.grand_mean, a.season_var, a.player_var, a.interaction_var,
                   a.noise_var};
    spec.seed = a.seed;
    if (!a.metric_name.empty()) spec.metric_name = a.metric_name;
    data = mm::generate(spec);
  } else if (a.model == "binomial") {
    mm::BinomialLeagueSynthSpec spec;
    if (a.players >= 0) spec.players = a.players;
    if (a.seasons >= 0) spec.seasons = a.seasons;
    if (a.games >= 0) spec.games = a.games;
    spec.attempts_per_game = a.attempts;
    spec.ability_alpha = a.alpha;
    spec.ability_beta = a.beta;
    spec.season_concentration = a.season_concentration;
    spec.seed = a.seed;
    if (!a.metric_name.empty()) spec.metric_name = a.metric_name;
    data = mm::generate(spec);
  } else {
    if (a.correlation.empty())
      fail(ErrorCode::invalid_argument, "copula model needs --correlation");
    mm::CopulaSynthSpec spec;
    spec.rows = a.rows;
    spec.correlation = mm::matrix_from_json(mm::read_json_file(a.correlation));
    for (const auto& m : a.marginals) spec.marginals.push_back(parse_marginal(m));
    spec.metric_names = load_players(a.names, "");
    spec.seed = a.seed;
    data = mm::generate(spec);
  }

  if (data.log) data.log->write_csv(path("log.csv"));
  if (data.tensor)
    mm::write_json_file(path("tensor.json"), mm::tensor_to_json(*data.tensor));
  std::ostringstream defs;
  for (const auto& d : data.definitions) defs << mm::to_string(d) << "\n";
  mm::write_text_file(path("metrics.mmdef"), std::move(defs).str());
  mm::write_json_file(path("truth.json"), mm::truth_to_json(data.truth));
  std::cout << "synthetic " << a.model << " league (seed " << a.seed << ") -> "
            << a.out_dir << "\n";
}

struct ReportArgs {
  std::vector<std::string> logs;
  std::string metrics;
  std::uint64_t seed = 0;
  int replicates = 500;
  double max_excluded_fraction = 0.5;
  std::string exposure = "MIN";
  std::vector<std::string> eb_specs;
  std::string moments = "unbiased";
  double min_exposure_rate = 500.0;
  double min_exposure_total = 0.0;
  double min_exposure_percentage = 0.0;
  int min_seasons = 2;
  std::string players;
  std::string players_file;
  int iterations = 2000;
  int burnin = 500;
  int thin = 5;
  std::string out;
};

void run_report(const ReportArgs& a) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : a.logs)
    inputs.push_back({{"path", p}, {"hash", mm::content_hash(mm::read_text_file(p))}});
  inputs.push_back(
      {{"path", a.metrics}, {"hash", mm::content_hash(mm::read_text_file(a.metrics))}});

  mm::GameLog log = load_logs(a.logs);
  auto defs = mm::parse_metric_file(a.metrics);

  auto agg = mm::aggregate_and_evaluate(log, defs,
                                        mm::AggregateOptions{.exposure_stat = a.exposure});
  print_warnings(agg.warnings);
  mm::MetricTensor tensor = agg.tensor;

  nlohmann::json shrinkage = nlohmann::json::array();
  std::vector<mm::EbColumn> eb;
  for (const auto& spec : a.eb_specs) {
    mm::EbColumn col = parse_eb_spec(spec);
    auto fit = mm::fit_shrinkage(tensor, col.source_metric, col.options);
    tensor = mm::append_shrunken_column(tensor, fit, col.name);
    nlohmann::json entry = mm::shrinkage_to_json(fit);
    entry["column"] = col.name;
    shrinkage.push_back(std::move(entry));
    eb.push_back(std::move(col));
  }

  mm::BootstrapConfig bc;
  bc.replicates = a.replicates;
  bc.seed = a.seed;
  bc.max_excluded_fraction = a.max_excluded_fraction;
  bc.exposure_stat = a.exposure;
  auto bv = mm::bootstrap_variance(log, defs, bc, eb);
  print_warnings(bv.warnings);

  mm::MetaOptions mo;
  mo.moments = a.moments == "population" ? mm::MomentConvention::population
                                         : mm::MomentConvention::unbiased;
  mo.min_exposure_rate = a.min_exposure_rate;
  mo.min_exposure_total = a.min_exposure_total;
  mo.min_exposure_percentage = a.min_exposure_percentage;
  mo.min_seasons = a.min_seasons;
  auto players = load_players(a.players, a.players_file);
  mm::MetaResult meta = players.empty()
                            ? mm::compute_meta(tensor, bv, mo)
                            : mm::conditional_scores(tensor, bv, players, mo);
  print_warnings(meta.warnings);

  mm::CopulaConfig cc;
  cc.iterations = a.iterations;
  cc.burnin = a.burnin;
  cc.thin = a.thin;
  cc.seed = a.seed;
  auto corr = mm::fit_copula(tensor, cc);
  print_warnings(corr.warnings);

  nlohmann::json curves = nlohmann::json::array();
  for (const auto& m : corr.metrics)
    curves.push_back(mm::curve_to_json(mm::independence_curve(corr.mean, corr.metrics, m)));

  mm::PcaResult decomposition = mm::pca(corr.mean);
  mm::ClusterTree tree = mm::cluster_metrics(corr.mean, corr.metrics);

  nlohmann::json report = {
      {"meta", mm::meta_to_json(meta)},
      {"independence",
       {{"correlation", mm::correlation_to_json(corr)}, {"curves", std::move(curves)}}},
      {"pca", mm::pca_to_json(decomposition, corr.metrics)},
      {"cluster", mm::cluster_to_json(tree)},
      {"shrinkage", std::move(shrinkage)},
      {"provenance",
       {{"version", mm::kVersion},
        {"command", "report"},
        {"seed", a.seed},
        {"inputs", std::move(inputs)},
        {"settings",
         {{"replicates", a.replicates},
          {"max_excluded_fraction", a.max_excluded_fraction},
          {"exposure_stat", a.exposure},
          {"moments", a.moments},
          {"min_exposure_rate", a.min_exposure_rate},
          {"min_exposure_total", a.min_exposure_total},
          {"min_exposure_percentage", a.min_exposure_percentage},
          {"min_seasons", a.min_seasons},
          {"iterations", a.iterations},
          {"burnin", a.burnin},
          {"thin", a.thin},
          {"eb_columns", a.eb_specs},
          {"players", players}}},
        {"warnings",
         {{"aggregate", agg.warnings},
          {"bootstrap", bv.warnings},
          {"meta", meta.warnings},
          {"copula", corr.warnings}}}}},
  };
  mm::write_json_file(a.out, report);
  std::cout << "report over " << tensor.metric_count() << " metrics -> " << a.out
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meta-metrics for player performance measures: discrimination, "
               "stability, and independence from per-game logs"};
  app.set_version_flag("--version", mm::kVersion);
  app.set_config("--config");
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* cmd_ingest = app.add_subcommand(
      "ingest", "Aggregate game logs into a season metric tensor");
  cmd_ingest->add_option("--log", ingest.logs, "Game log CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_ingest->add_option("--metrics", ingest.metrics, "Metric definitions file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_ingest->add_option("--exposure-stat", ingest.exposure,
                         "Stat used as season exposure (empty to disable)");
  cmd_ingest->add_option("--out", ingest.out, "Tensor JSON path")->required();
  cmd_ingest->callback([&] { run_ingest(ingest); });

  BootstrapArgs boot;
  auto* cmd_boot = app.add_subcommand(
      "bootstrap", "Estimate per-entry sampling variance by resampling games");
  cmd_boot->add_option("--log", boot.logs, "Game log CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_boot->add_option("--metrics", boot.metrics, "Metric definitions file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_boot->add_option("--seed", boot.seed, "RNG seed")->required();
  cmd_boot->add_option("--replicates", boot.replicates, "Bootstrap replicates");
  cmd_boot->add_option("--max-excluded-fraction", boot.max_excluded_fraction,
                       "Drop an entry when more than this share of replicates "
                       "is unusable");
  cmd_boot->add_option("--exposure-stat", boot.exposure, "Exposure stat");
  cmd_boot->add_option("--eb", boot.eb_specs,
                       "Shrunken percentage column SRC or SRC:NAME (repeatable)");
  cmd_boot->add_option("--out", boot.out, "Variance JSON path")->required();
  cmd_boot->add_option("--csv", boot.csv, "Variance CSV path");
  cmd_boot->callback([&] { run_bootstrap(boot); });

  MetaArgs meta;
  auto* cmd_meta = app.add_subcommand(
      "meta", "Score metrics: discrimination and stability");
  cmd_meta->add_option("--tensor", meta.tensor, "Tensor JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_meta->add_option("--bv", meta.bv, "Variance JSON from bootstrap")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_meta->add_option("--moments", meta.moments, "Moment convention")
      ->check(CLI::IsMember({"unbiased", "population"}));
  cmd_meta->add_option("--min-exposure-rate", meta.min_exposure_rate,
                       "Exposure floor for rate metrics");
  cmd_meta->add_option("--min-exposure-total", meta.min_exposure_total,
                       "Exposure floor for total metrics");
  cmd_meta->add_option("--min-exposure-percentage", meta.min_exposure_percentage,
                       "Exposure floor for percentage metrics");
  cmd_meta->add_option("--min-seasons", meta.min_seasons,
                       "Seasons required for the stability cohort");
  cmd_meta->add_option("--players", meta.players,
                       "Restrict to these player ids (comma separated)");
  cmd_meta->add_option("--players-file", meta.players_file,
                       "File of player ids, one per line");
  cmd_meta->add_option("--out", meta.out, "Scores JSON path");
  cmd_meta->add_option("--csv", meta.csv, "Scores CSV path");
  cmd_meta->callback([&] { run_meta(meta); });

  CopulaArgs copula;
  auto* cmd_copula = app.add_subcommand(
      "copula", "Fit the latent rank correlation by Gibbs sampling");
  cmd_copula->add_option("--tensor", copula.tensor, "Tensor JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_copula->add_option("--seed", copula.seed, "RNG seed")->required();
  cmd_copula->add_option("--iterations", copula.iterations, "Gibbs sweeps");
  cmd_copula->add_option("--burnin", copula.burnin, "Sweeps discarded");
  cmd_copula->add_option("--thin", copula.thin, "Record every thin-th sweep");
  cmd_copula->add_option("--out", copula.out, "Correlation JSON path")->required();
  cmd_copula->add_option("--draws-out", copula.draws_out,
                         "Recorded draws CSV path");
  cmd_copula->callback([&] { run_copula(copula); });

  IndependenceArgs indep;
  auto* cmd_indep = app.add_subcommand(
      "independence", "Greedy conditional-independence curves");
  cmd_indep->add_option("--corr", indep.corr, "Correlation JSON from copula")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_indep->add_option("--target", indep.targets,
                        "Curve target metric (repeatable; default all)");
  cmd_indep->add_option("--out", indep.out, "Curves JSON path");
  cmd_indep->add_option("--csv", indep.csv, "Curves CSV path");
  cmd_indep->callback([&] { run_independence(indep); });

  PcaArgs pca;
  auto* cmd_pca = app.add_subcommand(
      "pca", "Eigendecomposition, variance fractions, and component scores");
  cmd_pca->add_option("--corr", pca.corr, "Correlation JSON from copula")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_pca->add_option("--tensor", pca.tensor,
                      "Tensor JSON (needed for component scores)");
  cmd_pca->add_option("--components", pca.components,
                      "Components for scores (default all)");
  cmd_pca->add_option("--out", pca.out, "Decomposition JSON path");
  cmd_pca->add_option("--scree-csv", pca.scree_csv, "Scree CSV path");
  cmd_pca->add_option("--scores-csv", pca.scores_csv, "Component scores CSV path");
  cmd_pca->add_option("--rank-csv", pca.rank_csv, "Player rankings CSV path");
  cmd_pca->add_option("--rank-season", pca.rank_season, "Season to rank");
  cmd_pca->add_option("--rank-top", pca.rank_top, "Players per component");
  cmd_pca->callback([&] { run_pca(pca); });

  ClusterArgs cluster;
  auto* cmd_cluster = app.add_subcommand(
      "cluster", "Average-linkage clustering of metrics");
  cmd_cluster->add_option("--corr", cluster.corr, "Correlation JSON from copula")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_cluster->add_option("--out", cluster.out, "Tree JSON path");
  cmd_cluster->add_option("--newick", cluster.newick, "Newick text path");
  cmd_cluster->callback([&] { run_cluster(cluster); });

  ShrinkArgs shrink;
  auto* cmd_shrink = app.add_subcommand(
      "shrink", "Empirical-Bayes shrinkage of a percentage metric");
  cmd_shrink->add_option("--tensor", shrink.tensor, "Tensor JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_shrink->add_option("--metric", shrink.metric, "Percentage metric name")
      ->required();
  cmd_shrink->add_option("--name", shrink.name,
                         "Name for the shrunken column (default METRIC_EB)");
  cmd_shrink->add_option("--out", shrink.out, "Fit JSON path");
  cmd_shrink->add_option("--players-csv", shrink.players_csv,
                         "Per-player fit CSV path");
  cmd_shrink->add_option("--seasons-csv", shrink.seasons_csv,
                         "Per-season values CSV path");
  cmd_shrink->add_option("--tensor-out", shrink.tensor_out,
                         "Tensor JSON with the shrunken column appended");
  cmd_shrink->callback([&] { run_shrink(shrink); });

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand(
      "synth", "Generate a synthetic league with known ground truth");
  cmd_synth->add_option("--model", synth.model, "Generator")
      ->required()
      ->check(CLI::IsMember({"mixed", "binomial", "copula"}));
  cmd_synth->add_option("--seed", synth.seed, "RNG seed")->required();
  cmd_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  cmd_synth->add_option("--players", synth.players, "Players");
  cmd_synth->add_option("--seasons", synth.seasons, "Seasons");
  cmd_synth->add_option("--games", synth.games, "Games per season");
  cmd_synth->add_option("--metric-name", synth.metric_name, "Metric name");
  cmd_synth->add_option("--grand-mean", synth.grand_mean, "mixed: grand mean");
  cmd_synth->add_option("--season-var", synth.season_var, "mixed: season variance");
  cmd_synth->add_option("--player-var", synth.player_var, "mixed: player variance");
  cmd_synth->add_option("--interaction-var", synth.interaction_var,
                        "mixed: interaction variance");
  cmd_synth->add_option("--noise-var", synth.noise_var,
                        "mixed: season-value noise variance");
  cmd_synth->add_option("--attempts", synth.attempts,
                        "binomial: attempts per game");
  cmd_synth->add_option("--alpha", synth.alpha, "binomial: ability beta alpha");
  cmd_synth->add_option("--beta", synth.beta, "binomial: ability beta beta");
  cmd_synth->add_option("--season-concentration", synth.season_concentration,
                        "binomial: season ability concentration (0 = constant)");
  cmd_synth->add_option("--rows", synth.rows, "copula: player-season rows");
  cmd_synth->add_option("--correlation", synth.correlation,
                        "copula: JSON file with the correlation matrix");
  cmd_synth->add_option("--marginal", synth.marginals,
                        "copula: marginal spec per metric (repeatable)");
  cmd_synth->add_option("--names", synth.names,
                        "copula: metric names, comma separated");
  cmd_synth->callback([&] { run_synth(synth); });

  ReportArgs report;
  auto* cmd_report = app.add_subcommand(
      "report", "Full pipeline into one JSON document");
  cmd_report->add_option("--log", report.logs, "Game log CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_report->add_option("--metrics", report.metrics, "Metric definitions file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_report->add_option("--seed", report.seed, "RNG seed")->required();
  cmd_report->add_option("--replicates", report.replicates, "Bootstrap replicates");
  cmd_report->add_option("--max-excluded-fraction", report.max_excluded_fraction,
                         "Bootstrap exclusion threshold");
  cmd_report->add_option("--exposure-stat", report.exposure, "Exposure stat");
  cmd_report->add_option("--eb", report.eb_specs,
                         "Shrunken percentage column SRC or SRC:NAME (repeatable)");
  cmd_report->add_option("--moments", report.moments, "Moment convention")
      ->check(CLI::IsMember({"unbiased", "population"}));
  cmd_report->add_option("--min-exposure-rate", report.min_exposure_rate,
                         "Exposure floor for rate metrics");
  cmd_report->add_option("--min-exposure-total", report.min_exposure_total,
                         "Exposure floor for total metrics");
  cmd_report->add_option("--min-exposure-percentage",
                         report.min_exposure_percentage,
                         "Exposure floor for percentage metrics");
  cmd_report->add_option("--min-seasons", report.min_seasons,
                         "Seasons required for the stability cohort");
  cmd_report->add_option("--players", report.players,
                         "Restrict meta scores to these player ids");
  cmd_report->add_option("--players-file", report.players_file,
                         "File of player ids, one per line");
  cmd_report->add_option("--iterations", report.iterations, "Gibbs sweeps");
  cmd_report->add_option("--burnin", report.burnin, "Sweeps discarded");
  cmd_report->add_option("--thin", report.thin, "Record every thin-th sweep");
  cmd_report->add_option("--out", report.out, "Report JSON path")->required();
  cmd_report->callback([&] { run_report(report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success))
      return app.exit(e);
    nlohmann::json j = {{"error", {{"code", "InvalidArgument"}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return 2;
  } catch (const mm::Error& e) {
    nlohmann::json j = {
        {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json j = {{"error", {{"code", "Internal"}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 0;
}
