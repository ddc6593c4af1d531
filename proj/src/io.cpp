#include "metametrics/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "metametrics/error.hpp"

namespace mm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

double number_from(const nlohmann::json& j, const char* what) {
  if (j.is_null()) return kNaN;
  if (!j.is_number()) fail(ErrorCode::parse_error, std::string(what) + " must be a number or null");
  return j.get<double>();
}

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::parse_error, message);
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

std::vector<std::string> string_vector(const nlohmann::json& j, const char* what) {
  require(j.is_array(), std::string(what) + " must be an array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    require(e.is_string(), std::string(what) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// values[s][p][m] nested arrays with nulls, flattened on read.
nlohmann::json grid3_to_json(const std::vector<double>& v, std::size_t S,
                             std::size_t P, std::size_t M) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s) {
    nlohmann::json ps = nlohmann::json::array();
    for (std::size_t p = 0; p < P; ++p) {
      nlohmann::json ms = nlohmann::json::array();
      for (std::size_t m = 0; m < M; ++m)
        ms.push_back(number_or_null(v[(s * P + p) * M + m]));
      ps.push_back(std::move(ms));
    }
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<double> grid3_from_json(const nlohmann::json& j, std::size_t S,
                                    std::size_t P, std::size_t M,
                                    const char* what) {
  require(j.is_array() && j.size() == S, std::string(what) + " season count mismatch");
  std::vector<double> out(S * P * M, kNaN);
  for (std::size_t s = 0; s < S; ++s) {
    require(j[s].is_array() && j[s].size() == P, std::string(what) + " player count mismatch");
    for (std::size_t p = 0; p < P; ++p) {
      require(j[s][p].is_array() && j[s][p].size() == M, std::string(what) + " metric count mismatch");
      for (std::size_t m = 0; m < M; ++m)
        out[(s * P + p) * M + m] = number_from(j[s][p][m], what);
    }
  }
  return out;
}

nlohmann::json grid2_to_json(const std::vector<double>& v, std::size_t S, std::size_t P) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s) {
    nlohmann::json ps = nlohmann::json::array();
    for (std::size_t p = 0; p < P; ++p) ps.push_back(number_or_null(v[s * P + p]));
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<double> grid2_from_json(const nlohmann::json& j, std::size_t S,
                                    std::size_t P, const char* what) {
  require(j.is_array() && j.size() == S, std::string(what) + " season count mismatch");
  std::vector<double> out(S * P, kNaN);
  for (std::size_t s = 0; s < S; ++s) {
    require(j[s].is_array() && j[s].size() == P, std::string(what) + " player count mismatch");
    for (std::size_t p = 0; p < P; ++p) out[s * P + p] = number_from(j[s][p], what);
  }
  return out;
}

MetricKind kind_from_string(const std::string& s) {
  if (s == "total") return MetricKind::total;
  if (s == "rate") return MetricKind::rate;
  if (s == "percentage") return MetricKind::percentage;
  fail(ErrorCode::parse_error, "unknown metric kind '" + s + "'");
}

// RFC 4180 style quoting, applied only when the field needs it.
std::string csv_field(std::string_view s) {
  bool needs = false;
  for (char c : s)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') { needs = true; break; }
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::io_error, "read failed on '" + path + "'");
  return std::move(buf).str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) fail(ErrorCode::io_error, "write failed on '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::parse_error, "invalid JSON in '" + path + "'");
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf, 16);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  require(j.is_array(), "matrix must be an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  if (rows > 0) {
    require(j[0].is_array(), "matrix rows must be arrays");
    cols = j[0].size();
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    require(j[i].is_array() && j[i].size() == cols, "matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          number_from(j[i][c], "matrix entry");
  }
  return m;
}

nlohmann::json tensor_to_json(const MetricTensor& tensor) {
  const std::size_t S = tensor.season_count();
  const std::size_t P = tensor.player_count();
  const std::size_t M = tensor.metric_count();

  nlohmann::json metrics = nlohmann::json::array();
  for (std::size_t m = 0; m < M; ++m)
    metrics.push_back({{"name", tensor.metrics[m]}, {"kind", to_string(tensor.kinds[m])}});

  nlohmann::json names = nlohmann::json::array();
  for (const auto& p : tensor.players) {
    auto it = tensor.player_names.find(p);
    names.push_back(it == tensor.player_names.end() ? "" : it->second);
  }

  nlohmann::json games = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < P; ++p) row.push_back(tensor.games[s * P + p]);
    games.push_back(std::move(row));
  }

  return {
      {"format", "metric-tensor"},
      {"seasons", tensor.seasons},
      {"players", tensor.players},
      {"player_names", std::move(names)},
      {"metrics", std::move(metrics)},
      {"exposure_stat", tensor.exposure_stat},
      {"values", grid3_to_json(tensor.values, S, P, M)},
      {"attempts", grid3_to_json(tensor.attempts, S, P, M)},
      {"exposure", grid2_to_json(tensor.exposure, S, P)},
      {"games", std::move(games)},
  };
}

MetricTensor tensor_from_json(const nlohmann::json& j) {
  require(j.is_object(), "tensor document must be an object");
  require(field(j, "format") == "metric-tensor", "not a metric-tensor document");

  MetricTensor t;
  t.seasons = string_vector(field(j, "seasons"), "seasons");
  t.players = string_vector(field(j, "players"), "players");
  const auto& metrics = field(j, "metrics");
  require(metrics.is_array(), "metrics must be an array");
  for (const auto& m : metrics) {
    require(m.is_object(), "metric entries must be objects");
    t.metrics.push_back(field(m, "name").get<std::string>());
    t.kinds.push_back(kind_from_string(field(m, "kind").get<std::string>()));
  }
  t.exposure_stat = field(j, "exposure_stat").get<std::string>();

  const auto& names = field(j, "player_names");
  require(names.is_array() && names.size() == t.players.size(),
          "player_names must align with players");
  for (std::size_t p = 0; p < t.players.size(); ++p) {
    std::string n = names[p].get<std::string>();
    if (!n.empty()) t.player_names[t.players[p]] = std::move(n);
  }

  const std::size_t S = t.seasons.size(), P = t.players.size(), M = t.metrics.size();
  t.values = grid3_from_json(field(j, "values"), S, P, M, "values");
  t.attempts = grid3_from_json(field(j, "attempts"), S, P, M, "attempts");
  t.exposure = grid2_from_json(field(j, "exposure"), S, P, "exposure");

  const auto& games = field(j, "games");
  require(games.is_array() && games.size() == S, "games season count mismatch");
  t.games.assign(S * P, 0);
  for (std::size_t s = 0; s < S; ++s) {
    require(games[s].is_array() && games[s].size() == P, "games player count mismatch");
    for (std::size_t p = 0; p < P; ++p) {
      require(games[s][p].is_number_integer(), "games entries must be integers");
      t.games[s * P + p] = games[s][p].get<std::int32_t>();
    }
  }

  t.validate();
  return t;
}

nlohmann::json bv_to_json(const BootstrapVariance& bv) {
  const std::size_t S = bv.seasons.size();
  const std::size_t P = bv.players.size();
  const std::size_t M = bv.metrics.size();

  nlohmann::json used = nlohmann::json::array();
  nlohmann::json observed = nlohmann::json::array();
  for (std::size_t s = 0; s < S; ++s) {
    nlohmann::json up = nlohmann::json::array();
    nlohmann::json op = nlohmann::json::array();
    for (std::size_t p = 0; p < P; ++p) {
      nlohmann::json um = nlohmann::json::array();
      nlohmann::json om = nlohmann::json::array();
      for (std::size_t m = 0; m < M; ++m) {
        um.push_back(bv.replicates_used[(s * P + p) * M + m]);
        om.push_back(bv.observed[(s * P + p) * M + m] != 0);
      }
      up.push_back(std::move(um));
      op.push_back(std::move(om));
    }
    used.push_back(std::move(up));
    observed.push_back(std::move(op));
  }

  return {
      {"format", "bootstrap-variance"},
      {"seasons", bv.seasons},
      {"players", bv.players},
      {"metrics", bv.metrics},
      {"replicates", bv.replicates},
      {"seed", bv.seed},
      {"bv", grid3_to_json(bv.bv, S, P, M)},
      {"replicates_used", std::move(used)},
      {"observed", std::move(observed)},
      {"warnings", bv.warnings},
  };
}

BootstrapVariance bv_from_json(const nlohmann::json& j) {
  require(j.is_object(), "variance document must be an object");
  require(field(j, "format") == "bootstrap-variance", "not a bootstrap-variance document");

  BootstrapVariance bv;
  bv.seasons = string_vector(field(j, "seasons"), "seasons");
  bv.players = string_vector(field(j, "players"), "players");
  bv.metrics = string_vector(field(j, "metrics"), "metrics");
  bv.replicates = field(j, "replicates").get<int>();
  bv.seed = field(j, "seed").get<std::uint64_t>();
  bv.warnings = string_vector(field(j, "warnings"), "warnings");

  const std::size_t S = bv.seasons.size(), P = bv.players.size(), M = bv.metrics.size();
  bv.bv = grid3_from_json(field(j, "bv"), S, P, M, "bv");

  const auto& used = field(j, "replicates_used");
  const auto& observed = field(j, "observed");
  require(used.is_array() && used.size() == S, "replicates_used season count mismatch");
  require(observed.is_array() && observed.size() == S, "observed season count mismatch");
  bv.replicates_used.assign(S * P * M, 0);
  bv.observed.assign(S * P * M, 0);
  for (std::size_t s = 0; s < S; ++s) {
    require(used[s].is_array() && used[s].size() == P, "replicates_used player count mismatch");
    require(observed[s].is_array() && observed[s].size() == P, "observed player count mismatch");
    for (std::size_t p = 0; p < P; ++p) {
      require(used[s][p].is_array() && used[s][p].size() == M, "replicates_used metric count mismatch");
      require(observed[s][p].is_array() && observed[s][p].size() == M, "observed metric count mismatch");
      for (std::size_t m = 0; m < M; ++m) {
        require(used[s][p][m].is_number_integer(), "replicates_used entries must be integers");
        require(observed[s][p][m].is_boolean(), "observed entries must be booleans");
        bv.replicates_used[(s * P + p) * M + m] = used[s][p][m].get<std::int32_t>();
        bv.observed[(s * P + p) * M + m] = observed[s][p][m].get<bool>() ? 1 : 0;
      }
    }
  }
  return bv;
}

void write_bv_csv(std::ostream& os, const BootstrapVariance& bv) {
  const std::size_t S = bv.seasons.size();
  const std::size_t P = bv.players.size();
  const std::size_t M = bv.metrics.size();
  os << "season,player_id,metric,bv,replicates_used\n";
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t i = (s * P + p) * M + m;
        if (!bv.observed[i]) continue;
        os << csv_field(bv.seasons[s]) << ',' << csv_field(bv.players[p]) << ','
           << csv_field(bv.metrics[m]) << ',' << format_double(bv.bv[i]) << ','
           << bv.replicates_used[i] << '\n';
      }
}

nlohmann::json meta_to_json(const MetaResult& result) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& sc : result.scores) {
    nlohmann::json seasons = nlohmann::json::array();
    for (const auto& sd : sc.seasons)
      seasons.push_back({{"season", sd.season},
                         {"discrimination_raw", number_or_null(sd.raw)},
                         {"discrimination", number_or_null(sd.clamped)},
                         {"players", sd.players}});
    scores.push_back({{"metric", sc.metric},
                      {"kind", to_string(sc.kind)},
                      {"discrimination", number_or_null(sc.discrimination)},
                      {"discrimination_raw", number_or_null(sc.discrimination_raw)},
                      {"stability", number_or_null(sc.stability)},
                      {"stability_raw", number_or_null(sc.stability_raw)},
                      {"stability_players", sc.stability_players},
                      {"player_seasons", sc.player_seasons},
                      {"seasons", std::move(seasons)}});
  }
  return {{"format", "meta-scores"},
          {"scores", std::move(scores)},
          {"warnings", result.warnings}};
}

void write_meta_csv(std::ostream& os, const MetaResult& result) {
  os << "metric,kind,discrimination,discrimination_raw,stability,stability_raw,"
        "stability_players,player_seasons";
  if (!result.scores.empty())
    for (const auto& sd : result.scores.front().seasons)
      os << ',' << csv_field("D_" + sd.season);
  os << '\n';
  for (const auto& sc : result.scores) {
    os << csv_field(sc.metric) << ',' << to_string(sc.kind) << ','
       << format_double(sc.discrimination) << ',' << format_double(sc.discrimination_raw)
       << ',' << format_double(sc.stability) << ',' << format_double(sc.stability_raw)
       << ',' << sc.stability_players << ',' << sc.player_seasons;
    for (const auto& sd : sc.seasons) os << ',' << format_double(sd.clamped);
    os << '\n';
  }
}

nlohmann::json correlation_to_json(const LatentCorrelation& corr) {
  return {
      {"format", "latent-correlation"},
      {"metrics", corr.metrics},
      {"mean", matrix_to_json(corr.mean)},
      {"draws_recorded", corr.draws.size()},
      {"rows_used", corr.rows_used},
      {"config",
       {{"iterations", corr.config.iterations},
        {"burnin", corr.config.burnin},
        {"thin", corr.config.thin},
        {"seed", corr.config.seed}}},
      {"warnings", corr.warnings},
  };
}

LatentCorrelation correlation_from_json(const nlohmann::json& j) {
  require(j.is_object(), "correlation document must be an object");
  require(field(j, "format") == "latent-correlation", "not a latent-correlation document");

  LatentCorrelation corr;
  corr.metrics = string_vector(field(j, "metrics"), "metrics");
  corr.mean = matrix_from_json(field(j, "mean"));
  require(corr.mean.rows() == static_cast<Eigen::Index>(corr.metrics.size()) &&
              corr.mean.cols() == corr.mean.rows(),
          "mean matrix must be square and align with metrics");
  corr.rows_used = field(j, "rows_used").get<int>();
  const auto& cfg = field(j, "config");
  corr.config.iterations = field(cfg, "iterations").get<int>();
  corr.config.burnin = field(cfg, "burnin").get<int>();
  corr.config.thin = field(cfg, "thin").get<int>();
  corr.config.seed = field(cfg, "seed").get<std::uint64_t>();
  corr.warnings = string_vector(field(j, "warnings"), "warnings");
  return corr;
}

nlohmann::json curve_to_json(const IndependenceCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : curve.points)
    points.push_back({{"set_size", pt.set_size},
                      {"score", number_or_null(pt.score)},
                      {"conditioning", pt.conditioning}});
  return {{"metric", curve.metric}, {"points", std::move(points)}};
}

nlohmann::json pca_to_json(const PcaResult& decomposition,
                           std::span<const std::string> metrics) {
  nlohmann::json eigenvalues = nlohmann::json::array();
  for (double v : decomposition.eigenvalues) eigenvalues.push_back(v);
  nlohmann::json fractions = nlohmann::json::array();
  for (double v : decomposition.cumulative_fraction) fractions.push_back(v);
  return {
      {"metrics", std::vector<std::string>(metrics.begin(), metrics.end())},
      {"eigenvalues", std::move(eigenvalues)},
      {"cumulative_fraction", std::move(fractions)},
      {"loadings", matrix_to_json(decomposition.eigenvectors)},
  };
}

nlohmann::json cluster_to_json(const ClusterTree& tree) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : tree.merges)
    merges.push_back({{"left", m.left},
                      {"right", m.right},
                      {"height", m.height},
                      {"size", m.size}});
  return {{"leaves", tree.leaves},
          {"merges", std::move(merges)},
          {"newick", tree.newick()}};
}

nlohmann::json shrinkage_to_json(const ShrinkageFit& fit) {
  nlohmann::json players = nlohmann::json::array();
  for (const auto& p : fit.players) {
    players.push_back({{"player", p.player},
                       {"career_rate", p.career_rate},
                       {"concentration", number_or_null(p.concentration)},
                       {"log_marginal", number_or_null(p.log_marginal)},
                       {"seasons", p.seasons},
                       {"makes", p.makes},
                       {"attempts", p.attempts},
                       {"raw", p.raw},
                       {"shrunk", p.shrunk}});
  }
  return {{"format", "shrinkage-fit"},
          {"metric", fit.metric},
          {"players", std::move(players)}};
}

void write_shrinkage_players_csv(std::ostream& os, const ShrinkageFit& fit) {
  os << "player_id,seasons,makes,attempts,career_rate,concentration,log_marginal\n";
  for (const auto& p : fit.players) {
    double makes = 0.0, attempts = 0.0;
    for (double z : p.makes) makes += z;
    for (double n : p.attempts) attempts += n;
    os << csv_field(p.player) << ',' << p.seasons.size() << ','
       << format_double(makes) << ',' << format_double(attempts) << ','
       << format_double(p.career_rate) << ',' << format_double(p.concentration)
       << ',' << format_double(p.log_marginal) << '\n';
  }
}

void write_shrinkage_seasons_csv(std::ostream& os, const ShrinkageFit& fit) {
  os << "player_id,season,makes,attempts,raw,shrunk\n";
  for (const auto& p : fit.players)
    for (std::size_t i = 0; i < p.seasons.size(); ++i)
      os << csv_field(p.player) << ',' << csv_field(p.seasons[i]) << ','
         << format_double(p.makes[i]) << ',' << format_double(p.attempts[i]) << ','
         << format_double(p.raw[i]) << ',' << format_double(p.shrunk[i]) << '\n';
}

nlohmann::json truth_to_json(const SynthTruth& truth) {
  nlohmann::json j = {
      {"format", "synthetic-truth"},
      {"model", truth.model},
      {"seed", truth.seed},
      {"closed_discrimination", number_or_null(truth.closed_discrimination)},
      {"closed_stability", number_or_null(truth.closed_stability)},
  };
  if (truth.model == "mixed_effects") {
    j["params"] = {{"grand_mean", truth.params.grand_mean},
                   {"season_var", truth.params.season_var},
                   {"player_var", truth.params.player_var},
                   {"interaction_var", truth.params.interaction_var},
                   {"noise_var", truth.params.noise_var}};
  }
  if (!truth.career_rates.empty()) j["career_rates"] = truth.career_rates;
  if (!truth.season_rates.empty()) j["season_rates"] = truth.season_rates;
  if (truth.correlation.size() > 0) j["correlation"] = matrix_to_json(truth.correlation);
  if (!truth.marginals.empty()) {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : truth.marginals) {
      const char* kind = "normal";
      switch (m.kind) {
        case Marginal::Kind::normal: kind = "normal"; break;
        case Marginal::Kind::lognormal: kind = "lognormal"; break;
        case Marginal::Kind::uniform: kind = "uniform"; break;
        case Marginal::Kind::counts: kind = "counts"; break;
      }
      ms.push_back({{"kind", kind}, {"a", m.a}, {"b", m.b}});
    }
    j["marginals"] = std::move(ms);
  }
  return j;
}

void write_pc_scores_csv(std::ostream& os, const PcScores& scores) {
  const std::size_t S = scores.seasons.size();
  const std::size_t P = scores.players.size();
  const std::size_t K = scores.components.size();
  os << "season,player_id,player_name";
  for (const auto& c : scores.components) os << ',' << csv_field(c);
  os << '\n';
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t p = 0; p < P; ++p) {
      bool any = false;
      for (std::size_t k = 0; k < K; ++k)
        if (!std::isnan(scores.w[(s * P + p) * K + k])) { any = true; break; }
      if (!any) continue;
      auto it = scores.player_names.find(scores.players[p]);
      os << csv_field(scores.seasons[s]) << ',' << csv_field(scores.players[p])
         << ',' << csv_field(it == scores.player_names.end() ? "" : it->second);
      for (std::size_t k = 0; k < K; ++k)
        os << ',' << format_double(scores.w[(s * P + p) * K + k]);
      os << '\n';
    }
}

}  // namespace mm
