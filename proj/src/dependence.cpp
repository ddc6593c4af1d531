#include "metametrics/dependence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "metametrics/error.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_correlation(const Eigen::MatrixXd& corr) {
  if (corr.rows() == 0 || corr.rows() != corr.cols()) {
    fail(ErrorCode::invalid_argument, "correlation matrix must be square");
  }
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-8) {
      fail(ErrorCode::invalid_argument, "correlation matrix needs a unit diagonal");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(corr(i, j) - corr(j, i)) > 1e-8) {
        fail(ErrorCode::invalid_argument, "correlation matrix must be symmetric");
      }
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

LatentScores latent_scores(const MetricTensor& tensor) {
  tensor.validate();
  const std::size_t S = tensor.season_count();
  const std::size_t P = tensor.player_count();
  const std::size_t M = tensor.metric_count();

  LatentScores out;
  out.seasons = tensor.seasons;
  out.players = tensor.players;
  out.metrics = tensor.metrics;
  out.player_names = tensor.player_names;
  out.z.assign(S * P * M, kNan);

  std::vector<std::pair<double, std::size_t>> column;  // (value, flat cell)
  for (std::size_t m = 0; m < M; ++m) {
    column.clear();
    for (std::size_t sp = 0; sp < S * P; ++sp) {
      double v = tensor.values[sp * M + m];
      if (!std::isnan(v)) column.emplace_back(v, sp);
    }
    if (column.empty()) {
      fail(ErrorCode::degenerate_metric,
           "metric '" + tensor.metrics[m] + "' has no observations");
    }
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && column[j + 1].first == column[i].first) ++j;
      // Average rank for the tie run [i, j], 1-based.
      double rank = 0.5 * static_cast<double>(i + j) + 1.0;
      double z = qnorm(rank / static_cast<double>(n + 1));
      for (std::size_t k = i; k <= j; ++k) {
        out.z[column[k].second * M + m] = z;
      }
      i = j + 1;
    }
  }
  return out;
}

double independence_score(const Eigen::MatrixXd& corr, int target,
                          std::span<const int> given) {
  check_correlation(corr);
  const int M = static_cast<int>(corr.rows());
  if (target < 0 || target >= M) {
    fail(ErrorCode::invalid_argument, "target metric index out of range");
  }
  std::vector<char> seen(M, 0);
  seen[target] = 1;
  for (int g : given) {
    if (g < 0 || g >= M) {
      fail(ErrorCode::invalid_argument, "conditioning index out of range");
    }
    if (seen[g]) {
      fail(ErrorCode::invalid_argument,
           "conditioning set repeats an index or includes the target");
    }
    seen[g] = 1;
  }
  if (given.empty()) return corr(target, target);

  const int G = static_cast<int>(given.size());
  Eigen::MatrixXd cgg(G, G);
  Eigen::VectorXd ctg(G);
  for (int a = 0; a < G; ++a) {
    ctg(a) = corr(target, given[a]);
    for (int b = 0; b < G; ++b) cgg(a, b) = corr(given[a], given[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cgg);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::singular_matrix,
         "conditioning block is singular; metrics are linearly dependent");
  }
  double score = corr(target, target) - ctg.dot(llt.solve(ctg));
  if (!std::isfinite(score)) {
    fail(ErrorCode::singular_matrix, "conditioning produced a non-finite score");
  }
  return score;
}

IndependenceCurve independence_curve(const Eigen::MatrixXd& corr,
                                     std::span<const std::string> metrics,
                                     const std::string& target) {
  check_correlation(corr);
  if (static_cast<Eigen::Index>(metrics.size()) != corr.rows()) {
    fail(ErrorCode::invalid_argument, "metric names do not match matrix size");
  }
  int t = -1;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (metrics[i] == target) {
      t = static_cast<int>(i);
      break;
    }
  }
  if (t < 0) fail(ErrorCode::invalid_argument, "unknown metric '" + target + "'");

  IndependenceCurve curve;
  curve.metric = target;

  std::vector<int> active;  // current conditioning set, original order
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (static_cast<int>(i) != t) active.push_back(static_cast<int>(i));
  }

  for (;;) {
    IndependencePoint point;
    point.set_size = static_cast<int>(active.size());
    point.score = independence_score(corr, t, active);
    for (int i : active) point.conditioning.push_back(metrics[i]);
    curve.points.push_back(std::move(point));
    if (active.empty()) break;

    // Drop the metric whose removal keeps the score lowest.
    int best_pos = -1;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<int> reduced(active.size() - 1);
    for (std::size_t d = 0; d < active.size(); ++d) {
      reduced.clear();
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (i != d) reduced.push_back(active[i]);
      }
      double s = independence_score(corr, t, reduced);
      bool better = s < best_score;
      if (s == best_score && best_pos >= 0) {
        better = metrics[active[d]] < metrics[active[best_pos]];
      }
      if (better) {
        best_score = s;
        best_pos = static_cast<int>(d);
      }
    }
    active.erase(active.begin() + best_pos);
  }
  return curve;
}

PcaResult pca(const Eigen::MatrixXd& corr) {
  check_correlation(corr);
  const Eigen::Index M = corr.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::singular_matrix, "eigendecomposition failed");
  }

  PcaResult out;
  out.eigenvalues.resize(M);
  out.eigenvectors.resize(M, M);
  // Eigen returns ascending order; flip to descending.
  for (Eigen::Index k = 0; k < M; ++k) {
    double lambda = solver.eigenvalues()(M - 1 - k);
    if (lambda < -1e-8) {
      fail(ErrorCode::not_positive_definite,
           "correlation matrix has a negative eigenvalue");
    }
    out.eigenvalues[k] = lambda;
    out.eigenvectors.col(k) = solver.eigenvectors().col(M - 1 - k);
  }

  // Canonical sign: largest-magnitude coordinate positive.
  for (Eigen::Index k = 0; k < M; ++k) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < M; ++i) {
      double a = std::abs(out.eigenvectors(i, k));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (out.eigenvectors(arg, k) < 0.0) out.eigenvectors.col(k) *= -1.0;
  }

  double total = 0.0;
  for (double l : out.eigenvalues) total += l;
  if (!(total > 0.0)) {
    fail(ErrorCode::invalid_argument, "correlation matrix has zero trace");
  }
  out.cumulative_fraction.resize(M);
  double run = 0.0;
  for (Eigen::Index k = 0; k < M; ++k) {
    run += out.eigenvalues[k];
    out.cumulative_fraction[k] = run / total;
  }
  return out;
}

PcScores pc_scores(const LatentScores& scores, const PcaResult& decomposition,
                   int components) {
  const std::size_t S = scores.seasons.size();
  const std::size_t P = scores.players.size();
  const std::size_t M = scores.metrics.size();
  if (decomposition.eigenvectors.rows() != static_cast<Eigen::Index>(M)) {
    fail(ErrorCode::invalid_argument,
         "decomposition does not match the latent score metrics");
  }
  if (components < 1 ||
      components > static_cast<int>(decomposition.eigenvectors.cols())) {
    fail(ErrorCode::invalid_argument, "component count out of range");
  }

  PcScores out;
  out.seasons = scores.seasons;
  out.players = scores.players;
  out.player_names = scores.player_names;
  for (int k = 1; k <= components; ++k) {
    out.components.push_back("PC" + std::to_string(k));
  }
  out.w.assign(S * P * components, kNan);

  std::vector<double> zrow(M);
  for (std::size_t sp = 0; sp < S * P; ++sp) {
    bool any = false;
    for (std::size_t m = 0; m < M; ++m) {
      double z = scores.z[sp * M + m];
      if (std::isnan(z)) {
        zrow[m] = 0.0;  // latent median
      } else {
        zrow[m] = z;
        any = true;
      }
    }
    if (!any) continue;
    for (std::size_t m = 0; m < M; ++m) {
      if (std::isnan(scores.z[sp * M + m])) ++out.imputed;
    }
    for (int k = 0; k < components; ++k) {
      double w = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        w += zrow[m] * decomposition.eigenvectors(m, k);
      }
      out.w[sp * components + k] = w;
    }
  }
  return out;
}

std::vector<PlayerRank> rank_players(const PcScores& scores,
                                     const std::string& season, int component,
                                     int top_n) {
  auto it = std::find(scores.seasons.begin(), scores.seasons.end(), season);
  if (it == scores.seasons.end()) {
    fail(ErrorCode::invalid_argument, "unknown season '" + season + "'");
  }
  if (component < 1 || component > static_cast<int>(scores.components.size())) {
    fail(ErrorCode::invalid_argument, "component out of range");
  }
  if (top_n < 1) fail(ErrorCode::invalid_argument, "top_n must be positive");

  const std::size_t s = static_cast<std::size_t>(it - scores.seasons.begin());
  const std::size_t P = scores.players.size();
  const std::size_t C = scores.components.size();
  std::vector<PlayerRank> ranks;
  for (std::size_t p = 0; p < P; ++p) {
    double w = scores.w[(s * P + p) * C + (component - 1)];
    if (std::isnan(w)) continue;
    PlayerRank r;
    r.player = scores.players[p];
    auto nm = scores.player_names.find(r.player);
    if (nm != scores.player_names.end()) r.name = nm->second;
    r.score = w;
    ranks.push_back(std::move(r));
  }
  std::sort(ranks.begin(), ranks.end(), [](const PlayerRank& a, const PlayerRank& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.player < b.player;
  });
  if (ranks.size() > static_cast<std::size_t>(top_n)) ranks.resize(top_n);
  return ranks;
}

ClusterTree cluster_metrics(const Eigen::MatrixXd& corr,
                            std::span<const std::string> metrics) {
  check_correlation(corr);
  const int M = static_cast<int>(corr.rows());
  if (static_cast<int>(metrics.size()) != M) {
    fail(ErrorCode::invalid_argument, "metric names do not match matrix size");
  }
  if (M < 2) {
    fail(ErrorCode::insufficient_data, "clustering needs at least 2 metrics");
  }

  ClusterTree tree;
  tree.leaves.assign(metrics.begin(), metrics.end());

  // Active clusters with average-linkage distances (Lance-Williams update).
  struct Node {
    int id;
    int size;
  };
  std::vector<Node> active;
  for (int i = 0; i < M; ++i) active.push_back({i, 1});
  std::vector<std::vector<double>> dist(M);
  for (int i = 0; i < M; ++i) {
    dist[i].resize(M);
    for (int j = 0; j < M; ++j) {
      dist[i][j] = i == j ? 0.0 : std::max(0.0, 1.0 - std::abs(corr(i, j)));
    }
  }

  int next_id = M;
  while (active.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        double d = dist[i][j];
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }

    ClusterMerge merge;
    merge.left = active[bi].id;
    merge.right = active[bj].id;
    merge.height = best;
    merge.size = active[bi].size + active[bj].size;
    tree.merges.push_back(merge);

    // Replace cluster bi with the merge; drop bj.
    const double ni = active[bi].size, nj = active[bj].size;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == bi || k == bj) continue;
      double d = (ni * dist[bi][k] + nj * dist[bj][k]) / (ni + nj);
      dist[bi][k] = d;
      dist[k][bi] = d;
    }
    active[bi] = {next_id++, merge.size};
    active.erase(active.begin() + bj);
    for (auto& row : dist) row.erase(row.begin() + bj);
    dist.erase(dist.begin() + bj);
  }
  return tree;
}

namespace {

std::string newick_label(const std::string& name) {
  bool needs_quote = name.find_first_of(" ():;,'\t") != std::string::npos;
  if (!needs_quote) return name;
  std::string out = "'";
  for (char c : name) {
    if (c == '\'') out += "''";
    else out += c;
  }
  out += "'";
  return out;
}

}  // namespace

std::string ClusterTree::newick() const {
  if (leaves.empty()) return ";";
  const int M = static_cast<int>(leaves.size());
  // height of each node; branch length = parent height - child height.
  std::vector<double> height(M + merges.size(), 0.0);
  for (std::size_t t = 0; t < merges.size(); ++t) {
    height[M + t] = merges[t].height;
  }
  std::vector<std::string> label(M + merges.size());
  for (int i = 0; i < M; ++i) label[i] = newick_label(leaves[i]);
  for (std::size_t t = 0; t < merges.size(); ++t) {
    const ClusterMerge& m = merges[t];
    double h = merges[t].height;
    label[M + t] = "(" + label[m.left] + ":" +
                   format_double(h - height[m.left]) + "," + label[m.right] +
                   ":" + format_double(h - height[m.right]) + ")";
  }
  return label.back() + ";";
}

}  // namespace mm
