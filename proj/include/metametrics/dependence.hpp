#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metametrics/tensor.hpp"

namespace mm {

// Normal scores of each metric column: qnorm(rank / (n+1)) over all observed
// player-season entries, with average ranks for ties. Missing entries stay
// NaN.
struct LatentScores {
  std::vector<std::string> seasons;
  std::vector<std::string> players;
  std::vector<std::string> metrics;
  std::vector<double> z;  // seasons * players * metrics, NaN = missing
  std::unordered_map<std::string, std::string> player_names;

  std::size_t index(std::size_t s, std::size_t p, std::size_t m) const {
    return (s * players.size() + p) * metrics.size() + m;
  }
};

LatentScores latent_scores(const MetricTensor& tensor);

struct CopulaConfig {
  int iterations = 2000;  // post-initialization Gibbs sweeps
  int burnin = 500;       // sweeps discarded before recording
  int thin = 5;           // record every thin-th sweep after burnin
  std::uint64_t seed = 0;
};

// Posterior over the latent correlation matrix of a Gaussian copula fit to
// the metric columns through their ranks alone (extended rank likelihood).
// Ties are left unconstrained against each other; missing entries are
// imputed from the conditional normal each sweep.
struct LatentCorrelation {
  std::vector<std::string> metrics;
  Eigen::MatrixXd mean;                // posterior mean, unit diagonal
  std::vector<Eigen::MatrixXd> draws;  // recorded correlation draws
  CopulaConfig config;
  int rows_used = 0;  // player-season rows with at least one observed metric
  std::vector<std::string> warnings;
};

LatentCorrelation fit_copula(const MetricTensor& tensor,
                             const CopulaConfig& config = {});

// Residual variance of metric `target` after conditioning on `given` under
// the latent correlation: C_tt - C_tG inv(C_GG) C_Gt. With a unit diagonal
// this is 1 minus the squared multiple correlation.
double independence_score(const Eigen::MatrixXd& corr, int target,
                          std::span<const int> given);

struct IndependencePoint {
  int set_size = 0;
  double score = 1.0;
  std::vector<std::string> conditioning;  // metric names, original order
};

struct IndependenceCurve {
  std::string metric;
  std::vector<IndependencePoint> points;  // set sizes M-1 down to 0
};

// Greedy curve: starting from all other metrics, repeatedly drop the metric
// whose removal keeps the score lowest (ties: lexicographically smallest
// name), recording the score at every set size.
IndependenceCurve independence_curve(const Eigen::MatrixXd& corr,
                                     std::span<const std::string> metrics,
                                     const std::string& target);

struct PcaResult {
  std::vector<double> eigenvalues;          // descending
  Eigen::MatrixXd eigenvectors;             // columns, sign-canonicalized
  std::vector<double> cumulative_fraction;  // share of total variance
};

// Eigendecomposition of a correlation matrix. Each eigenvector is oriented
// so its largest-magnitude coordinate is positive.
PcaResult pca(const Eigen::MatrixXd& corr);

// Orthogonal metric values W = Z U for the first `components` eigenvectors.
// A row with every metric missing stays missing; otherwise missing latent
// entries are imputed at 0 (the latent median) and counted.
struct PcScores {
  std::vector<std::string> seasons;
  std::vector<std::string> players;
  std::vector<std::string> components;  // "PC1", "PC2", ...
  std::vector<double> w;                // seasons * players * components
  int imputed = 0;
  std::unordered_map<std::string, std::string> player_names;

  std::size_t index(std::size_t s, std::size_t p, std::size_t c) const {
    return (s * players.size() + p) * components.size() + c;
  }
};

PcScores pc_scores(const LatentScores& scores, const PcaResult& decomposition,
                   int components);

struct PlayerRank {
  std::string player;
  std::string name;
  double score = 0.0;
};

// Players of one season ordered by a component's score, highest first.
std::vector<PlayerRank> rank_players(const PcScores& scores,
                                     const std::string& season, int component,
                                     int top_n);

// Average-linkage agglomeration on distance 1 - |corr|.
struct ClusterMerge {
  int left = 0;   // node ids: 0..M-1 leaves, then M, M+1, ... per merge
  int right = 0;
  double height = 0.0;
  int size = 0;  // leaves under the merged node
};

struct ClusterTree {
  std::vector<std::string> leaves;  // metric names
  std::vector<ClusterMerge> merges;
  std::string newick() const;
};

ClusterTree cluster_metrics(const Eigen::MatrixXd& corr,
                            std::span<const std::string> metrics);

}  // namespace mm
