#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "metametrics/dependence.hpp"
#include "metametrics/error.hpp"
#include "metametrics/rng.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

// Mirrors the lower triangle so results are exactly symmetric even when the
// input carries last-ulp asymmetry from matrix products.
Eigen::MatrixXd cov2cor(const Eigen::MatrixXd& sigma) {
  const Eigen::Index M = sigma.rows();
  Eigen::VectorXd d(M);
  for (Eigen::Index i = 0; i < M; ++i) d(i) = 1.0 / std::sqrt(sigma(i, i));
  Eigen::MatrixXd c(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double v = sigma(i, j) * d(i) * d(j);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

// Tie structure of one metric column: observed row positions in value order,
// split into runs of equal value.
struct ColumnLevels {
  std::vector<int> order;        // row positions sorted by value
  std::vector<int> level_start;  // run offsets into order, sentinel at end
  std::vector<int> missing;      // unobserved row positions
};

}  // namespace

LatentCorrelation fit_copula(const MetricTensor& tensor,
                             const CopulaConfig& config) {
  if (config.iterations < 1 || config.burnin < 0 ||
      config.burnin >= config.iterations || config.thin < 1) {
    fail(ErrorCode::invalid_argument,
         "copula config needs iterations > burnin >= 0 and thin >= 1");
  }
  tensor.validate();

  const std::size_t SP = tensor.season_count() * tensor.player_count();
  const std::size_t M = tensor.metric_count();

  // Player-season rows with at least one observed metric.
  std::vector<std::size_t> cells;
  for (std::size_t sp = 0; sp < SP; ++sp) {
    for (std::size_t m = 0; m < M; ++m) {
      if (!std::isnan(tensor.values[sp * M + m])) {
        cells.push_back(sp);
        break;
      }
    }
  }
  const int n = static_cast<int>(cells.size());
  if (n < 2) {
    fail(ErrorCode::insufficient_data,
         "copula fit needs at least 2 player-season rows");
  }

  LatentCorrelation out;
  out.metrics = tensor.metrics;
  out.config = config;
  out.rows_used = n;

  if (M == 1) {
    out.mean = Eigen::MatrixXd::Ones(1, 1);
    out.draws.assign(1, out.mean);
    return out;
  }

  // Level structure and rank-based initialization.
  std::vector<ColumnLevels> columns(M);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Z(n, M);
  Z.setZero();
  {
    std::vector<std::pair<double, int>> obs;
    for (std::size_t m = 0; m < M; ++m) {
      obs.clear();
      ColumnLevels& col = columns[m];
      for (int i = 0; i < n; ++i) {
        double v = tensor.values[cells[i] * M + m];
        if (std::isnan(v)) {
          col.missing.push_back(i);
        } else {
          obs.emplace_back(v, i);
        }
      }
      if (obs.empty()) {
        fail(ErrorCode::degenerate_metric,
             "metric '" + tensor.metrics[m] + "' has no observations");
      }
      std::sort(obs.begin(), obs.end());
      const int k = static_cast<int>(obs.size());
      col.order.resize(k);
      for (int i = 0; i < k; ++i) col.order[i] = obs[i].second;
      int i = 0;
      while (i < k) {
        col.level_start.push_back(i);
        int j = i;
        while (j + 1 < k && obs[j + 1].first == obs[i].first) ++j;
        double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        double z = qnorm(rank / static_cast<double>(k + 1));
        for (int a = i; a <= j; ++a) Z(obs[a].second, m) = z;
        i = j + 1;
      }
      col.level_start.push_back(k);
    }
  }

  Rng rng(Rng::mix({config.seed, Rng::hash("copula")}));
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(M, M);
  const double df0 = static_cast<double>(M) + 2.0;  // prior degrees of freedom

  Eigen::VectorXd beta_full(M);
  std::vector<double> suffix_min;
  Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(M, M);

  const double inf = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    for (std::size_t j = 0; j < M; ++j) {
      // Conditional of column j given the rest under the current sigma.
      Eigen::MatrixXd rest(M - 1, M - 1);
      Eigen::VectorXd cross(M - 1);
      {
        Eigen::Index a2 = 0;
        for (std::size_t a = 0; a < M; ++a) {
          if (a == j) continue;
          cross(a2) = sigma(a, j);
          Eigen::Index b2 = 0;
          for (std::size_t b = 0; b < M; ++b) {
            if (b == j) continue;
            rest(a2, b2) = sigma(a, b);
            ++b2;
          }
          ++a2;
        }
      }
      Eigen::VectorXd beta = rest.llt().solve(cross);
      double cond_var = sigma(j, j) - cross.dot(beta);
      double cond_sd = std::sqrt(std::max(cond_var, 1e-12));
      beta_full.setZero();
      {
        Eigen::Index a2 = 0;
        for (std::size_t a = 0; a < M; ++a) {
          if (a == j) continue;
          beta_full(a) = beta(a2);
          ++a2;
        }
      }

      const ColumnLevels& col = columns[j];
      const int k = static_cast<int>(col.order.size());

      // Upper bounds come from not-yet-updated higher levels, so take
      // suffix minima of the pre-sweep values.
      suffix_min.assign(k + 1, inf);
      for (int pos = k - 1; pos >= 0; --pos) {
        suffix_min[pos] = std::min(suffix_min[pos + 1], Z(col.order[pos], j));
      }

      double running_max = -inf;
      const int levels = static_cast<int>(col.level_start.size()) - 1;
      for (int L = 0; L < levels; ++L) {
        const int lo = col.level_start[L];
        const int hi = col.level_start[L + 1];
        const double lb = running_max;
        const double ub = suffix_min[hi];
        double level_max = -inf;
        for (int pos = lo; pos < hi; ++pos) {
          int i = col.order[pos];
          double mu = Z.row(i).dot(beta_full);
          double z = rng.truncated_normal(mu, cond_sd, lb, ub);
          Z(i, j) = z;
          level_max = std::max(level_max, z);
        }
        running_max = std::max(running_max, level_max);
      }
      for (int i : col.missing) {
        double mu = Z.row(i).dot(beta_full);
        Z(i, j) = rng.normal(mu, cond_sd);
      }
    }

    // sigma | Z: inverse-Wishart with identity prior scale.
    Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(M, M) + Z.transpose() * Z;
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::not_positive_definite, "latent scatter matrix not PSD");
    }
    const double df = df0 + static_cast<double>(n);
    Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(M, M);
    for (std::size_t i = 0; i < M; ++i) {
      bart(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
      for (std::size_t c = 0; c < i; ++c) bart(i, c) = rng.normal();
    }
    // Bartlett draw of Wishart(df, scale^-1): F * bart with F Fᵀ = scale^-1,
    // here F = L^-T from the Cholesky of the scale.
    Eigen::MatrixXd fa = llt.matrixL().transpose().solve(bart);
    Eigen::MatrixXd wishart = fa * fa.transpose();
    sigma = wishart.llt().solve(Eigen::MatrixXd::Identity(M, M));
    // inverse solve leaves last-ulp asymmetry; keep draws exactly symmetric
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();

    if (sweep >= config.burnin && (sweep - config.burnin) % config.thin == 0) {
      Eigen::MatrixXd corr = cov2cor(sigma);
      mean_acc += corr;
      out.draws.push_back(std::move(corr));
    }
  }

  out.mean = mean_acc / static_cast<double>(out.draws.size());
  out.mean.diagonal().setOnes();

  // The average of correlation draws is PSD up to rounding; nudge tiny
  // negative eigenvalues away if they appear.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.mean);
  if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() < 0.0) {
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(1e-10);
    Eigen::MatrixXd fixed =
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    out.mean = cov2cor(fixed);
    out.warnings.push_back(
        "posterior mean required an eigenvalue floor to stay PSD");
  }
  return out;
}

}  // namespace mm
