#include "metametrics/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metametrics/error.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double beta_binomial_log_marginal(std::span<const double> makes,
                                  std::span<const double> attempts,
                                  double career_rate, double r) {
  if (!(career_rate > 0.0) || !(career_rate < 1.0)) {
    fail(ErrorCode::invalid_argument,
         "beta-binomial marginal needs a career rate inside (0,1)");
  }
  if (!(r > 0.0)) {
    fail(ErrorCode::invalid_argument, "concentration must be positive");
  }
  double alpha = r * career_rate;
  double beta = r * (1.0 - career_rate);
  double ll = 0.0;
  for (std::size_t i = 0; i < makes.size(); ++i) {
    double n = attempts[i];
    double z = makes[i];
    ll += lchoose(n, z) + lbeta(z + alpha, n - z + beta) - lbeta(alpha, beta);
  }
  return ll;
}

double fit_concentration(std::span<const double> makes,
                         std::span<const double> attempts, double career_rate,
                         const ShrinkageOptions& options, double* log_marginal) {
  if (makes.empty() || makes.size() != attempts.size()) {
    fail(ErrorCode::insufficient_data, "concentration fit needs season data");
  }
  auto objective = [&](double log_r) {
    return beta_binomial_log_marginal(makes, attempts, career_rate,
                                      std::exp(log_r));
  };

  // Coarse scan keeps the refinement out of local optima on flat surfaces.
  const int n = std::max(options.grid_points, 4);
  double best_x = options.log_r_lo;
  double best_f = -std::numeric_limits<double>::infinity();
  double step = (options.log_r_hi - options.log_r_lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    double x = options.log_r_lo + step * i;
    double f = objective(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  double lo = std::max(options.log_r_lo, best_x - step);
  double hi = std::min(options.log_r_hi, best_x + step);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > options.tolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double x = 0.5 * (a + b);
  if (log_marginal) *log_marginal = objective(x);
  return std::exp(x);
}

double shrunken_rate(double makes, double attempts, double career_rate, double r) {
  return (makes + r * career_rate) / (attempts + r);
}

ShrinkageFit fit_shrinkage(const MetricTensor& tensor, const std::string& metric,
                           const ShrinkageOptions& options) {
  int m = tensor.metric_index(metric);
  if (m < 0) {
    fail(ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
  }
  if (tensor.kinds[m] != MetricKind::percentage) {
    fail(ErrorCode::invalid_argument,
         "shrinkage applies to percentage metrics; '" + metric + "' is " +
             to_string(tensor.kinds[m]));
  }

  ShrinkageFit fit;
  fit.metric = metric;
  fit.options = options;

  const std::size_t S = tensor.season_count();
  const std::size_t P = tensor.player_count();
  for (std::size_t p = 0; p < P; ++p) {
    PlayerShrinkage ps;
    ps.player = tensor.players[p];
    for (std::size_t s = 0; s < S; ++s) {
      double v = tensor.value(s, p, m);
      double n = tensor.attempts[tensor.index(s, p, m)];
      if (std::isnan(v) || std::isnan(n) || !(n > 0.0)) continue;
      if (v < 0.0 || v > 1.0) {
        fail(ErrorCode::invalid_argument,
             "metric '" + metric + "' has value outside [0,1] for player " +
                 ps.player + "; shrinkage needs plain rates");
      }
      ps.seasons.push_back(tensor.seasons[s]);
      ps.attempts.push_back(n);
      ps.makes.push_back(v * n);
      ps.raw.push_back(v);
    }
    if (ps.seasons.empty()) continue;

    double total_makes = 0.0, total_attempts = 0.0;
    for (std::size_t i = 0; i < ps.makes.size(); ++i) {
      total_makes += ps.makes[i];
      total_attempts += ps.attempts[i];
    }
    ps.career_rate = total_makes / total_attempts;

    if (ps.career_rate <= 0.0 || ps.career_rate >= 1.0) {
      // Every season is all misses or all makes; the posterior mean equals
      // the career rate no matter the concentration.
      ps.concentration = kNan;
      ps.log_marginal = 0.0;
      ps.shrunk = ps.raw;
    } else {
      ps.concentration = fit_concentration(ps.makes, ps.attempts, ps.career_rate,
                                           options, &ps.log_marginal);
      ps.shrunk.reserve(ps.raw.size());
      for (std::size_t i = 0; i < ps.makes.size(); ++i) {
        ps.shrunk.push_back(shrunken_rate(ps.makes[i], ps.attempts[i],
                                          ps.career_rate, ps.concentration));
      }
    }
    fit.players.push_back(std::move(ps));
  }

  if (fit.players.empty()) {
    fail(ErrorCode::insufficient_data,
         "no player has '" + metric + "' observed with positive attempts");
  }
  return fit;
}

MetricTensor append_shrunken_column(const MetricTensor& tensor,
                                    const ShrinkageFit& fit,
                                    const std::string& new_name) {
  if (tensor.metric_index(new_name) >= 0) {
    fail(ErrorCode::duplicate_metric, "metric '" + new_name + "' already exists");
  }
  int src = tensor.metric_index(fit.metric);
  if (src < 0) {
    fail(ErrorCode::invalid_argument,
         "fit metric '" + fit.metric + "' not in tensor");
  }

  const std::size_t S = tensor.season_count();
  const std::size_t P = tensor.player_count();
  const std::size_t M = tensor.metric_count();

  MetricTensor out;
  out.seasons = tensor.seasons;
  out.players = tensor.players;
  out.metrics = tensor.metrics;
  out.metrics.push_back(new_name);
  out.kinds = tensor.kinds;
  out.kinds.push_back(MetricKind::percentage);
  out.exposure_stat = tensor.exposure_stat;
  out.player_names = tensor.player_names;
  out.exposure = tensor.exposure;
  out.games = tensor.games;

  out.values.assign(S * P * (M + 1), kNan);
  out.attempts.assign(S * P * (M + 1), kNan);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t m = 0; m < M; ++m) {
        out.values[out.index(s, p, m)] = tensor.values[tensor.index(s, p, m)];
        out.attempts[out.index(s, p, m)] = tensor.attempts[tensor.index(s, p, m)];
      }
    }
  }
  for (const PlayerShrinkage& ps : fit.players) {
    int p = tensor.player_index(ps.player);
    if (p < 0) {
      fail(ErrorCode::invalid_argument,
           "fit player '" + ps.player + "' not in tensor");
    }
    for (std::size_t i = 0; i < ps.seasons.size(); ++i) {
      int s = tensor.season_index(ps.seasons[i]);
      if (s < 0) {
        fail(ErrorCode::invalid_argument,
             "fit season '" + ps.seasons[i] + "' not in tensor");
      }
      std::size_t at = out.index(s, p, M);
      out.values[at] = ps.shrunk[i];
      out.attempts[at] = ps.attempts[i];
    }
  }
  return out;
}

}  // namespace mm
