#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "metametrics/bootstrap.hpp"
#include "metametrics/tensor.hpp"

namespace mmtest {

inline constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Dense tensor builder for hand cases; values in [season][player][metric]
// order, NaN = missing.
inline mm::MetricTensor build_tensor(std::vector<std::string> seasons,
                                     std::vector<std::string> players,
                                     std::vector<std::string> metrics,
                                     std::vector<mm::MetricKind> kinds,
                                     std::vector<double> values) {
  mm::MetricTensor t;
  t.seasons = std::move(seasons);
  t.players = std::move(players);
  t.metrics = std::move(metrics);
  t.kinds = std::move(kinds);
  t.values = std::move(values);
  const std::size_t cells = t.seasons.size() * t.players.size();
  t.attempts.assign(cells * t.metrics.size(), kNan);
  t.exposure.assign(cells, kNan);
  t.games.assign(cells, 0);
  for (std::size_t sp = 0; sp < cells; ++sp) {
    for (std::size_t m = 0; m < t.metrics.size(); ++m) {
      if (!std::isnan(t.values[sp * t.metrics.size() + m])) {
        t.games[sp] = 1;
        break;
      }
    }
  }
  return t;
}

// Variance block aligned with the tensor: one bv value everywhere the tensor
// is observed.
inline mm::BootstrapVariance build_bv(const mm::MetricTensor& t, double bv) {
  mm::BootstrapVariance out;
  out.seasons = t.seasons;
  out.players = t.players;
  out.metrics = t.metrics;
  out.replicates = 100;
  out.seed = 1;
  const std::size_t n = t.values.size();
  out.bv.assign(n, kNan);
  out.replicates_used.assign(n, 0);
  out.observed.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isnan(t.values[j])) {
      out.bv[j] = bv;
      out.replicates_used[j] = 100;
      out.observed[j] = 1;
    }
  }
  return out;
}

}  // namespace mmtest
