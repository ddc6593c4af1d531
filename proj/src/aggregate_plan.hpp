#pragma once

// Internal: precompiled aggregation shared by aggregate_and_evaluate and the
// bootstrap engine, so base values and resampled replicates go through the
// same totals-and-evaluate path.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metametrics/dsl.hpp"
#include "metametrics/model.hpp"

namespace mm::internal {

struct AggregatePlan {
  std::size_t S = 0, P = 0, M = 0, K = 0;
  std::vector<std::string> seasons;  // sorted
  std::vector<std::string> players;  // sorted
  std::vector<std::string> metrics;  // definition order
  std::vector<MetricKind> kinds;
  std::vector<int> season_map;  // log season idx -> tensor idx
  std::vector<int> player_map;  // log player idx -> tensor idx
  std::vector<CompiledExpr> programs;
  std::vector<std::vector<int>> used_stats;  // stat columns per metric
  std::vector<int> attempt_col;              // -1 = none
  int exposure_col = -1;
  std::string exposure_stat;

  static AggregatePlan build(const GameLog& log,
                             std::span<const MetricDefinition> defs,
                             const std::string& exposure_stat);
};

// Accumulates one game line into season totals. sums/bad are (S*P*K) blocks,
// nrows is (S*P).
inline void accumulate_row(const AggregatePlan& plan, const GameLog::RowView& r,
                           double* sums, unsigned char* bad,
                           std::int32_t* nrows) {
  std::size_t s = static_cast<std::size_t>(plan.season_map[r.season]);
  std::size_t p = static_cast<std::size_t>(plan.player_map[r.player]);
  std::size_t base = (s * plan.P + p) * plan.K;
  nrows[s * plan.P + p] += 1;
  for (std::size_t k = 0; k < plan.K; ++k) {
    double v = r.values[k];
    if (std::isnan(v)) {
      bad[base + k] = 1;
    } else {
      sums[base + k] += v;
    }
  }
}

// Evaluates metric m on one (season, player) totals row. Returns NaN when
// an input stat is poisoned or the expression is undefined; the flags tell
// the two cases apart for warning counts.
inline double eval_metric(const AggregatePlan& plan, std::size_t m,
                          const double* totals, const unsigned char* poison,
                          bool* poisoned, bool* undefined) {
  for (int k : plan.used_stats[m]) {
    if (poison[k]) {
      if (poisoned) *poisoned = true;
      return std::numeric_limits<double>::quiet_NaN();
    }
  }
  CompiledExpr::Value v = plan.programs[m].evaluate(totals);
  if (v.divide_by_zero || !std::isfinite(v.value)) {
    if (undefined) *undefined = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v.value;
}

}  // namespace mm::internal
