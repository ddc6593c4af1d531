#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "metametrics/dsl.hpp"
#include "metametrics/model.hpp"

namespace mm {

// Season-level metric values indexed [season][player][metric], with NaN for
// entries that are missing (player absent that season, or the metric was
// undefined on their totals). Season and player axes are sorted; metrics
// keep definition order.
struct MetricTensor {
  std::vector<std::string> seasons;
  std::vector<std::string> players;
  std::vector<std::string> metrics;
  std::vector<MetricKind> kinds;  // parallel to metrics

  std::vector<double> values;    // seasons * players * metrics
  std::vector<double> attempts;  // same shape; NaN unless percentage metric
  std::vector<double> exposure;  // seasons * players; NaN = unknown
  std::vector<std::int32_t> games;  // seasons * players; 0 = no lines

  std::string exposure_stat;  // column the exposure came from; empty = none
  std::unordered_map<std::string, std::string> player_names;

  std::size_t season_count() const { return seasons.size(); }
  std::size_t player_count() const { return players.size(); }
  std::size_t metric_count() const { return metrics.size(); }

  std::size_t index(std::size_t s, std::size_t p, std::size_t m) const {
    return (s * players.size() + p) * metrics.size() + m;
  }
  std::size_t cell(std::size_t s, std::size_t p) const {
    return s * players.size() + p;
  }

  double value(std::size_t s, std::size_t p, std::size_t m) const {
    return values[index(s, p, m)];
  }
  bool observed(std::size_t s, std::size_t p, std::size_t m) const {
    return !std::isnan(values[index(s, p, m)]);
  }

  // Index of a named axis entry, or -1.
  int metric_index(const std::string& name) const;
  int season_index(const std::string& name) const;
  int player_index(const std::string& name) const;

  // Shape and content consistency; raises on violation.
  void validate() const;

  // Copy restricted to the given players (e.g. for conditional scores on a
  // subset of the league). Order of `keep` does not matter; the result keeps
  // the sorted player axis.
  MetricTensor filter_players(std::span<const std::string> keep) const;
};

struct AggregateOptions {
  std::string exposure_stat = "MIN";
};

struct AggregateResult {
  MetricTensor tensor;
  std::vector<std::string> warnings;
};

// Sums each player's game lines within a season and evaluates every metric
// on the totals. A line missing a stat poisons that stat's season total;
// metrics touching a poisoned total, and metrics whose evaluation divides by
// zero or is non-finite, come out missing with a warning.
AggregateResult aggregate_and_evaluate(const GameLog& log,
                                       std::span<const MetricDefinition> defs,
                                       const AggregateOptions& options = {});

}  // namespace mm
