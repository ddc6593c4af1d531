#pragma once

#include <span>
#include <string>
#include <vector>

#include "metametrics/bootstrap.hpp"
#include "metametrics/tensor.hpp"

namespace mm {

// Variance components of the season-level model
//   X_sp = mean + season_s + player_p + interaction_sp + noise_sp.
struct MixedEffectsParams {
  double grand_mean = 0.0;
  double season_var = 0.0;       // league-wide season swings
  double player_var = 0.0;       // persistent player ability
  double interaction_var = 0.0;  // player-specific season swings
  double noise_var = 0.0;        // game-sampling noise of a season value
};

// Fraction of a season's between-player spread that is signal:
//   (player_var + interaction_var) / (player_var + interaction_var + noise_var).
double closed_form_discrimination(const MixedEffectsParams& p);

// Fraction of a player's season-to-season signal that persists:
//   player_var / (player_var + season_var + interaction_var).
double closed_form_stability(const MixedEffectsParams& p);

enum class MomentConvention {
  unbiased,    // divisor n-1 and matching noise corrections
  population,  // divisor n throughout
};

struct MetaOptions {
  MomentConvention moments = MomentConvention::unbiased;
  // Minimum season exposure (e.g. minutes) for an entry to count, by metric
  // kind. Entries with unknown exposure fail any positive threshold. When
  // the tensor has no exposure column the filter is skipped with a warning.
  double min_exposure_rate = 500.0;
  double min_exposure_total = 0.0;
  double min_exposure_percentage = 0.0;
  // Seasons a player needs for the stability cohort.
  int min_seasons = 2;
};

struct SeasonDiscrimination {
  std::string season;
  double raw = 0.0;      // 1 - mean(BV) / between-player variance
  double clamped = 0.0;  // raw clipped to [0,1]
  int players = 0;
};

struct MetaScore {
  std::string metric;
  MetricKind kind = MetricKind::total;
  std::vector<SeasonDiscrimination> seasons;
  double discrimination_raw = 0.0;  // mean of per-season raw values
  double discrimination = 0.0;      // mean of per-season clamped values
  double stability_raw = 0.0;
  double stability = 0.0;           // raw clipped to [0,1]
  int stability_players = 0;        // players with >= min_seasons usable seasons
  int player_seasons = 0;           // usable entries across those players
};

struct MetaResult {
  std::vector<MetaScore> scores;
  std::vector<std::string> warnings;
};

// Scores every metric in the tensor. The variance estimate must be aligned
// (same axes); entries lacking one are excluded from cohorts.
MetaResult compute_meta(const MetricTensor& tensor, const BootstrapVariance& bv,
                        const MetaOptions& options = {});

// Single season-metric discrimination (raw, unclamped).
double discrimination(const MetricTensor& tensor, const BootstrapVariance& bv,
                      const std::string& season, const std::string& metric,
                      const MetaOptions& options = {});

// Single metric stability (raw, unclamped).
double stability(const MetricTensor& tensor, const BootstrapVariance& bv,
                 const std::string& metric, const MetaOptions& options = {});

// Scores restricted to a player subset, e.g. rotation players only.
MetaResult conditional_scores(const MetricTensor& tensor,
                              const BootstrapVariance& bv,
                              std::span<const std::string> players,
                              const MetaOptions& options = {});

}  // namespace mm
