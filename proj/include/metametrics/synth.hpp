#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "metametrics/dsl.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/model.hpp"
#include "metametrics/tensor.hpp"

namespace mm {

// League whose season values follow the additive variance-components model
// exactly: each game value is the player's season level plus game noise
// scaled so the season mean has variance noise_var.
struct MixedEffectsSynthSpec {
  int players = 100;
  int seasons = 5;
  int games = 82;
  MixedEffectsParams params{100.0, 1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  std::string metric_name = "X1";
};

// League of binomial shooters: career ability drawn from a beta prior, a
// season ability around it, fixed attempts per game.
struct BinomialLeagueSynthSpec {
  int players = 100;
  int seasons = 1;
  int games = 25;
  int attempts_per_game = 4;
  double ability_alpha = 20.0;
  double ability_beta = 20.0;
  // 0 keeps every season at the career ability; > 0 draws season ability
  // from Beta(c * career, c * (1 - career)).
  double season_concentration = 0.0;
  std::uint64_t seed = 0;
  std::string metric_name = "FG%";
};

// Marginal transform applied to one latent normal column.
struct Marginal {
  enum class Kind { normal, lognormal, uniform, counts };
  Kind kind = Kind::normal;
  double a = 0.0;  // normal: mean; lognormal: meanlog; uniform: lo; counts: rate
  double b = 1.0;  // normal: sd; lognormal: sdlog; uniform: hi; counts: unused
};

// Season-level tensor drawn from a Gaussian copula with known correlation;
// no game log exists for this model.
struct CopulaSynthSpec {
  int rows = 1000;  // player-season rows, one season
  Eigen::MatrixXd correlation;
  std::vector<Marginal> marginals;        // one per metric
  std::vector<std::string> metric_names;  // default X1..XM
  std::uint64_t seed = 0;
};

struct SynthTruth {
  std::string model;
  std::uint64_t seed = 0;
  MixedEffectsParams params;
  double closed_discrimination = std::numeric_limits<double>::quiet_NaN();
  double closed_stability = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> career_rates;               // binomial league, player order
  std::vector<std::vector<double>> season_rates;  // [player][season]
  Eigen::MatrixXd correlation;                    // copula
  std::vector<Marginal> marginals;
};

struct SynthData {
  std::optional<GameLog> log;
  std::vector<MetricDefinition> definitions;
  std::optional<MetricTensor> tensor;  // copula model only
  SynthTruth truth;
};

SynthData generate(const MixedEffectsSynthSpec& spec);
SynthData generate(const BinomialLeagueSynthSpec& spec);
SynthData generate(const CopulaSynthSpec& spec);

}  // namespace mm
