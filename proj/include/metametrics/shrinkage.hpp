#pragma once

#include <span>
#include <string>
#include <vector>

#include "metametrics/tensor.hpp"

namespace mm {

// Empirical-Bayes shrinkage for percentage metrics. Each player's season
// rates z_s / n_s are modeled as binomial draws around a player ability with
// a Beta(r * career, r * (1 - career)) prior centered on the player's pooled
// career rate; r is chosen per player by maximizing the beta-binomial
// marginal likelihood of their seasons.
struct ShrinkageOptions {
  double log_r_lo = 0.0;                  // r = 1
  double log_r_hi = 13.815510557964274;   // r = 1e6
  double tolerance = 1e-6;                // golden-section width in log r
  int grid_points = 64;                   // coarse scan before refining
};

struct PlayerShrinkage {
  std::string player;
  double career_rate = 0.0;     // pooled makes / attempts
  double concentration = 0.0;   // fitted r; NaN when the career rate is 0 or 1
  double log_marginal = 0.0;
  std::vector<std::string> seasons;  // seasons with usable data, tensor order
  std::vector<double> makes;         // z_s (may be fractional)
  std::vector<double> attempts;      // n_s
  std::vector<double> raw;           // z_s / n_s
  std::vector<double> shrunk;        // (z_s + r * career) / (n_s + r)
};

struct ShrinkageFit {
  std::string metric;
  ShrinkageOptions options;
  std::vector<PlayerShrinkage> players;  // tensor player order; only players with data
};

// Log marginal likelihood of a player's seasons under concentration r.
double beta_binomial_log_marginal(std::span<const double> makes,
                                  std::span<const double> attempts,
                                  double career_rate, double r);

// Maximizes the marginal over log r by grid scan plus golden section.
double fit_concentration(std::span<const double> makes,
                         std::span<const double> attempts, double career_rate,
                         const ShrinkageOptions& options,
                         double* log_marginal = nullptr);

double shrunken_rate(double makes, double attempts, double career_rate, double r);

// Fits every player with at least one season of the metric observed with
// positive attempts. The metric must be percentage kind with values in [0,1].
ShrinkageFit fit_shrinkage(const MetricTensor& tensor, const std::string& metric,
                           const ShrinkageOptions& options = {});

// Returns a copy of the tensor with the fit's shrunken values appended as a
// new percentage metric.
MetricTensor append_shrunken_column(const MetricTensor& tensor,
                                    const ShrinkageFit& fit,
                                    const std::string& new_name);

}  // namespace mm
