#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metametrics/dsl.hpp"
#include "metametrics/model.hpp"
#include "metametrics/shrinkage.hpp"
#include "metametrics/tensor.hpp"

namespace mm {

struct BootstrapConfig {
  int replicates = 500;  // B
  std::uint64_t seed = 0;
  // A metric entry whose excluded-replicate share exceeds this fraction of B
  // gets no variance estimate, with a warning.
  double max_excluded_fraction = 0.5;
  std::string exposure_stat = "MIN";
};

// Sampling variance of each observed tensor entry, estimated by resampling
// games with replacement within every (season, team) stratum and re-running
// aggregation and metric evaluation on each replicate.
struct BootstrapVariance {
  std::vector<std::string> seasons;
  std::vector<std::string> players;
  std::vector<std::string> metrics;
  std::vector<double> bv;                     // S*P*M; NaN = not estimated
  std::vector<std::int32_t> replicates_used;  // S*P*M
  std::vector<std::uint8_t> observed;         // base entry exists at all
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t index(std::size_t s, std::size_t p, std::size_t m) const {
    return (s * players.size() + p) * metrics.size() + m;
  }

  // Raises unless the axes match the tensor exactly.
  void check_alignment(const MetricTensor& tensor) const;
};

// Shrunken copy of a percentage metric whose variance is wanted under the
// full pipeline: every replicate refits career rates and concentrations on
// its own resampled data. The column must also be appended to the base
// tensor (append_shrunken_column) under the same name for alignment.
struct EbColumn {
  std::string source_metric;
  std::string name;
  ShrinkageOptions options;
};

BootstrapVariance bootstrap_variance(const GameLog& log,
                                     std::span<const MetricDefinition> defs,
                                     const BootstrapConfig& config,
                                     std::span<const EbColumn> eb_columns = {});

}  // namespace mm
