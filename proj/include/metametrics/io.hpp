#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "metametrics/bootstrap.hpp"
#include "metametrics/dependence.hpp"
#include "metametrics/meta.hpp"
#include "metametrics/shrinkage.hpp"
#include "metametrics/synth.hpp"
#include "metametrics/tensor.hpp"

namespace mm {

// File helpers. All raise IoError with the path in the message.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// FNV-1a 64 of the bytes as 16 hex digits, for provenance records.
std::string content_hash(std::string_view bytes);

// Shortest decimal form that parses back to the same double ("" for NaN).
std::string format_double(double x);

// Dense matrices as row-major nested arrays.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

// Missing values are explicit nulls in every JSON form below, so files
// round-trip NaN entries exactly.
nlohmann::json tensor_to_json(const MetricTensor& tensor);
MetricTensor tensor_from_json(const nlohmann::json& j);

nlohmann::json bv_to_json(const BootstrapVariance& bv);
BootstrapVariance bv_from_json(const nlohmann::json& j);
// season,player_id,metric,bv,replicates_used; one row per base-observed
// entry, bv empty when no estimate survived.
void write_bv_csv(std::ostream& os, const BootstrapVariance& bv);

nlohmann::json meta_to_json(const MetaResult& result);
// Fixed columns plus one clamped per-season discrimination column D_<season>.
void write_meta_csv(std::ostream& os, const MetaResult& result);

// Posterior summary; recorded draws are not serialized.
nlohmann::json correlation_to_json(const LatentCorrelation& corr);
LatentCorrelation correlation_from_json(const nlohmann::json& j);

nlohmann::json curve_to_json(const IndependenceCurve& curve);
// Loadings matrix rows follow `metrics`, columns are components.
nlohmann::json pca_to_json(const PcaResult& decomposition,
                           std::span<const std::string> metrics);
nlohmann::json cluster_to_json(const ClusterTree& tree);

nlohmann::json shrinkage_to_json(const ShrinkageFit& fit);
// player_id,seasons,makes,attempts,career_rate,concentration,log_marginal
void write_shrinkage_players_csv(std::ostream& os, const ShrinkageFit& fit);
// player_id,season,makes,attempts,raw,shrunk
void write_shrinkage_seasons_csv(std::ostream& os, const ShrinkageFit& fit);

nlohmann::json truth_to_json(const SynthTruth& truth);

// season,player_id,player_name,PC1,...; rows with every component missing
// are skipped.
void write_pc_scores_csv(std::ostream& os, const PcScores& scores);

}  // namespace mm
