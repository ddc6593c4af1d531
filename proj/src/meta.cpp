#include "metametrics/meta.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metametrics/error.hpp"
#include "metametrics/stats.hpp"

namespace mm {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double threshold_for(const MetaOptions& o, MetricKind kind) {
  switch (kind) {
    case MetricKind::rate: return o.min_exposure_rate;
    case MetricKind::total: return o.min_exposure_total;
    case MetricKind::percentage: return o.min_exposure_percentage;
  }
  return 0.0;
}

// Shared usability mask: value present, variance estimate present, exposure
// threshold met.
struct Cohort {
  const MetricTensor& tensor;
  const BootstrapVariance& bv;
  const MetaOptions& options;
  bool filter_exposure;

  bool usable(std::size_t s, std::size_t p, std::size_t m) const {
    std::size_t at = tensor.index(s, p, m);
    if (std::isnan(tensor.values[at])) return false;
    if (std::isnan(bv.bv[at])) return false;
    if (filter_exposure) {
      double need = threshold_for(options, tensor.kinds[m]);
      if (need > 0.0) {
        double e = tensor.exposure[tensor.cell(s, p)];
        if (std::isnan(e) || e < need) return false;
      }
    }
    return true;
  }

  std::size_t skipped_for_missing_bv(std::size_t m) const {
    std::size_t n = 0;
    for (std::size_t s = 0; s < tensor.season_count(); ++s) {
      for (std::size_t p = 0; p < tensor.player_count(); ++p) {
        std::size_t at = tensor.index(s, p, m);
        if (!std::isnan(tensor.values[at]) && std::isnan(bv.bv[at])) ++n;
      }
    }
    return n;
  }
};

double variance_by(MomentConvention c, const RunningMoments& m) {
  return c == MomentConvention::unbiased ? m.variance() : m.population_variance();
}

SeasonDiscrimination season_discrimination(const Cohort& c, std::size_t s,
                                           std::size_t m) {
  RunningMoments value_m, bv_m;
  for (std::size_t p = 0; p < c.tensor.player_count(); ++p) {
    if (!c.usable(s, p, m)) continue;
    std::size_t at = c.tensor.index(s, p, m);
    value_m.add(c.tensor.values[at]);
    bv_m.add(c.bv.bv[at]);
  }
  const std::string& season = c.tensor.seasons[s];
  const std::string& metric = c.tensor.metrics[m];
  if (value_m.count() < 2) {
    fail(ErrorCode::degenerate_season,
         "metric '" + metric + "', season '" + season + "': fewer than 2 usable players");
  }
  double tv = variance_by(c.options.moments, value_m);
  if (!(tv > 0.0)) {
    fail(ErrorCode::degenerate_season,
         "metric '" + metric + "', season '" + season + "': no between-player variance");
  }
  SeasonDiscrimination out;
  out.season = season;
  out.raw = 1.0 - bv_m.mean() / tv;
  out.clamped = clamp01(out.raw);
  out.players = static_cast<int>(value_m.count());
  return out;
}

struct StabilityParts {
  double raw = 0.0;
  int cohort_players = 0;
  int player_seasons = 0;
};

StabilityParts metric_stability(const Cohort& c, std::size_t m) {
  const std::size_t S = c.tensor.season_count();
  const std::size_t P = c.tensor.player_count();
  const std::string& metric = c.tensor.metrics[m];
  const bool unbiased = c.options.moments == MomentConvention::unbiased;

  double numerator_sum = 0.0;
  int cohort = 0;
  RunningMoments all_values;
  double all_bv_sum = 0.0;
  std::size_t all_n = 0;

  std::vector<double> xs, bvs;
  for (std::size_t p = 0; p < P; ++p) {
    xs.clear();
    bvs.clear();
    for (std::size_t s = 0; s < S; ++s) {
      if (!c.usable(s, p, m)) continue;
      std::size_t at = c.tensor.index(s, p, m);
      xs.push_back(c.tensor.values[at]);
      bvs.push_back(c.bv.bv[at]);
    }
    if (static_cast<int>(xs.size()) < c.options.min_seasons) continue;
    ++cohort;

    RunningMoments m_x;
    double bv_sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      m_x.add(xs[i]);
      bv_sum += bvs[i];
      all_values.add(xs[i]);
      all_bv_sum += bvs[i];
      ++all_n;
    }
    double within = unbiased ? m_x.variance() : m_x.population_variance();
    numerator_sum += within - bv_sum / static_cast<double>(xs.size());
  }

  if (cohort == 0) {
    fail(ErrorCode::insufficient_data,
         "metric '" + metric + "': no player has " +
             std::to_string(c.options.min_seasons) + "+ usable seasons");
  }

  double total = unbiased ? all_values.variance() : all_values.population_variance();
  double den = total - all_bv_sum / static_cast<double>(all_n);
  if (!(den > 0.0)) {
    fail(ErrorCode::noise_dominates,
         "metric '" + metric +
             "': sampling noise swamps total variance; stability undefined");
  }
  StabilityParts out;
  out.raw = 1.0 - (numerator_sum / cohort) / den;
  out.cohort_players = cohort;
  out.player_seasons = static_cast<int>(all_n);
  return out;
}

Cohort make_cohort(const MetricTensor& tensor, const BootstrapVariance& bv,
                   const MetaOptions& options, std::vector<std::string>* warnings) {
  bv.check_alignment(tensor);
  bool thresholds_active = options.min_exposure_rate > 0.0 ||
                           options.min_exposure_total > 0.0 ||
                           options.min_exposure_percentage > 0.0;
  bool have_exposure = !tensor.exposure_stat.empty();
  if (thresholds_active && !have_exposure && warnings) {
    warnings->push_back("no exposure column in tensor; exposure filter skipped");
  }
  return Cohort{tensor, bv, options, thresholds_active && have_exposure};
}

}  // namespace

double closed_form_discrimination(const MixedEffectsParams& p) {
  if (p.player_var < 0 || p.interaction_var < 0 || p.noise_var < 0 ||
      p.season_var < 0) {
    fail(ErrorCode::invalid_argument, "variance components must be nonnegative");
  }
  double signal = p.player_var + p.interaction_var;
  double den = signal + p.noise_var;
  if (!(den > 0.0)) {
    fail(ErrorCode::invalid_argument,
         "discrimination undefined: all variance components are zero");
  }
  return signal / den;
}

double closed_form_stability(const MixedEffectsParams& p) {
  if (p.player_var < 0 || p.interaction_var < 0 || p.noise_var < 0 ||
      p.season_var < 0) {
    fail(ErrorCode::invalid_argument, "variance components must be nonnegative");
  }
  double den = p.player_var + p.season_var + p.interaction_var;
  if (!(den > 0.0)) {
    fail(ErrorCode::invalid_argument,
         "stability undefined: all variance components are zero");
  }
  return p.player_var / den;
}

MetaResult compute_meta(const MetricTensor& tensor, const BootstrapVariance& bv,
                        const MetaOptions& options) {
  tensor.validate();
  MetaResult result;
  Cohort cohort = make_cohort(tensor, bv, options, &result.warnings);

  const std::size_t S = tensor.season_count();
  const std::size_t M = tensor.metric_count();
  for (std::size_t m = 0; m < M; ++m) {
    MetaScore score;
    score.metric = tensor.metrics[m];
    score.kind = tensor.kinds[m];

    std::size_t skipped = cohort.skipped_for_missing_bv(m);
    if (skipped > 0) {
      std::ostringstream os;
      os << "metric '" << score.metric << "': " << skipped
         << " entries lack a variance estimate and were excluded";
      result.warnings.push_back(os.str());
    }

    double raw_sum = 0.0, clamped_sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      SeasonDiscrimination sd = season_discrimination(cohort, s, m);
      raw_sum += sd.raw;
      clamped_sum += sd.clamped;
      score.seasons.push_back(std::move(sd));
    }
    score.discrimination_raw = raw_sum / static_cast<double>(S);
    score.discrimination = clamped_sum / static_cast<double>(S);

    StabilityParts st = metric_stability(cohort, m);
    score.stability_raw = st.raw;
    score.stability = clamp01(st.raw);
    score.stability_players = st.cohort_players;
    score.player_seasons = st.player_seasons;

    result.scores.push_back(std::move(score));
  }
  return result;
}

double discrimination(const MetricTensor& tensor, const BootstrapVariance& bv,
                      const std::string& season, const std::string& metric,
                      const MetaOptions& options) {
  int s = tensor.season_index(season);
  if (s < 0) fail(ErrorCode::invalid_argument, "unknown season '" + season + "'");
  int m = tensor.metric_index(metric);
  if (m < 0) fail(ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
  Cohort cohort = make_cohort(tensor, bv, options, nullptr);
  return season_discrimination(cohort, static_cast<std::size_t>(s),
                               static_cast<std::size_t>(m))
      .raw;
}

double stability(const MetricTensor& tensor, const BootstrapVariance& bv,
                 const std::string& metric, const MetaOptions& options) {
  int m = tensor.metric_index(metric);
  if (m < 0) fail(ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
  Cohort cohort = make_cohort(tensor, bv, options, nullptr);
  return metric_stability(cohort, static_cast<std::size_t>(m)).raw;
}

MetaResult conditional_scores(const MetricTensor& tensor,
                              const BootstrapVariance& bv,
                              std::span<const std::string> players,
                              const MetaOptions& options) {
  if (players.size() < 2) {
    fail(ErrorCode::insufficient_data,
         "conditional scores need at least 2 players");
  }
  MetricTensor sub = tensor.filter_players(players);

  // Restrict the variance block to the same players.
  BootstrapVariance subbv;
  subbv.seasons = bv.seasons;
  subbv.players = sub.players;
  subbv.metrics = bv.metrics;
  subbv.replicates = bv.replicates;
  subbv.seed = bv.seed;
  const std::size_t S = sub.season_count();
  const std::size_t P2 = sub.player_count();
  const std::size_t M = sub.metric_count();
  subbv.bv.resize(S * P2 * M);
  subbv.replicates_used.resize(S * P2 * M);
  subbv.observed.resize(S * P2 * M);
  for (std::size_t j = 0; j < P2; ++j) {
    int p = tensor.player_index(sub.players[j]);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t m = 0; m < M; ++m) {
        subbv.bv[subbv.index(s, j, m)] = bv.bv[bv.index(s, p, m)];
        subbv.replicates_used[subbv.index(s, j, m)] =
            bv.replicates_used[bv.index(s, p, m)];
        subbv.observed[subbv.index(s, j, m)] = bv.observed[bv.index(s, p, m)];
      }
    }
  }
  return compute_meta(sub, subbv, options);
}

}  // namespace mm
