#include "metametrics/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "aggregate_plan.hpp"
#include "metametrics/error.hpp"
#include "metametrics/rng.hpp"

namespace mm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Rows of one (season, team) stratum grouped by game, games in game-id
// order so the layout does not depend on input row order.
struct Stratum {
  int season_log = 0;
  int team_log = 0;
  std::vector<int> rows;             // flat, grouped by game
  std::vector<int> offsets;          // game g spans [offsets[g], offsets[g+1])
  std::uint64_t season_hash = 0;
  std::uint64_t team_hash = 0;

  std::size_t games() const { return offsets.size() - 1; }
};

std::vector<Stratum> build_strata(const GameLog& log) {
  std::unordered_map<std::uint64_t, int> stratum_index;
  struct Draft {
    int season_log, team_log;
    std::unordered_map<int, int> game_local;  // log game id -> local slot
    std::vector<int> game_log_ids;            // local slot -> log game id
    std::vector<std::vector<int>> by_game;
  };
  std::vector<Draft> drafts;

  for (std::size_t i = 0; i < log.rows(); ++i) {
    GameLog::RowView r = log.row(i);
    std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(r.season)) << 32) |
        static_cast<std::uint32_t>(r.team);
    auto [it, inserted] = stratum_index.emplace(key, drafts.size());
    if (inserted) {
      drafts.push_back({r.season, r.team, {}, {}, {}});
    }
    Draft& d = drafts[it->second];
    auto [git, ginserted] = d.game_local.emplace(r.game, d.game_log_ids.size());
    if (ginserted) {
      d.game_log_ids.push_back(r.game);
      d.by_game.emplace_back();
    }
    d.by_game[git->second].push_back(static_cast<int>(i));
  }

  std::vector<Stratum> strata(drafts.size());
  for (std::size_t j = 0; j < drafts.size(); ++j) {
    Draft& d = drafts[j];
    std::vector<int> order(d.game_log_ids.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = static_cast<int>(g);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return log.game_ids()[d.game_log_ids[a]] < log.game_ids()[d.game_log_ids[b]];
    });
    Stratum& st = strata[j];
    st.season_log = d.season_log;
    st.team_log = d.team_log;
    st.season_hash = Rng::hash(log.seasons()[d.season_log]);
    st.team_hash = Rng::hash(log.teams()[d.team_log]);
    st.offsets.push_back(0);
    for (int g : order) {
      st.rows.insert(st.rows.end(), d.by_game[g].begin(), d.by_game[g].end());
      st.offsets.push_back(static_cast<int>(st.rows.size()));
    }
  }
  // Canonical stratum order, for reproducible accumulation.
  std::sort(strata.begin(), strata.end(), [&](const Stratum& a, const Stratum& b) {
    const std::string& sa = log.seasons()[a.season_log];
    const std::string& sb = log.seasons()[b.season_log];
    if (sa != sb) return sa < sb;
    return log.teams()[a.team_log] < log.teams()[b.team_log];
  });
  return strata;
}

}  // namespace

void BootstrapVariance::check_alignment(const MetricTensor& tensor) const {
  if (seasons != tensor.seasons || players != tensor.players ||
      metrics != tensor.metrics) {
    fail(ErrorCode::invalid_argument,
         "bootstrap variance axes do not match the tensor");
  }
}

BootstrapVariance bootstrap_variance(const GameLog& log,
                                     std::span<const MetricDefinition> defs,
                                     const BootstrapConfig& config,
                                     std::span<const EbColumn> eb_columns) {
  if (config.replicates < 2) {
    fail(ErrorCode::invalid_argument, "bootstrap needs at least 2 replicates");
  }
  if (!(config.max_excluded_fraction >= 0.0 &&
        config.max_excluded_fraction <= 1.0)) {
    fail(ErrorCode::invalid_argument,
         "max_excluded_fraction must be in [0,1]");
  }

  internal::AggregatePlan plan =
      internal::AggregatePlan::build(log, defs, config.exposure_stat);
  const std::size_t S = plan.S, P = plan.P, M = plan.M, K = plan.K;
  const std::size_t E = eb_columns.size();
  const std::size_t MT = M + E;
  const int B = config.replicates;

  // Validate the shrunken columns against the plan.
  std::vector<int> eb_src(E), eb_att(E);
  for (std::size_t e = 0; e < E; ++e) {
    const EbColumn& col = eb_columns[e];
    auto it = std::find(plan.metrics.begin(), plan.metrics.end(), col.source_metric);
    if (it == plan.metrics.end()) {
      fail(ErrorCode::invalid_argument,
           "shrunken column source '" + col.source_metric + "' is not a metric");
    }
    int src = static_cast<int>(it - plan.metrics.begin());
    if (plan.kinds[src] != MetricKind::percentage || plan.attempt_col[src] < 0) {
      fail(ErrorCode::invalid_argument,
           "shrunken column source '" + col.source_metric +
               "' must be a percentage metric with attempts");
    }
    if (std::find(plan.metrics.begin(), plan.metrics.end(), col.name) !=
        plan.metrics.end()) {
      fail(ErrorCode::duplicate_metric,
           "shrunken column '" + col.name + "' collides with a metric");
    }
    for (std::size_t e2 = 0; e2 < e; ++e2) {
      if (eb_columns[e2].name == col.name) {
        fail(ErrorCode::duplicate_metric,
             "shrunken column '" + col.name + "' given twice");
      }
    }
    eb_src[e] = src;
    eb_att[e] = plan.attempt_col[src];
  }

  // Base pass: which entries exist at all. Only those get a variance.
  std::vector<double> sums(S * P * K);
  std::vector<unsigned char> bad(S * P * K);
  std::vector<std::int32_t> nrows(S * P);
  std::vector<unsigned char> base_observed(S * P * MT, 0);
  {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(bad.begin(), bad.end(), 0);
    std::fill(nrows.begin(), nrows.end(), 0);
    for (std::size_t i = 0; i < log.rows(); ++i) {
      internal::accumulate_row(plan, log.row(i), sums.data(), bad.data(),
                               nrows.data());
    }
    for (std::size_t sp = 0; sp < S * P; ++sp) {
      if (nrows[sp] == 0) continue;
      const double* totals = sums.data() + sp * K;
      const unsigned char* poison = bad.data() + sp * K;
      for (std::size_t m = 0; m < M; ++m) {
        double v = internal::eval_metric(plan, m, totals, poison, nullptr, nullptr);
        if (!std::isnan(v)) base_observed[sp * MT + m] = 1;
      }
      for (std::size_t e = 0; e < E; ++e) {
        bool src_seen = base_observed[sp * MT + eb_src[e]];
        bool att_ok = !poison[eb_att[e]] && totals[eb_att[e]] > 0.0;
        if (src_seen && att_ok) base_observed[sp * MT + M + e] = 1;
      }
    }
  }

  std::vector<Stratum> strata = build_strata(log);

  // Replicate-level accumulators per tracked entry.
  std::vector<double> acc_mean(S * P * MT, 0.0);
  std::vector<double> acc_m2(S * P * MT, 0.0);
  std::vector<std::int32_t> acc_n(S * P * MT, 0);

  std::vector<double> vals(S * P * MT);
  std::vector<double> eb_makes, eb_attempts;
  std::vector<std::size_t> eb_cells;

  for (int b = 0; b < B; ++b) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(bad.begin(), bad.end(), 0);
    std::fill(nrows.begin(), nrows.end(), 0);
    // Resample each stratum's schedule. The stream key depends only on
    // (seed, season, team, replicate), never on iteration order.
    for (const Stratum& st : strata) {
      Rng rng(Rng::mix({config.seed, st.season_hash, st.team_hash,
                        static_cast<std::uint64_t>(b)}));
      const std::size_t G = st.games();
      for (std::size_t i = 0; i < G; ++i) {
        std::size_t g = rng.below(G);
        for (int ri = st.offsets[g]; ri < st.offsets[g + 1]; ++ri) {
          internal::accumulate_row(plan, log.row(st.rows[ri]), sums.data(),
                                   bad.data(), nrows.data());
        }
      }
    }

    std::fill(vals.begin(), vals.end(), kNan);
    for (std::size_t sp = 0; sp < S * P; ++sp) {
      if (nrows[sp] == 0) continue;
      const double* totals = sums.data() + sp * K;
      const unsigned char* poison = bad.data() + sp * K;
      for (std::size_t m = 0; m < M; ++m) {
        vals[sp * MT + m] =
            internal::eval_metric(plan, m, totals, poison, nullptr, nullptr);
      }
    }

    // Shrunken columns rerun the whole empirical-Bayes fit on this
    // replicate's data. Seasons with rates outside [0,1] (possible for
    // composite percentage formulas) are treated as undefined.
    for (std::size_t e = 0; e < E; ++e) {
      const int src = eb_src[e];
      const int att = eb_att[e];
      for (std::size_t p = 0; p < P; ++p) {
        eb_makes.clear();
        eb_attempts.clear();
        eb_cells.clear();
        for (std::size_t s = 0; s < S; ++s) {
          std::size_t sp = s * P + p;
          double v = vals[sp * MT + src];
          if (std::isnan(v) || v < 0.0 || v > 1.0) continue;
          if (bad[sp * K + att]) continue;
          double n = sums[sp * K + att];
          if (!(n > 0.0)) continue;
          eb_makes.push_back(v * n);
          eb_attempts.push_back(n);
          eb_cells.push_back(sp);
        }
        if (eb_cells.empty()) continue;
        double tz = 0.0, tn = 0.0;
        for (std::size_t i = 0; i < eb_makes.size(); ++i) {
          tz += eb_makes[i];
          tn += eb_attempts[i];
        }
        double career = tz / tn;
        if (career <= 0.0 || career >= 1.0) {
          for (std::size_t i = 0; i < eb_cells.size(); ++i) {
            vals[eb_cells[i] * MT + M + e] = eb_makes[i] / eb_attempts[i];
          }
          continue;
        }
        double r = fit_concentration(eb_makes, eb_attempts, career,
                                     eb_columns[e].options);
        for (std::size_t i = 0; i < eb_cells.size(); ++i) {
          vals[eb_cells[i] * MT + M + e] =
              shrunken_rate(eb_makes[i], eb_attempts[i], career, r);
        }
      }
    }

    for (std::size_t j = 0; j < S * P * MT; ++j) {
      if (!base_observed[j]) continue;
      double v = vals[j];
      if (std::isnan(v)) continue;
      std::int32_t n = ++acc_n[j];
      double delta = v - acc_mean[j];
      acc_mean[j] += delta / n;
      acc_m2[j] += delta * (v - acc_mean[j]);
    }
  }

  BootstrapVariance out;
  out.seasons = plan.seasons;
  out.players = plan.players;
  out.metrics = plan.metrics;
  for (const EbColumn& col : eb_columns) out.metrics.push_back(col.name);
  out.replicates = B;
  out.seed = config.seed;
  out.bv.assign(S * P * MT, kNan);
  out.replicates_used.assign(S * P * MT, 0);
  out.observed = base_observed;

  std::vector<std::size_t> dropped(MT, 0);
  for (std::size_t j = 0; j < S * P * MT; ++j) {
    if (!base_observed[j]) continue;
    std::int32_t used = acc_n[j];
    out.replicates_used[j] = used;
    std::size_t excluded = static_cast<std::size_t>(B - used);
    if (used < 2 ||
        static_cast<double>(excluded) > config.max_excluded_fraction * B) {
      ++dropped[j % MT];
      continue;
    }
    out.bv[j] = acc_m2[j] / (used - 1);
  }
  for (std::size_t m = 0; m < MT; ++m) {
    if (dropped[m] == 0) continue;
    std::ostringstream os;
    os << "metric '" << out.metrics[m] << "': " << dropped[m]
       << " entries lost too many replicates; no variance estimate";
    out.warnings.push_back(os.str());
  }
  return out;
}

}  // namespace mm
