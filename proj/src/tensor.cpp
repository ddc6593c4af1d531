#include "metametrics/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "aggregate_plan.hpp"
#include "metametrics/error.hpp"

namespace mm {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

int find_in(const std::vector<std::string>& xs, const std::string& name) {
  auto it = std::find(xs.begin(), xs.end(), name);
  return it == xs.end() ? -1 : static_cast<int>(it - xs.begin());
}

}  // namespace

int MetricTensor::metric_index(const std::string& name) const {
  return find_in(metrics, name);
}

int MetricTensor::season_index(const std::string& name) const {
  return find_in(seasons, name);
}

int MetricTensor::player_index(const std::string& name) const {
  return find_in(players, name);
}

void MetricTensor::validate() const {
  const std::size_t S = seasons.size(), P = players.size(), M = metrics.size();
  if (S == 0 || P == 0 || M == 0) {
    fail(ErrorCode::empty_input, "tensor has an empty axis");
  }
  if (kinds.size() != M) {
    fail(ErrorCode::invalid_argument, "tensor kinds do not match metrics");
  }
  if (values.size() != S * P * M || attempts.size() != S * P * M) {
    fail(ErrorCode::invalid_argument, "tensor value block has wrong size");
  }
  if (exposure.size() != S * P || games.size() != S * P) {
    fail(ErrorCode::invalid_argument, "tensor per-player block has wrong size");
  }
  for (double v : values) {
    if (!std::isnan(v) && !std::isfinite(v)) {
      fail(ErrorCode::invalid_argument, "tensor holds a non-finite value");
    }
  }
  auto sorted_unique = [](const std::vector<std::string>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i - 1] < xs[i])) return false;
    }
    return true;
  };
  if (!sorted_unique(seasons)) {
    fail(ErrorCode::invalid_argument, "tensor seasons must be sorted and unique");
  }
  if (!sorted_unique(players)) {
    fail(ErrorCode::invalid_argument, "tensor players must be sorted and unique");
  }
  std::vector<std::string> names = metrics;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    fail(ErrorCode::duplicate_metric, "tensor has duplicate metric names");
  }
}

MetricTensor MetricTensor::filter_players(std::span<const std::string> keep) const {
  std::vector<int> take;
  take.reserve(keep.size());
  for (const auto& id : keep) {
    int p = player_index(id);
    if (p < 0) {
      fail(ErrorCode::invalid_argument, "unknown player '" + id + "'");
    }
    take.push_back(p);
  }
  std::sort(take.begin(), take.end());
  take.erase(std::unique(take.begin(), take.end()), take.end());
  if (take.empty()) fail(ErrorCode::empty_input, "player filter kept nothing");

  MetricTensor out;
  out.seasons = seasons;
  out.metrics = metrics;
  out.kinds = kinds;
  out.exposure_stat = exposure_stat;
  const std::size_t S = seasons.size(), M = metrics.size();
  const std::size_t P2 = take.size();
  out.players.reserve(P2);
  for (int p : take) {
    out.players.push_back(players[p]);
    auto it = player_names.find(players[p]);
    if (it != player_names.end()) out.player_names.insert(*it);
  }
  out.values.resize(S * P2 * M);
  out.attempts.resize(S * P2 * M);
  out.exposure.resize(S * P2);
  out.games.resize(S * P2);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 0; j < P2; ++j) {
      std::size_t p = static_cast<std::size_t>(take[j]);
      out.exposure[out.cell(s, j)] = exposure[cell(s, p)];
      out.games[out.cell(s, j)] = games[cell(s, p)];
      for (std::size_t m = 0; m < M; ++m) {
        out.values[out.index(s, j, m)] = values[index(s, p, m)];
        out.attempts[out.index(s, j, m)] = attempts[index(s, p, m)];
      }
    }
  }
  return out;
}

namespace internal {

AggregatePlan AggregatePlan::build(const GameLog& log,
                                   std::span<const MetricDefinition> defs,
                                   const std::string& exposure_stat) {
  if (log.rows() == 0) fail(ErrorCode::empty_input, "game log is empty");
  if (defs.empty()) fail(ErrorCode::empty_input, "no metric definitions");

  AggregatePlan plan;
  plan.S = log.seasons().size();
  plan.P = log.players().size();
  plan.M = defs.size();
  plan.K = log.stat_count();

  plan.seasons = log.seasons();
  std::sort(plan.seasons.begin(), plan.seasons.end());
  plan.players = log.players();
  std::sort(plan.players.begin(), plan.players.end());

  plan.season_map.resize(plan.S);
  plan.player_map.resize(plan.P);
  for (std::size_t i = 0; i < plan.S; ++i) {
    plan.season_map[i] = find_in(plan.seasons, log.seasons()[i]);
  }
  for (std::size_t i = 0; i < plan.P; ++i) {
    plan.player_map[i] = find_in(plan.players, log.players()[i]);
  }

  std::unordered_map<std::string, int> stat_index;
  for (std::size_t k = 0; k < plan.K; ++k) {
    stat_index.emplace(log.stat_names()[k], static_cast<int>(k));
  }

  plan.used_stats.resize(plan.M);
  plan.attempt_col.assign(plan.M, -1);
  for (std::size_t m = 0; m < plan.M; ++m) {
    const MetricDefinition& def = defs[m];
    if (std::find(plan.metrics.begin(), plan.metrics.end(), def.name) !=
        plan.metrics.end()) {
      fail(ErrorCode::duplicate_metric, "metric '" + def.name + "' appears twice");
    }
    plan.metrics.push_back(def.name);
    plan.kinds.push_back(def.kind);
    plan.programs.push_back(CompiledExpr::compile(*def.expression, stat_index));
    for (const auto& s : referenced_stats(*def.expression)) {
      plan.used_stats[m].push_back(stat_index.at(s));
    }
    if (def.attempts_stat) {
      auto it = stat_index.find(*def.attempts_stat);
      if (it == stat_index.end()) {
        fail(ErrorCode::unknown_stat,
             "attempts stat '" + *def.attempts_stat + "' not present in input");
      }
      plan.attempt_col[m] = it->second;
    }
  }

  if (auto it = stat_index.find(exposure_stat); it != stat_index.end()) {
    plan.exposure_col = it->second;
    plan.exposure_stat = exposure_stat;
  }
  return plan;
}

}  // namespace internal

AggregateResult aggregate_and_evaluate(const GameLog& log,
                                       std::span<const MetricDefinition> defs,
                                       const AggregateOptions& options) {
  internal::AggregatePlan plan =
      internal::AggregatePlan::build(log, defs, options.exposure_stat);
  const std::size_t S = plan.S, P = plan.P, M = plan.M, K = plan.K;

  MetricTensor t;
  t.seasons = plan.seasons;
  t.players = plan.players;
  t.metrics = plan.metrics;
  t.kinds = plan.kinds;
  t.exposure_stat = plan.exposure_stat;
  for (std::size_t i = 0; i < P; ++i) {
    const std::string& nm = log.player_name(static_cast<int>(i));
    if (!nm.empty()) t.player_names[log.players()[i]] = nm;
  }

  // Season totals per (season, player, stat), with poison bits for stats a
  // line failed to record.
  std::vector<double> sums(S * P * K, 0.0);
  std::vector<unsigned char> bad(S * P * K, 0);
  std::vector<std::int32_t> nrows(S * P, 0);
  for (std::size_t i = 0; i < log.rows(); ++i) {
    internal::accumulate_row(plan, log.row(i), sums.data(), bad.data(),
                             nrows.data());
  }

  t.values.assign(S * P * M, kMissing);
  t.attempts.assign(S * P * M, kMissing);
  t.exposure.assign(S * P, kMissing);
  t.games.assign(nrows.begin(), nrows.end());

  std::vector<std::string> warnings;
  std::vector<std::size_t> undefined_count(M, 0);
  std::vector<std::size_t> poisoned_count(M, 0);
  for (std::size_t sp = 0; sp < S * P; ++sp) {
    if (nrows[sp] == 0) continue;
    const double* totals = sums.data() + sp * K;
    const unsigned char* poison = bad.data() + sp * K;
    if (plan.exposure_col >= 0 && !poison[plan.exposure_col]) {
      t.exposure[sp] = totals[plan.exposure_col];
    }
    for (std::size_t m = 0; m < M; ++m) {
      bool poisoned = false, undefined = false;
      double v = internal::eval_metric(plan, m, totals, poison, &poisoned,
                                       &undefined);
      if (poisoned) {
        ++poisoned_count[m];
        continue;
      }
      if (undefined) {
        ++undefined_count[m];
        continue;
      }
      std::size_t at = sp * M + m;
      t.values[at] = v;
      if (plan.attempt_col[m] >= 0 && !poison[plan.attempt_col[m]]) {
        t.attempts[at] = totals[plan.attempt_col[m]];
      }
    }
  }

  for (std::size_t m = 0; m < M; ++m) {
    std::ostringstream os;
    if (poisoned_count[m] > 0) {
      os << "metric '" << t.metrics[m] << "': " << poisoned_count[m]
         << " season entries missing an input stat";
      warnings.push_back(os.str());
      os.str("");
    }
    if (undefined_count[m] > 0) {
      os << "metric '" << t.metrics[m] << "': " << undefined_count[m]
         << " season entries undefined (division by zero or non-finite)";
      warnings.push_back(os.str());
    }
  }

  return {std::move(t), std::move(warnings)};
}

}  // namespace mm
