#include "metametrics/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "metametrics/error.hpp"

namespace mm {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Splits one CSV record. Fields may be double-quoted; quotes inside quoted
// fields are escaped by doubling.
std::vector<std::string> split_csv(const std::string& line, int lineno) {
  std::vector<std::string> fields;
  std::string cur;
  std::size_t i = 0;
  while (true) {
    cur.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      for (;;) {
        if (i >= line.size()) {
          fail(ErrorCode::parse_error,
               "line " + std::to_string(lineno) + ": unterminated quoted field");
        }
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          cur += line[i++];
        }
      }
    } else {
      while (i < line.size() && line[i] != ',') cur += line[i++];
    }
    fields.push_back(cur);
    if (i >= line.size()) break;
    if (line[i] == ',') {
      ++i;
      if (i == line.size()) {
        fields.emplace_back();
        break;
      }
    } else {
      fail(ErrorCode::parse_error,
           "line " + std::to_string(lineno) + ": malformed quoting");
    }
  }
  return fields;
}

void write_csv_field(std::ostream& out, const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << "\"\"";
    else out << c;
  }
  out << '"';
}

std::string format_stat(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

int GameLog::intern(std::vector<std::string>& pool,
                    std::unordered_map<std::string, int>& index,
                    const std::string& s) {
  auto it = index.find(s);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(pool.size());
  pool.push_back(s);
  index.emplace(s, id);
  return id;
}

void GameLog::set_stats(std::vector<std::string> names) {
  if (!values_.empty()) {
    fail(ErrorCode::invalid_argument, "set_stats after rows were added");
  }
  stat_names_ = std::move(names);
  stat_index_.clear();
  for (std::size_t k = 0; k < stat_names_.size(); ++k) {
    if (!stat_index_.emplace(stat_names_[k], static_cast<int>(k)).second) {
      fail(ErrorCode::invalid_argument, "duplicate stat column " + stat_names_[k]);
    }
  }
}

int GameLog::intern_season(const std::string& season) {
  return intern(seasons_, season_index_, season);
}

int GameLog::intern_player(const std::string& id, const std::string& name) {
  int p = intern(players_, player_index_, id);
  if (static_cast<std::size_t>(p) >= player_names_.size()) {
    player_names_.resize(p + 1);
  }
  if (!name.empty()) player_names_[p] = name;
  return p;
}

int GameLog::intern_team(const std::string& team) {
  return intern(teams_, team_index_, team);
}

int GameLog::intern_game(const std::string& game_id) {
  return intern(game_ids_, game_index_, game_id);
}

void GameLog::add_row(int season, int player, int team, int game,
                      const double* values) {
  season_of_.push_back(season);
  player_of_.push_back(player);
  team_of_.push_back(team);
  game_of_.push_back(game);
  values_.insert(values_.end(), values, values + stat_names_.size());
}

void GameLog::add(const PlayerGameLine& line) {
  if (line.season.empty() || line.player_id.empty() || line.team.empty() ||
      line.game_id.empty()) {
    fail(ErrorCode::invalid_argument,
         "game line needs non-empty season, player_id, team, and game_id");
  }
  // New stat names widen the table; existing rows get missing for them.
  for (const auto& [name, v] : line.stats) {
    if (stat_index_.count(name)) continue;
    std::size_t old_k = stat_names_.size();
    stat_index_.emplace(name, static_cast<int>(old_k));
    stat_names_.push_back(name);
    if (!season_of_.empty()) {
      std::vector<double> widened;
      widened.reserve(season_of_.size() * stat_names_.size());
      for (std::size_t r = 0; r < season_of_.size(); ++r) {
        const double* src = values_.data() + r * old_k;
        widened.insert(widened.end(), src, src + old_k);
        widened.push_back(kMissing);
      }
      values_ = std::move(widened);
    }
  }
  std::vector<double> row(stat_names_.size(), kMissing);
  for (const auto& [name, v] : line.stats) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorCode::invalid_argument,
           "stat " + name + " must be a finite nonnegative value");
    }
    row[stat_index_.at(name)] = v;
  }
  add_row(intern_season(line.season), intern_player(line.player_id, line.player_name),
          intern_team(line.team), intern_game(line.game_id), row.data());
}

GameLog::GameLog(const std::vector<PlayerGameLine>& lines) {
  for (const auto& line : lines) add(line);
}

const std::string& GameLog::player_name(int player) const {
  return player_names_.at(player);
}

PlayerGameLine GameLog::line(std::size_t i) const {
  RowView r = row(i);
  PlayerGameLine out;
  out.season = seasons_[r.season];
  out.player_id = players_[r.player];
  out.player_name = player_names_[r.player];
  out.team = teams_[r.team];
  out.game_id = game_ids_[r.game];
  for (std::size_t k = 0; k < stat_names_.size(); ++k) {
    if (!std::isnan(r.values[k])) out.stats[stat_names_[k]] = r.values[k];
  }
  return out;
}

GameLog GameLog::read_csv(std::istream& in) {
  std::string raw;
  if (!std::getline(in, raw)) fail(ErrorCode::empty_input, "empty game log");
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  std::vector<std::string> header = split_csv(raw, 1);
  static const char* kFixed[5] = {"season", "player_id", "player_name", "team",
                                  "game_id"};
  if (header.size() < 6) {
    fail(ErrorCode::parse_error,
         "header needs season,player_id,player_name,team,game_id and at least "
         "one stat column");
  }
  for (int i = 0; i < 5; ++i) {
    if (header[i] != kFixed[i]) {
      fail(ErrorCode::parse_error,
           std::string("header column ") + std::to_string(i + 1) + " must be " +
               kFixed[i] + ", got " + header[i]);
    }
  }

  GameLog log;
  std::vector<std::string> stats(header.begin() + 5, header.end());
  for (const auto& s : stats) {
    if (s.empty()) fail(ErrorCode::parse_error, "empty stat column name");
  }
  log.set_stats(stats);

  std::vector<double> row(stats.size());
  int lineno = 1;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    std::vector<std::string> fields = split_csv(raw, lineno);
    if (fields.size() != header.size()) {
      fail(ErrorCode::parse_error,
           "line " + std::to_string(lineno) + ": expected " +
               std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size()));
    }
    for (int i = 0; i < 5; ++i) {
      if (i != 2 && fields[i].empty()) {
        fail(ErrorCode::parse_error, "line " + std::to_string(lineno) +
                                         ": empty " + kFixed[i] + " field");
      }
    }
    for (std::size_t k = 0; k < stats.size(); ++k) {
      const std::string& f = fields[5 + k];
      if (f.empty()) {
        row[k] = kMissing;
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v) ||
          v < 0.0) {
        fail(ErrorCode::parse_error, "line " + std::to_string(lineno) + ": stat " +
                                         stats[k] + " has invalid value '" + f +
                                         "'");
      }
      row[k] = v;
    }
    log.add_row(log.intern_season(fields[0]),
                log.intern_player(fields[1], fields[2]),
                log.intern_team(fields[3]), log.intern_game(fields[4]),
                row.data());
  }
  if (log.rows() == 0) fail(ErrorCode::empty_input, "game log has no data rows");
  return log;
}

GameLog GameLog::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  return read_csv(in);
}

void GameLog::write_csv(std::ostream& out) const {
  out << "season,player_id,player_name,team,game_id";
  for (const auto& s : stat_names_) {
    out << ',';
    write_csv_field(out, s);
  }
  out << '\n';
  for (std::size_t i = 0; i < rows(); ++i) {
    RowView r = row(i);
    write_csv_field(out, seasons_[r.season]);
    out << ',';
    write_csv_field(out, players_[r.player]);
    out << ',';
    write_csv_field(out, player_names_[r.player]);
    out << ',';
    write_csv_field(out, teams_[r.team]);
    out << ',';
    write_csv_field(out, game_ids_[r.game]);
    for (std::size_t k = 0; k < stat_names_.size(); ++k) {
      out << ',';
      if (!std::isnan(r.values[k])) out << format_stat(r.values[k]);
    }
    out << '\n';
  }
}

void GameLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  write_csv(out);
  out.flush();
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

std::vector<SeasonAggregate> season_aggregates(const GameLog& log,
                                               const std::string& exposure_stat) {
  const auto& seasons = log.seasons();
  const auto& players = log.players();
  std::map<std::pair<std::string, std::string>, SeasonAggregate> agg;
  std::map<std::pair<std::string, std::string>, std::vector<bool>> poisoned;

  const std::size_t K = log.stat_count();
  for (std::size_t i = 0; i < log.rows(); ++i) {
    GameLog::RowView r = log.row(i);
    auto key = std::make_pair(seasons[r.season], players[r.player]);
    auto [it, inserted] = agg.try_emplace(key);
    SeasonAggregate& a = it->second;
    if (inserted) {
      a.season = key.first;
      a.player_id = key.second;
      poisoned[key].assign(K, false);
    }
    a.games += 1;
    std::vector<bool>& bad = poisoned[key];
    for (std::size_t k = 0; k < K; ++k) {
      if (std::isnan(r.values[k])) {
        bad[k] = true;
      } else {
        a.totals[log.stat_names()[k]] += r.values[k];
      }
    }
  }

  std::vector<SeasonAggregate> out;
  out.reserve(agg.size());
  for (auto& [key, a] : agg) {
    const std::vector<bool>& bad = poisoned[key];
    for (std::size_t k = 0; k < K; ++k) {
      if (bad[k]) a.totals.erase(log.stat_names()[k]);
    }
    auto it = a.totals.find(exposure_stat);
    a.minutes = it == a.totals.end() ? std::numeric_limits<double>::quiet_NaN()
                                     : it->second;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace mm
