#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mm {

// One player's box-score line for one game.
struct PlayerGameLine {
  std::string season;
  std::string player_id;
  std::string player_name;
  std::string team;
  std::string game_id;
  std::map<std::string, double> stats;  // absent key = stat not recorded
};

// Column-oriented game-line table. Strings are interned once; per-row data
// is a handful of indices plus one double per stat column (NaN = missing),
// which keeps multi-million-line synthetic leagues cheap to hold and walk.
class GameLog {
 public:
  GameLog() = default;
  explicit GameLog(const std::vector<PlayerGameLine>& lines);

  void add(const PlayerGameLine& line);

  // Bulk interface used by generators: fix the stat columns up front, then
  // append rows by interned index. values must hold stat_count() doubles.
  void set_stats(std::vector<std::string> names);
  int intern_season(const std::string& season);
  int intern_player(const std::string& id, const std::string& name = "");
  int intern_team(const std::string& team);
  int intern_game(const std::string& game_id);
  void add_row(int season, int player, int team, int game, const double* values);

  std::size_t rows() const { return season_of_.size(); }
  std::size_t stat_count() const { return stat_names_.size(); }

  const std::vector<std::string>& stat_names() const { return stat_names_; }
  const std::vector<std::string>& seasons() const { return seasons_; }
  const std::vector<std::string>& players() const { return players_; }
  const std::vector<std::string>& teams() const { return teams_; }
  const std::vector<std::string>& game_ids() const { return game_ids_; }

  const std::string& player_name(int player) const;

  struct RowView {
    int season;
    int player;
    int team;
    int game;
    const double* values;  // stat_count() entries, NaN = missing
  };
  RowView row(std::size_t i) const {
    return {season_of_[i], player_of_[i], team_of_[i], game_of_[i],
            values_.data() + i * stat_names_.size()};
  }

  PlayerGameLine line(std::size_t i) const;

  // CSV with header season,player_id,player_name,team,game_id,<stat>...
  static GameLog read_csv(std::istream& in);
  static GameLog read_csv(const std::string& path);
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;

 private:
  int intern(std::vector<std::string>& pool,
             std::unordered_map<std::string, int>& index, const std::string& s);

  std::vector<std::string> stat_names_;
  std::unordered_map<std::string, int> stat_index_;

  std::vector<std::string> seasons_, players_, teams_, game_ids_;
  std::unordered_map<std::string, int> season_index_, player_index_, team_index_,
      game_index_;
  std::vector<std::string> player_names_;  // parallel to players_

  std::vector<int> season_of_, player_of_, team_of_, game_of_;
  std::vector<double> values_;  // rows * stat_count, row-major
};

// Summed counting stats for one (season, player).
struct SeasonAggregate {
  std::string season;
  std::string player_id;
  std::map<std::string, double> totals;  // stats poisoned by a missing line are absent
  int games = 0;
  double minutes = std::numeric_limits<double>::quiet_NaN();
};

// Aggregates in (season, player_id) order. exposure_stat names the column
// used for the minutes field.
std::vector<SeasonAggregate> season_aggregates(const GameLog& log,
                                               const std::string& exposure_stat = "MIN");

}  // namespace mm
