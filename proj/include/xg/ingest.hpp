#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "xg/types.hpp"

namespace xg {

enum class OnError { Skip, Abort };

struct ParseIssue {
  std::size_t line_no = 0;  // 1-based
  std::string message;
};

struct ParseOptions {
  OnError on_error = OnError::Skip;
  // receives every skipped record when on_error == Skip
  std::function<void(const ParseIssue&)> issue_sink;
};

// Reads newline-delimited JSON or headered CSV (gzip accepted by .gz
// extension; format sniffed from the extension). One RawEvent per record,
// in file order; missing optional fields stay missing. Malformed records
// raise (Abort) or are reported and skipped (Skip).
std::vector<RawEvent> parse_pbp(const std::string& path,
                                const ParseOptions& opts = {});

// Attack direction per (game_id, period, team): true when that team shoots
// toward +x in that period.
class DirectionTable {
 public:
  void set(const std::string& game_id, int period, const std::string& team,
           bool attacks_positive_x);
  std::optional<bool> lookup(const std::string& game_id, int period,
                             const std::string& team) const;
  bool has_game(const std::string& game_id) const;
  std::size_t size() const { return entries_.size(); }

  static DirectionTable load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::map<std::tuple<std::string, int, std::string>, bool> entries_;
};

struct CleanStats {
  std::size_t games_in = 0;
  std::size_t games_skipped = 0;  // missing from the direction table
  std::size_t events_in = 0;
  std::size_t shots_out = 0;
};

// Applies the cleaning rules: on-goal 5v5 shots with coordinates, shot type,
// shooter, and goalie present, standardized into the shooter's attack frame,
// offensive zone only (x_std >= 25). Games absent from the direction table
// are skipped and logged. Output is canonicalized by
// (game_date, game_id, event_index).
std::vector<ShotRecord> clean_and_filter(const std::vector<RawEvent>& events,
                                         const DirectionTable& directions,
                                         CleanStats* stats = nullptr);

struct ApiClientConfig {
  std::string api_base;     // e.g. http://host:port ; empty => fixture mode
  std::string cache_dir;    // required
  std::string fixture_dir;  // used when api_base is empty
};

// Season files land in the cache as season_<id>.jsonl; cache hits never
// re-fetch. Fixture mode resolves from fixture_dir only.
class ApiClient {
 public:
  explicit ApiClient(ApiClientConfig config);

  // Returns the cached file path. Throws Error on fixture miss or non-200
  // responses (message carries the season and status).
  std::string fetch_season(int season);

  std::size_t fetch_count() const { return fetch_count_; }
  const ApiClientConfig& config() const { return config_; }

 private:
  ApiClientConfig config_;
  std::size_t fetch_count_ = 0;
};

}  // namespace xg
