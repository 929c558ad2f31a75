#include "xg/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include <fmt/core.h>
#include <httplib.h>

#include "xg/geometry.hpp"
#include "xg/io.hpp"
#include "xg/log.hpp"

namespace fs = std::filesystem;

namespace xg {

std::vector<RawEvent> parse_pbp(const std::string& path,
                                const ParseOptions& opts) {
  std::vector<RawEvent> out;
  const io::TableFormat fmt_kind = io::format_from_path(path);
  std::vector<std::string> header;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      if (fmt_kind == io::TableFormat::Csv) {
        if (header.empty()) {
          header = io::split_csv_line(line);
          return;
        }
        out.push_back(io::raw_event_from_cells(header, io::split_csv_line(line)));
      } else {
        out.push_back(io::raw_event_from_json(std::string(line)));
      }
    } catch (const std::exception& e) {
      if (opts.on_error == OnError::Abort)
        throw Error(fmt::format("{}:{}: {}", path, line_no, e.what()));
      const ParseIssue issue{line_no, e.what()};
      if (opts.issue_sink) opts.issue_sink(issue);
      log::warn(fmt::format("{}:{}: skipped: {}", path, line_no, e.what()));
    }
  });
  return out;
}

void DirectionTable::set(const std::string& game_id, int period,
                         const std::string& team, bool attacks_positive_x) {
  entries_[{game_id, period, team}] = attacks_positive_x;
}

std::optional<bool> DirectionTable::lookup(const std::string& game_id,
                                           int period,
                                           const std::string& team) const {
  const auto it = entries_.find({game_id, period, team});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool DirectionTable::has_game(const std::string& game_id) const {
  const auto it = entries_.lower_bound({game_id, 0, ""});
  return it != entries_.end() && std::get<0>(it->first) == game_id;
}

DirectionTable DirectionTable::load(const std::string& path) {
  DirectionTable table;
  std::vector<std::string> header;
  io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    const auto cells = io::split_csv_line(line);
    if (header.empty()) {
      header = cells;
      return;
    }
    if (cells.size() != 4)
      throw Error(fmt::format("{}:{}: expected 4 cells", path, line_no));
    const bool positive = cells[3] == "true" || cells[3] == "1";
    table.set(cells[0], std::stoi(cells[1]), cells[2], positive);
  });
  return table;
}

void DirectionTable::save(const std::string& path) const {
  std::string out = "game_id,period,team,attacks_positive_x\n";
  for (const auto& [key, positive] : entries_) {
    out += io::join_csv_line({std::get<0>(key), std::to_string(std::get<1>(key)),
                              std::get<2>(key), positive ? "true" : "false"});
    out += '\n';
  }
  io::write_file(path, out);
}

std::vector<ShotRecord> clean_and_filter(const std::vector<RawEvent>& events,
                                         const DirectionTable& directions,
                                         CleanStats* stats) {
  CleanStats local;
  std::set<std::string> games_seen;
  std::set<std::string> games_missing;
  std::vector<ShotRecord> out;

  for (const RawEvent& e : events) {
    ++local.events_in;
    games_seen.insert(e.game_id);
    if (!directions.has_game(e.game_id)) {
      if (games_missing.insert(e.game_id).second)
        log::warn(fmt::format("game {} absent from direction table, skipped",
                              e.game_id));
      continue;
    }
    if (e.event_type != EventType::Shot && e.event_type != EventType::Goal)
      continue;
    if (e.strength != "5v5") continue;
    if (!e.x || !e.y || !e.shot_type || !e.shooter_id || !e.goalie_id)
      continue;
    const auto direction = directions.lookup(e.game_id, e.period, e.team);
    if (!direction) continue;

    const auto [x_std, y_std] = standardize_coords(*e.x, *e.y, *direction);
    if (x_std < rink::kBlueLineX) continue;

    ShotRecord s;
    s.season = e.season;
    s.game_id = e.game_id;
    s.game_date = e.game_date;
    s.event_index = e.event_index;
    s.event_type = e.event_type;
    s.period = e.period;
    s.period_time_s = e.period_time_s;
    s.game_time_s = e.game_time_s;
    s.team = e.team;
    s.home_team = e.home_team;
    s.arena_id = e.arena_id;
    s.shot_type = *e.shot_type;
    s.shooter_id = *e.shooter_id;
    s.goalie_id = *e.goalie_id;
    s.shooter_handedness = e.shooter_handedness;
    s.strength = e.strength;
    s.x_std = x_std;
    s.y_std = y_std;
    s.outcome = e.event_type == EventType::Goal ? 1 : 0;
    s.is_home_shot = e.team == e.home_team;
    s.goal_diff = s.is_home_shot ? e.score_home - e.score_away
                                 : e.score_away - e.score_home;
    out.push_back(std::move(s));
  }

  std::sort(out.begin(), out.end(), [](const ShotRecord& a, const ShotRecord& b) {
    return chrono_key(a) < chrono_key(b);
  });

  local.games_in = games_seen.size();
  local.games_skipped = games_missing.size();
  local.shots_out = out.size();
  if (stats) *stats = local;
  return out;
}

ApiClient::ApiClient(ApiClientConfig config) : config_(std::move(config)) {
  if (config_.cache_dir.empty()) throw Error("ApiClient requires a cache_dir");
  fs::create_directories(config_.cache_dir);
}

std::string ApiClient::fetch_season(int season) {
  const std::string cached =
      (fs::path(config_.cache_dir) / fmt::format("season_{}.jsonl", season))
          .string();
  if (fs::exists(cached)) return cached;

  if (config_.api_base.empty()) {
    const fs::path dir(config_.fixture_dir);
    const fs::path plain = dir / fmt::format("season_{}.jsonl", season);
    const fs::path gz = dir / fmt::format("season_{}.jsonl.gz", season);
    ++fetch_count_;
    if (fs::exists(plain)) {
      io::write_file(cached, io::read_file(plain.string()));
      return cached;
    }
    if (fs::exists(gz)) {
      io::write_file(cached, io::read_file(gz.string()));
      return cached;
    }
    throw Error(fmt::format("season {}: fixture missing in {}", season,
                            config_.fixture_dir));
  }

  ++fetch_count_;
  httplib::Client client(config_.api_base);
  client.set_read_timeout(30, 0);
  const auto res = client.Get(fmt::format("/season/{}", season));
  if (!res)
    throw Error(fmt::format("season {}: fetch failed ({}), retry later", season,
                            httplib::to_string(res.error())));
  if (res->status != 200)
    throw Error(fmt::format("season {}: HTTP {}", season, res->status));
  io::write_file(cached, res->body);
  return cached;
}

}  // namespace xg
