#include "xg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <system_error>

#include <zlib.h>

#include <fmt/core.h>
#include <json.hpp>

namespace xg::io {

using nlohmann::json;

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string read_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error(fmt::format("cannot open {}", path));
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, n);
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw Error(fmt::format("gzip read failed for {}", path));
  return out;
}

void write_gz(const std::string& path, const std::string& content) {
  gzFile f = gzopen(path.c_str(), "wb");
  if (!f) throw Error(fmt::format("cannot open {} for writing", path));
  std::size_t off = 0;
  while (off < content.size()) {
    const unsigned chunk =
        static_cast<unsigned>(std::min<std::size_t>(content.size() - off, 1u << 20));
    if (gzwrite(f, content.data() + off, chunk) <= 0) {
      gzclose(f);
      throw Error(fmt::format("gzip write failed for {}", path));
    }
    off += chunk;
  }
  gzclose(f);
}

int parse_int(const std::string& cell, const char* what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || p != cell.data() + cell.size())
    throw Error(fmt::format("bad integer '{}' for {}", cell, what));
  return v;
}

double parse_num(const std::string& cell, const char* what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || p != cell.data() + cell.size())
    throw Error(fmt::format("bad number '{}' for {}", cell, what));
  return v;
}

bool parse_bool(const std::string& cell, const char* what) {
  if (cell == "true" || cell == "1") return true;
  if (cell == "false" || cell == "0") return false;
  throw Error(fmt::format("bad boolean '{}' for {}", cell, what));
}

// header name -> cell index; throws when a required column is absent
class CellView {
 public:
  CellView(const std::vector<std::string>& header,
           const std::vector<std::string>& cells) : cells_(cells) {
    if (header.size() != cells.size())
      throw Error(fmt::format("row has {} cells, header has {} columns",
                              cells.size(), header.size()));
    for (std::size_t i = 0; i < header.size(); ++i) index_[header[i]] = i;
  }

  const std::string& required(const std::string& name) const {
    const std::string& c = get(name);
    if (c.empty()) throw Error(fmt::format("missing value for {}", name));
    return c;
  }

  const std::string& get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw Error(fmt::format("missing column {}", name));
    return cells_[it->second];
  }

 private:
  const std::vector<std::string>& cells_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
json opt_json(const std::optional<T>& v) {
  if (v) return json(*v);
  return json();
}

void table_to_file(const std::string& path, TableFormat fmt_kind,
                   const std::vector<std::string>& columns,
                   std::size_t n,
                   const std::function<std::vector<std::string>(std::size_t)>& cells,
                   const std::function<std::string(std::size_t)>& jsonl) {
  std::string out;
  if (fmt_kind == TableFormat::Csv) {
    out += join_csv_line(columns);
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out += join_csv_line(cells(i));
      out += '\n';
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out += jsonl(i);
      out += '\n';
    }
  }
  write_file(path, out);
}

// shared reader driver: JSONL uses from_json, CSV uses header + from_cells
template <typename T>
std::vector<T> read_table(const std::string& path,
                          T (*from_json_line)(const std::string&),
                          T (*from_cells)(const std::vector<std::string>&,
                                          const std::vector<std::string>&)) {
  std::vector<T> out;
  const TableFormat f = format_from_path(path);
  std::vector<std::string> header;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      if (f == TableFormat::Csv) {
        if (header.empty()) {
          header = split_csv_line(line);
          return;
        }
        out.push_back(from_cells(header, split_csv_line(line)));
      } else {
        out.push_back(from_json_line(std::string(line)));
      }
    } catch (const std::exception& e) {
      throw Error(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  });
  return out;
}

}  // namespace

TableFormat format_from_flag(const std::string& flag) {
  if (flag == "jsonl") return TableFormat::Jsonl;
  if (flag == "csv") return TableFormat::Csv;
  throw Error(fmt::format("unknown format '{}' (expected jsonl or csv)", flag));
}

TableFormat format_from_path(const std::string& path) {
  if (ends_with(path, ".csv") || ends_with(path, ".csv.gz"))
    return TableFormat::Csv;
  return TableFormat::Jsonl;
}

std::string read_file(const std::string& path) {
  if (ends_with(path, ".gz")) return read_gz(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path));
  std::string out((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  if (ends_with(path, ".gz")) {
    write_gz(path, content);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(fmt::format("write failed for {}", path));
}

void for_each_line(
    const std::string& path,
    const std::function<void(std::size_t, std::string_view)>& fn) {
  const std::string content = read_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!(line.empty() && end == content.size())) fn(line_no, line);
    if (end == content.size()) break;
    start = end + 1;
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string join_csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n\r") != std::string::npos) {
      out += '"';
      for (char ch : c) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    } else {
      out += c;
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, p);
}

// --- RawEvent ---

const std::vector<std::string> kRawEventColumns = {
    "season",     "game_id",   "game_date",  "event_index",
    "event_type", "period",    "period_time_s", "game_time_s",
    "team",       "home_team", "arena_id",   "x",
    "y",          "shot_type", "shooter_id", "goalie_id",
    "shooter_handedness", "strength", "score_home", "score_away"};

std::string raw_event_to_jsonl(const RawEvent& e) {
  json j;
  j["season"] = e.season;
  j["game_id"] = e.game_id;
  j["game_date"] = e.game_date;
  j["event_index"] = e.event_index;
  j["event_type"] = std::string(to_string(e.event_type));
  j["period"] = e.period;
  j["period_time_s"] = e.period_time_s;
  j["game_time_s"] = e.game_time_s;
  j["team"] = e.team;
  j["home_team"] = e.home_team;
  j["arena_id"] = e.arena_id;
  if (e.x) j["x"] = *e.x;
  if (e.y) j["y"] = *e.y;
  if (e.shot_type) j["shot_type"] = *e.shot_type;
  if (e.shooter_id) j["shooter_id"] = *e.shooter_id;
  if (e.goalie_id) j["goalie_id"] = *e.goalie_id;
  if (e.shooter_handedness)
    j["shooter_handedness"] = std::string(to_string(*e.shooter_handedness));
  j["strength"] = e.strength;
  j["score_home"] = e.score_home;
  j["score_away"] = e.score_away;
  return j.dump();
}

RawEvent raw_event_from_json(const std::string& line) {
  const json j = json::parse(line);
  RawEvent e;
  e.season = j.at("season").get<int>();
  e.game_id = j.at("game_id").get<std::string>();
  e.game_date = j.at("game_date").get<std::string>();
  e.event_index = j.at("event_index").get<int>();
  e.event_type = parse_event_type(j.at("event_type").get<std::string>());
  e.period = j.at("period").get<int>();
  e.period_time_s = j.at("period_time_s").get<int>();
  e.game_time_s = j.at("game_time_s").get<int>();
  e.team = j.at("team").get<std::string>();
  e.home_team = j.at("home_team").get<std::string>();
  e.arena_id = j.at("arena_id").get<std::string>();
  if (j.contains("x") && !j["x"].is_null()) e.x = j["x"].get<double>();
  if (j.contains("y") && !j["y"].is_null()) e.y = j["y"].get<double>();
  if (j.contains("shot_type") && !j["shot_type"].is_null())
    e.shot_type = j["shot_type"].get<std::string>();
  if (j.contains("shooter_id") && !j["shooter_id"].is_null())
    e.shooter_id = j["shooter_id"].get<std::string>();
  if (j.contains("goalie_id") && !j["goalie_id"].is_null())
    e.goalie_id = j["goalie_id"].get<std::string>();
  if (j.contains("shooter_handedness") && !j["shooter_handedness"].is_null())
    e.shooter_handedness =
        parse_handedness(j["shooter_handedness"].get<std::string>());
  e.strength = j.at("strength").get<std::string>();
  e.score_home = j.at("score_home").get<int>();
  e.score_away = j.at("score_away").get<int>();
  return e;
}

std::vector<std::string> raw_event_to_cells(const RawEvent& e) {
  auto opt_num = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  return {
      std::to_string(e.season),
      e.game_id,
      e.game_date,
      std::to_string(e.event_index),
      std::string(to_string(e.event_type)),
      std::to_string(e.period),
      std::to_string(e.period_time_s),
      std::to_string(e.game_time_s),
      e.team,
      e.home_team,
      e.arena_id,
      opt_num(e.x),
      opt_num(e.y),
      e.shot_type.value_or(""),
      e.shooter_id.value_or(""),
      e.goalie_id.value_or(""),
      e.shooter_handedness
          ? std::string(to_string(*e.shooter_handedness))
          : std::string(),
      e.strength,
      std::to_string(e.score_home),
      std::to_string(e.score_away),
  };
}

RawEvent raw_event_from_cells(const std::vector<std::string>& header,
                              const std::vector<std::string>& cells) {
  const CellView v(header, cells);
  RawEvent e;
  e.season = parse_int(v.required("season"), "season");
  e.game_id = v.required("game_id");
  e.game_date = v.required("game_date");
  e.event_index = parse_int(v.required("event_index"), "event_index");
  e.event_type = parse_event_type(v.required("event_type"));
  e.period = parse_int(v.required("period"), "period");
  e.period_time_s = parse_int(v.required("period_time_s"), "period_time_s");
  e.game_time_s = parse_int(v.required("game_time_s"), "game_time_s");
  e.team = v.required("team");
  e.home_team = v.required("home_team");
  e.arena_id = v.required("arena_id");
  if (const auto& c = v.get("x"); !c.empty()) e.x = parse_num(c, "x");
  if (const auto& c = v.get("y"); !c.empty()) e.y = parse_num(c, "y");
  if (const auto& c = v.get("shot_type"); !c.empty()) e.shot_type = c;
  if (const auto& c = v.get("shooter_id"); !c.empty()) e.shooter_id = c;
  if (const auto& c = v.get("goalie_id"); !c.empty()) e.goalie_id = c;
  if (const auto& c = v.get("shooter_handedness"); !c.empty())
    e.shooter_handedness = parse_handedness(c);
  e.strength = v.required("strength");
  e.score_home = parse_int(v.required("score_home"), "score_home");
  e.score_away = parse_int(v.required("score_away"), "score_away");
  return e;
}

void write_raw_events(const std::string& path, const std::vector<RawEvent>& es,
                      TableFormat fmt_kind) {
  table_to_file(
      path, fmt_kind, kRawEventColumns, es.size(),
      [&](std::size_t i) { return raw_event_to_cells(es[i]); },
      [&](std::size_t i) { return raw_event_to_jsonl(es[i]); });
}

// --- ShotRecord ---

const std::vector<std::string> kShotColumns = {
    "season",    "game_id",   "game_date", "event_index", "event_type",
    "period",    "period_time_s", "game_time_s", "team",  "home_team",
    "arena_id",  "shot_type", "shooter_id", "goalie_id",
    "shooter_handedness", "strength",  "x_std",     "y_std",
    "outcome",   "is_home_shot", "goal_diff"};

std::string shot_to_jsonl(const ShotRecord& s) {
  json j;
  j["season"] = s.season;
  j["game_id"] = s.game_id;
  j["game_date"] = s.game_date;
  j["event_index"] = s.event_index;
  j["event_type"] = std::string(to_string(s.event_type));
  j["period"] = s.period;
  j["period_time_s"] = s.period_time_s;
  j["game_time_s"] = s.game_time_s;
  j["team"] = s.team;
  j["home_team"] = s.home_team;
  j["arena_id"] = s.arena_id;
  j["shot_type"] = s.shot_type;
  j["shooter_id"] = s.shooter_id;
  j["goalie_id"] = s.goalie_id;
  if (s.shooter_handedness)
    j["shooter_handedness"] = std::string(to_string(*s.shooter_handedness));
  j["strength"] = s.strength;
  j["x_std"] = s.x_std;
  j["y_std"] = s.y_std;
  j["outcome"] = s.outcome;
  j["is_home_shot"] = s.is_home_shot;
  j["goal_diff"] = s.goal_diff;
  return j.dump();
}

ShotRecord shot_from_json(const std::string& line) {
  const json j = json::parse(line);
  ShotRecord s;
  s.season = j.at("season").get<int>();
  s.game_id = j.at("game_id").get<std::string>();
  s.game_date = j.at("game_date").get<std::string>();
  s.event_index = j.at("event_index").get<int>();
  s.event_type = parse_event_type(j.at("event_type").get<std::string>());
  s.period = j.at("period").get<int>();
  s.period_time_s = j.at("period_time_s").get<int>();
  s.game_time_s = j.at("game_time_s").get<int>();
  s.team = j.at("team").get<std::string>();
  s.home_team = j.at("home_team").get<std::string>();
  s.arena_id = j.at("arena_id").get<std::string>();
  s.shot_type = j.at("shot_type").get<std::string>();
  s.shooter_id = j.at("shooter_id").get<std::string>();
  s.goalie_id = j.at("goalie_id").get<std::string>();
  if (j.contains("shooter_handedness") && !j["shooter_handedness"].is_null())
    s.shooter_handedness =
        parse_handedness(j["shooter_handedness"].get<std::string>());
  s.strength = j.at("strength").get<std::string>();
  s.x_std = j.at("x_std").get<double>();
  s.y_std = j.at("y_std").get<double>();
  s.outcome = j.at("outcome").get<int>();
  s.is_home_shot = j.at("is_home_shot").get<bool>();
  s.goal_diff = j.at("goal_diff").get<int>();
  return s;
}

std::vector<std::string> shot_to_cells(const ShotRecord& s) {
  return {
      std::to_string(s.season),
      s.game_id,
      s.game_date,
      std::to_string(s.event_index),
      std::string(to_string(s.event_type)),
      std::to_string(s.period),
      std::to_string(s.period_time_s),
      std::to_string(s.game_time_s),
      s.team,
      s.home_team,
      s.arena_id,
      s.shot_type,
      s.shooter_id,
      s.goalie_id,
      s.shooter_handedness
          ? std::string(to_string(*s.shooter_handedness))
          : std::string(),
      s.strength,
      format_double(s.x_std),
      format_double(s.y_std),
      std::to_string(s.outcome),
      s.is_home_shot ? "true" : "false",
      std::to_string(s.goal_diff),
  };
}

ShotRecord shot_from_cells(const std::vector<std::string>& header,
                           const std::vector<std::string>& cells) {
  const CellView v(header, cells);
  ShotRecord s;
  s.season = parse_int(v.required("season"), "season");
  s.game_id = v.required("game_id");
  s.game_date = v.required("game_date");
  s.event_index = parse_int(v.required("event_index"), "event_index");
  s.event_type = parse_event_type(v.required("event_type"));
  s.period = parse_int(v.required("period"), "period");
  s.period_time_s = parse_int(v.required("period_time_s"), "period_time_s");
  s.game_time_s = parse_int(v.required("game_time_s"), "game_time_s");
  s.team = v.required("team");
  s.home_team = v.required("home_team");
  s.arena_id = v.required("arena_id");
  s.shot_type = v.required("shot_type");
  s.shooter_id = v.required("shooter_id");
  s.goalie_id = v.required("goalie_id");
  if (const auto& c = v.get("shooter_handedness"); !c.empty())
    s.shooter_handedness = parse_handedness(c);
  s.strength = v.required("strength");
  s.x_std = parse_num(v.required("x_std"), "x_std");
  s.y_std = parse_num(v.required("y_std"), "y_std");
  s.outcome = parse_int(v.required("outcome"), "outcome");
  s.is_home_shot = parse_bool(v.required("is_home_shot"), "is_home_shot");
  s.goal_diff = parse_int(v.required("goal_diff"), "goal_diff");
  return s;
}

void write_shots(const std::string& path, const std::vector<ShotRecord>& shots,
                 TableFormat fmt_kind) {
  table_to_file(
      path, fmt_kind, kShotColumns, shots.size(),
      [&](std::size_t i) { return shot_to_cells(shots[i]); },
      [&](std::size_t i) { return shot_to_jsonl(shots[i]); });
}

std::vector<ShotRecord> read_shots(const std::string& path) {
  return read_table<ShotRecord>(path, &shot_from_json, &shot_from_cells);
}

// --- BaseFeatureRow ---

const std::vector<std::string> kBaseRowColumns = {
    "season",        "game_id",        "game_date",
    "event_index",   "shooter_id",     "goalie_id",
    "arena_id",      "isStrongSide",   "x",
    "y",             "GameTime",       "PeriodTime",
    "Distance",      "Angle",          "ShotType",
    "GoalDiff",      "LastEvent",      "LastEventDistance",
    "LastEventZone", "LastEventAngle", "LastEventSpeed",
    "TimeSinceLastEvent", "Rebound",   "FlurryCount",
    "Fastbreak",     "krzywickiX",     "krzywickiY",
    "krzywickiDist", "SchuckersX",     "SchuckersY",
    "SchuckersDist", "SchuckersAngle", "Outcome"};

std::string base_row_to_jsonl(const BaseFeatureRow& r) {
  json j;
  j["season"] = r.season;
  j["game_id"] = r.game_id;
  j["game_date"] = r.game_date;
  j["event_index"] = r.event_index;
  j["shooter_id"] = r.shooter_id;
  j["goalie_id"] = r.goalie_id;
  j["arena_id"] = r.arena_id;
  if (r.is_strong_side) j["isStrongSide"] = *r.is_strong_side;
  j["x"] = r.x;
  j["y"] = r.y;
  j["GameTime"] = r.game_time;
  j["PeriodTime"] = r.period_time;
  j["Distance"] = r.distance;
  j["Angle"] = r.angle;
  j["ShotType"] = r.shot_type;
  j["GoalDiff"] = r.goal_diff;
  if (r.last_event) j["LastEvent"] = *r.last_event;
  if (r.last_event_distance) j["LastEventDistance"] = *r.last_event_distance;
  if (r.last_event_zone)
    j["LastEventZone"] = std::string(to_string(*r.last_event_zone));
  if (r.last_event_angle) j["LastEventAngle"] = *r.last_event_angle;
  if (r.last_event_speed) j["LastEventSpeed"] = *r.last_event_speed;
  if (r.time_since_last_event)
    j["TimeSinceLastEvent"] = *r.time_since_last_event;
  j["Rebound"] = r.rebound;
  j["FlurryCount"] = r.flurry_count;
  j["Fastbreak"] = r.fastbreak;
  j["krzywickiX"] = r.krzywicki_x;
  j["krzywickiY"] = r.krzywicki_y;
  j["krzywickiDist"] = r.krzywicki_dist;
  j["SchuckersX"] = r.schuckers_x;
  j["SchuckersY"] = r.schuckers_y;
  j["SchuckersDist"] = r.schuckers_dist;
  j["SchuckersAngle"] = r.schuckers_angle;
  j["Outcome"] = r.outcome;
  return j.dump();
}

BaseFeatureRow base_row_from_json(const std::string& line) {
  const json j = json::parse(line);
  BaseFeatureRow r;
  r.season = j.at("season").get<int>();
  r.game_id = j.at("game_id").get<std::string>();
  r.game_date = j.at("game_date").get<std::string>();
  r.event_index = j.at("event_index").get<int>();
  r.shooter_id = j.at("shooter_id").get<std::string>();
  r.goalie_id = j.at("goalie_id").get<std::string>();
  r.arena_id = j.at("arena_id").get<std::string>();
  if (j.contains("isStrongSide") && !j["isStrongSide"].is_null())
    r.is_strong_side = j["isStrongSide"].get<bool>();
  r.x = j.at("x").get<double>();
  r.y = j.at("y").get<double>();
  r.game_time = j.at("GameTime").get<double>();
  r.period_time = j.at("PeriodTime").get<double>();
  r.distance = j.at("Distance").get<double>();
  r.angle = j.at("Angle").get<double>();
  r.shot_type = j.at("ShotType").get<std::string>();
  r.goal_diff = j.at("GoalDiff").get<int>();
  if (j.contains("LastEvent") && !j["LastEvent"].is_null())
    r.last_event = j["LastEvent"].get<std::string>();
  if (j.contains("LastEventDistance") && !j["LastEventDistance"].is_null())
    r.last_event_distance = j["LastEventDistance"].get<double>();
  if (j.contains("LastEventZone") && !j["LastEventZone"].is_null())
    r.last_event_zone = parse_zone(j["LastEventZone"].get<std::string>());
  if (j.contains("LastEventAngle") && !j["LastEventAngle"].is_null())
    r.last_event_angle = j["LastEventAngle"].get<double>();
  if (j.contains("LastEventSpeed") && !j["LastEventSpeed"].is_null())
    r.last_event_speed = j["LastEventSpeed"].get<double>();
  if (j.contains("TimeSinceLastEvent") && !j["TimeSinceLastEvent"].is_null())
    r.time_since_last_event = j["TimeSinceLastEvent"].get<double>();
  r.rebound = j.at("Rebound").get<bool>();
  r.flurry_count = j.at("FlurryCount").get<int>();
  r.fastbreak = j.at("Fastbreak").get<bool>();
  r.krzywicki_x = j.at("krzywickiX").get<double>();
  r.krzywicki_y = j.at("krzywickiY").get<double>();
  r.krzywicki_dist = j.at("krzywickiDist").get<double>();
  r.schuckers_x = j.at("SchuckersX").get<double>();
  r.schuckers_y = j.at("SchuckersY").get<double>();
  r.schuckers_dist = j.at("SchuckersDist").get<double>();
  r.schuckers_angle = j.at("SchuckersAngle").get<double>();
  r.outcome = j.at("Outcome").get<int>();
  return r;
}

std::vector<std::string> base_row_to_cells(const BaseFeatureRow& r) {
  auto opt_num = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  return {
      std::to_string(r.season),
      r.game_id,
      r.game_date,
      std::to_string(r.event_index),
      r.shooter_id,
      r.goalie_id,
      r.arena_id,
      r.is_strong_side ? (*r.is_strong_side ? "true" : "false") : "",
      format_double(r.x),
      format_double(r.y),
      format_double(r.game_time),
      format_double(r.period_time),
      format_double(r.distance),
      format_double(r.angle),
      r.shot_type,
      std::to_string(r.goal_diff),
      r.last_event.value_or(""),
      opt_num(r.last_event_distance),
      r.last_event_zone ? std::string(to_string(*r.last_event_zone))
                        : std::string(),
      opt_num(r.last_event_angle),
      opt_num(r.last_event_speed),
      opt_num(r.time_since_last_event),
      r.rebound ? "true" : "false",
      std::to_string(r.flurry_count),
      r.fastbreak ? "true" : "false",
      format_double(r.krzywicki_x),
      format_double(r.krzywicki_y),
      format_double(r.krzywicki_dist),
      format_double(r.schuckers_x),
      format_double(r.schuckers_y),
      format_double(r.schuckers_dist),
      format_double(r.schuckers_angle),
      std::to_string(r.outcome),
  };
}

BaseFeatureRow base_row_from_cells(const std::vector<std::string>& header,
                                   const std::vector<std::string>& cells) {
  const CellView v(header, cells);
  BaseFeatureRow r;
  r.season = parse_int(v.required("season"), "season");
  r.game_id = v.required("game_id");
  r.game_date = v.required("game_date");
  r.event_index = parse_int(v.required("event_index"), "event_index");
  r.shooter_id = v.required("shooter_id");
  r.goalie_id = v.required("goalie_id");
  r.arena_id = v.required("arena_id");
  if (const auto& c = v.get("isStrongSide"); !c.empty())
    r.is_strong_side = parse_bool(c, "isStrongSide");
  r.x = parse_num(v.required("x"), "x");
  r.y = parse_num(v.required("y"), "y");
  r.game_time = parse_num(v.required("GameTime"), "GameTime");
  r.period_time = parse_num(v.required("PeriodTime"), "PeriodTime");
  r.distance = parse_num(v.required("Distance"), "Distance");
  r.angle = parse_num(v.required("Angle"), "Angle");
  r.shot_type = v.required("ShotType");
  r.goal_diff = parse_int(v.required("GoalDiff"), "GoalDiff");
  if (const auto& c = v.get("LastEvent"); !c.empty()) r.last_event = c;
  if (const auto& c = v.get("LastEventDistance"); !c.empty())
    r.last_event_distance = parse_num(c, "LastEventDistance");
  if (const auto& c = v.get("LastEventZone"); !c.empty())
    r.last_event_zone = parse_zone(c);
  if (const auto& c = v.get("LastEventAngle"); !c.empty())
    r.last_event_angle = parse_num(c, "LastEventAngle");
  if (const auto& c = v.get("LastEventSpeed"); !c.empty())
    r.last_event_speed = parse_num(c, "LastEventSpeed");
  if (const auto& c = v.get("TimeSinceLastEvent"); !c.empty())
    r.time_since_last_event = parse_num(c, "TimeSinceLastEvent");
  r.rebound = parse_bool(v.required("Rebound"), "Rebound");
  r.flurry_count = parse_int(v.required("FlurryCount"), "FlurryCount");
  r.fastbreak = parse_bool(v.required("Fastbreak"), "Fastbreak");
  r.krzywicki_x = parse_num(v.required("krzywickiX"), "krzywickiX");
  r.krzywicki_y = parse_num(v.required("krzywickiY"), "krzywickiY");
  r.krzywicki_dist = parse_num(v.required("krzywickiDist"), "krzywickiDist");
  r.schuckers_x = parse_num(v.required("SchuckersX"), "SchuckersX");
  r.schuckers_y = parse_num(v.required("SchuckersY"), "SchuckersY");
  r.schuckers_dist = parse_num(v.required("SchuckersDist"), "SchuckersDist");
  r.schuckers_angle = parse_num(v.required("SchuckersAngle"), "SchuckersAngle");
  r.outcome = parse_int(v.required("Outcome"), "Outcome");
  return r;
}

void write_base_rows(const std::string& path,
                     const std::vector<BaseFeatureRow>& rows,
                     TableFormat fmt_kind) {
  table_to_file(
      path, fmt_kind, kBaseRowColumns, rows.size(),
      [&](std::size_t i) { return base_row_to_cells(rows[i]); },
      [&](std::size_t i) { return base_row_to_jsonl(rows[i]); });
}

std::vector<BaseFeatureRow> read_base_rows(const std::string& path) {
  return read_table<BaseFeatureRow>(path, &base_row_from_json,
                                    &base_row_from_cells);
}

// --- SkillFeatureRow ---

const std::vector<std::string> kSkillRowColumns = {
    "season",          "game_id",           "game_date",
    "event_index",     "shooter_id",        "goalie_id",
    "true_gax_shooter", "true_talent_shooter", "true_gsax_goalie",
    "true_talent_goalie", "xg_base",        "outcome"};

std::string skill_row_to_jsonl(const SkillFeatureRow& r) {
  json j;
  j["season"] = r.season;
  j["game_id"] = r.game_id;
  j["game_date"] = r.game_date;
  j["event_index"] = r.event_index;
  j["shooter_id"] = r.shooter_id;
  j["goalie_id"] = r.goalie_id;
  j["true_gax_shooter"] = r.true_gax_shooter;
  j["true_talent_shooter"] = r.true_talent_shooter;
  j["true_gsax_goalie"] = r.true_gsax_goalie;
  j["true_talent_goalie"] = r.true_talent_goalie;
  j["xg_base"] = r.xg_base;
  j["outcome"] = r.outcome;
  return j.dump();
}

SkillFeatureRow skill_row_from_json(const std::string& line) {
  const json j = json::parse(line);
  SkillFeatureRow r;
  r.season = j.at("season").get<int>();
  r.game_id = j.at("game_id").get<std::string>();
  r.game_date = j.at("game_date").get<std::string>();
  r.event_index = j.at("event_index").get<int>();
  r.shooter_id = j.at("shooter_id").get<std::string>();
  r.goalie_id = j.at("goalie_id").get<std::string>();
  r.true_gax_shooter = j.at("true_gax_shooter").get<double>();
  r.true_talent_shooter = j.at("true_talent_shooter").get<double>();
  r.true_gsax_goalie = j.at("true_gsax_goalie").get<double>();
  r.true_talent_goalie = j.at("true_talent_goalie").get<double>();
  r.xg_base = j.at("xg_base").get<double>();
  r.outcome = j.at("outcome").get<int>();
  return r;
}

std::vector<std::string> skill_row_to_cells(const SkillFeatureRow& r) {
  return {
      std::to_string(r.season),
      r.game_id,
      r.game_date,
      std::to_string(r.event_index),
      r.shooter_id,
      r.goalie_id,
      format_double(r.true_gax_shooter),
      format_double(r.true_talent_shooter),
      format_double(r.true_gsax_goalie),
      format_double(r.true_talent_goalie),
      format_double(r.xg_base),
      std::to_string(r.outcome),
  };
}

SkillFeatureRow skill_row_from_cells(const std::vector<std::string>& header,
                                     const std::vector<std::string>& cells) {
  const CellView v(header, cells);
  SkillFeatureRow r;
  r.season = parse_int(v.required("season"), "season");
  r.game_id = v.required("game_id");
  r.game_date = v.required("game_date");
  r.event_index = parse_int(v.required("event_index"), "event_index");
  r.shooter_id = v.required("shooter_id");
  r.goalie_id = v.required("goalie_id");
  r.true_gax_shooter = parse_num(v.required("true_gax_shooter"), "true_gax_shooter");
  r.true_talent_shooter =
      parse_num(v.required("true_talent_shooter"), "true_talent_shooter");
  r.true_gsax_goalie = parse_num(v.required("true_gsax_goalie"), "true_gsax_goalie");
  r.true_talent_goalie =
      parse_num(v.required("true_talent_goalie"), "true_talent_goalie");
  r.xg_base = parse_num(v.required("xg_base"), "xg_base");
  r.outcome = parse_int(v.required("outcome"), "outcome");
  return r;
}

void write_skill_rows(const std::string& path,
                      const std::vector<SkillFeatureRow>& rows,
                      TableFormat fmt_kind) {
  table_to_file(
      path, fmt_kind, kSkillRowColumns, rows.size(),
      [&](std::size_t i) { return skill_row_to_cells(rows[i]); },
      [&](std::size_t i) { return skill_row_to_jsonl(rows[i]); });
}

std::vector<SkillFeatureRow> read_skill_rows(const std::string& path) {
  return read_table<SkillFeatureRow>(path, &skill_row_from_json,
                                     &skill_row_from_cells);
}

}  // namespace xg::io
