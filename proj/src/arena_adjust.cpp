#include "xg/arena_adjust.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>
#include <json.hpp>

#include "xg/geometry.hpp"
#include "xg/log.hpp"

namespace xg {

using nlohmann::json;

QuantileMap::QuantileMap(std::vector<double> values) {
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  n_ = values.size();
  const double n = static_cast<double>(n_);
  // collapse ties to one point at the average of their plotting positions
  // (rank - 0.5)/n, which keeps probs strictly increasing
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
    const double lo = (static_cast<double>(i + 1) - 0.5) / n;
    const double hi = (static_cast<double>(j + 1) - 0.5) / n;
    points_.push_back(values[i]);
    probs_.push_back(0.5 * (lo + hi));
    i = j + 1;
  }
}

QuantileMap QuantileMap::from_points(std::vector<double> points,
                                     std::vector<double> probs,
                                     std::size_t n) {
  if (points.size() != probs.size())
    throw Error("quantile map points/probs size mismatch");
  QuantileMap m;
  m.points_ = std::move(points);
  m.probs_ = std::move(probs);
  m.n_ = n;
  return m;
}

double QuantileMap::cdf(double v) const {
  if (empty()) throw Error("empty quantile map");
  if (v <= points_.front()) return probs_.front();
  if (v >= points_.back()) return probs_.back();
  const auto it = std::upper_bound(points_.begin(), points_.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - points_.begin());
  const std::size_t lo = hi - 1;
  const double t = (v - points_[lo]) / (points_[hi] - points_[lo]);
  return probs_[lo] + t * (probs_[hi] - probs_[lo]);
}

double QuantileMap::quantile(double p) const {
  if (empty()) throw Error("empty quantile map");
  if (p <= probs_.front()) return points_.front();
  if (p >= probs_.back()) return points_.back();
  const auto it = std::upper_bound(probs_.begin(), probs_.end(), p);
  const std::size_t hi = static_cast<std::size_t>(it - probs_.begin());
  const std::size_t lo = hi - 1;
  const double t = (p - probs_[lo]) / (probs_[hi] - probs_[lo]);
  return points_[lo] + t * (points_[hi] - points_[lo]);
}

bool ArenaCdfTable::has_adjustment(const std::string& arena_id) const {
  if (league.x.empty() || league.y.empty()) return false;
  const auto it = arenas.find(arena_id);
  if (it == arenas.end()) return false;
  return it->second.x.sample_size() >= min_sample;
}

ArenaCdfTable build_cdf_tables(const std::vector<ShotRecord>& shots,
                               std::size_t min_sample) {
  if (shots.empty()) throw Error("no shots");
  ArenaCdfTable table;
  table.min_sample = min_sample;

  std::vector<double> road_x, road_y;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      by_arena;
  for (const ShotRecord& s : shots) {
    if (!s.is_home_shot) {
      road_x.push_back(s.x_std);
      road_y.push_back(s.y_std);
    }
    auto& [xs, ys] = by_arena[s.arena_id];
    xs.push_back(s.x_std);
    ys.push_back(s.y_std);
  }
  if (road_x.empty()) throw Error("no road shots for the league reference");
  table.league.x = QuantileMap(std::move(road_x));
  table.league.y = QuantileMap(std::move(road_y));
  for (auto& [arena_id, coords] : by_arena) {
    table.arenas[arena_id] = AxisCdfs{QuantileMap(std::move(coords.first)),
                                      QuantileMap(std::move(coords.second))};
  }
  return table;
}

double ArenaMeanStats::delta(const std::string& arena_id) const {
  const auto mean_it = arena_mean_dist.find(arena_id);
  const auto count_it = arena_counts.find(arena_id);
  if (mean_it == arena_mean_dist.end() || count_it == arena_counts.end())
    return 0.0;
  if (count_it->second < min_sample) return 0.0;
  return mean_it->second - league_road_mean_dist;
}

ArenaMeanStats build_arena_stats(const std::vector<ShotRecord>& shots,
                                 std::size_t min_sample) {
  if (shots.empty()) throw Error("no shots");
  ArenaMeanStats stats;
  stats.min_sample = min_sample;

  double road_sum = 0.0;
  std::size_t road_n = 0;
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const ShotRecord& s : shots) {
    const double dist = compute_geometry(s.x_std, s.y_std).first;
    if (!s.is_home_shot) {
      road_sum += dist;
      ++road_n;
    }
    auto& [sum, count] = sums[s.arena_id];
    sum += dist;
    ++count;
  }
  if (road_n == 0) throw Error("no road shots for the league reference");
  stats.league_road_mean_dist = road_sum / static_cast<double>(road_n);
  for (const auto& [arena_id, sc] : sums) {
    stats.arena_mean_dist[arena_id] = sc.first / static_cast<double>(sc.second);
    stats.arena_counts[arena_id] = sc.second;
  }
  return stats;
}

SchuckersAdjusted schuckers_adjust(const ShotRecord& shot,
                                   const ArenaCdfTable& tables) {
  double x = shot.x_std;
  double y = shot.y_std;
  if (tables.has_adjustment(shot.arena_id)) {
    const AxisCdfs& arena = tables.arenas.at(shot.arena_id);
    x = tables.league.x.quantile(arena.x.cdf(shot.x_std));
    y = tables.league.y.quantile(arena.y.cdf(shot.y_std));
    x = std::clamp(x, rink::kBlueLineX, rink::kXMax);
    y = std::clamp(y, -rink::kHalfWidth, rink::kHalfWidth);
  } else if (tables.arenas.find(shot.arena_id) == tables.arenas.end()) {
    log::warn(fmt::format("arena {} unknown, identity adjustment",
                          shot.arena_id));
  }
  const auto [dist, angle] = compute_geometry(x, y);
  return SchuckersAdjusted{x, y, dist, angle};
}

KrzywickiAdjusted krzywicki_adjust(const ShotRecord& shot,
                                   const ArenaMeanStats& stats) {
  const double raw_dist = compute_geometry(shot.x_std, shot.y_std).first;
  const double adj_dist = std::max(0.0, raw_dist - stats.delta(shot.arena_id));
  if (raw_dist == 0.0)
    return KrzywickiAdjusted{rink::kGoalLineX, 0.0, 0.0};
  const double ux = (shot.x_std - rink::kGoalLineX) / raw_dist;
  const double uy = shot.y_std / raw_dist;
  return KrzywickiAdjusted{rink::kGoalLineX + ux * adj_dist, uy * adj_dist,
                           adj_dist};
}

namespace {

json quantile_map_to_json(const QuantileMap& m) {
  json j;
  j["points"] = m.points();
  j["probs"] = m.probs();
  j["n"] = m.sample_size();
  return j;
}

QuantileMap quantile_map_from_json(const json& j) {
  return QuantileMap::from_points(j.at("points").get<std::vector<double>>(),
                                  j.at("probs").get<std::vector<double>>(),
                                  j.at("n").get<std::size_t>());
}

json axes_to_json(const AxisCdfs& a) {
  json j;
  j["x"] = quantile_map_to_json(a.x);
  j["y"] = quantile_map_to_json(a.y);
  return j;
}

AxisCdfs axes_from_json(const json& j) {
  return AxisCdfs{quantile_map_from_json(j.at("x")),
                  quantile_map_from_json(j.at("y"))};
}

}  // namespace

std::string arena_tables_to_json(const ArenaCdfTable& cdfs,
                                 const ArenaMeanStats& stats) {
  json j;
  j["cdf"]["min_sample"] = cdfs.min_sample;
  j["cdf"]["league"] = axes_to_json(cdfs.league);
  j["cdf"]["arenas"] = json::object();
  for (const auto& [arena_id, axes] : cdfs.arenas)
    j["cdf"]["arenas"][arena_id] = axes_to_json(axes);
  j["mean"]["min_sample"] = stats.min_sample;
  j["mean"]["league_road_mean_dist"] = stats.league_road_mean_dist;
  j["mean"]["arenas"] = json::object();
  for (const auto& [arena_id, mean] : stats.arena_mean_dist) {
    j["mean"]["arenas"][arena_id]["mean_dist"] = mean;
    j["mean"]["arenas"][arena_id]["count"] = stats.arena_counts.at(arena_id);
  }
  return j.dump(2);
}

std::pair<ArenaCdfTable, ArenaMeanStats> arena_tables_from_json(
    const std::string& text) {
  const json j = json::parse(text);
  ArenaCdfTable cdfs;
  cdfs.min_sample = j.at("cdf").at("min_sample").get<std::size_t>();
  cdfs.league = axes_from_json(j.at("cdf").at("league"));
  for (const auto& [arena_id, axes] : j.at("cdf").at("arenas").items())
    cdfs.arenas[arena_id] = axes_from_json(axes);
  ArenaMeanStats stats;
  stats.min_sample = j.at("mean").at("min_sample").get<std::size_t>();
  stats.league_road_mean_dist =
      j.at("mean").at("league_road_mean_dist").get<double>();
  for (const auto& [arena_id, entry] : j.at("mean").at("arenas").items()) {
    stats.arena_mean_dist[arena_id] = entry.at("mean_dist").get<double>();
    stats.arena_counts[arena_id] = entry.at("count").get<std::size_t>();
  }
  return {std::move(cdfs), std::move(stats)};
}

}  // namespace xg
