#include "xg/base_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/core.h>

#include "xg/arena_adjust.hpp"
#include "xg/geometry.hpp"
#include "xg/ingest.hpp"
#include "xg/parallel.hpp"

namespace xg {

std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::Offensive: return "offensive";
    case Zone::Neutral: return "neutral";
    case Zone::Defensive: break;
  }
  return "defensive";
}

std::optional<Zone> parse_zone(std::string_view s) {
  if (s == "offensive") return Zone::Offensive;
  if (s == "neutral") return Zone::Neutral;
  if (s == "defensive") return Zone::Defensive;
  return std::nullopt;
}

LastEventFeatures compute_last_event_features(
    const ShotRecord& shot, const std::optional<RawEvent>& prev,
    bool shooter_attacks_positive_x) {
  LastEventFeatures out;
  if (!prev) return out;

  out.last_event = std::string(to_string(prev->event_type));
  out.time_since = static_cast<double>(shot.game_time_s - prev->game_time_s);

  if (!prev->x || !prev->y) return out;
  const auto [px, py] =
      standardize_coords(*prev->x, *prev->y, shooter_attacks_positive_x);

  if (px >= rink::kBlueLineX)
    out.zone = Zone::Offensive;
  else if (px <= -rink::kBlueLineX)
    out.zone = Zone::Defensive;
  else
    out.zone = Zone::Neutral;

  out.distance = std::hypot(shot.x_std - px, shot.y_std - py);
  const double shot_angle = compute_geometry(shot.x_std, shot.y_std).second;
  const double prev_angle = compute_geometry(px, py).second;
  out.angle = std::fabs(shot_angle - prev_angle);
  out.speed = *out.distance / std::max(*out.time_since, 1.0);
  return out;
}

ReboundFlurry detect_rebound_flurry(int shot_game_time_s,
                                    const std::vector<int>& prior_shot_times) {
  ReboundFlurry out;
  int cur = shot_game_time_s;
  for (auto it = prior_shot_times.rbegin(); it != prior_shot_times.rend();
       ++it) {
    if (cur - *it > 2) break;
    ++out.flurry_count;
    cur = *it;
  }
  out.rebound = out.flurry_count > 0;
  return out;
}

bool detect_fastbreak(const LastEventFeatures& last) {
  if (!last.zone || !last.time_since) return false;
  return (*last.zone == Zone::Neutral || *last.zone == Zone::Defensive) &&
         *last.time_since <= 4.0;
}

BaseFeatureRow assemble_base_row(const ShotRecord& shot,
                                 const std::optional<RawEvent>& prev,
                                 bool shooter_attacks_positive_x,
                                 const SchuckersAdjusted& schuckers,
                                 const KrzywickiAdjusted& krzywicki,
                                 const ReboundFlurry& rf) {
  BaseFeatureRow r;
  r.season = shot.season;
  r.game_id = shot.game_id;
  r.game_date = shot.game_date;
  r.event_index = shot.event_index;
  r.shooter_id = shot.shooter_id;
  r.goalie_id = shot.goalie_id;
  r.arena_id = shot.arena_id;

  if (shot.shooter_handedness)
    r.is_strong_side = is_strong_side(*shot.shooter_handedness, shot.y_std);
  r.x = shot.x_std;
  r.y = shot.y_std;
  r.game_time = static_cast<double>(shot.game_time_s);
  r.period_time = static_cast<double>(shot.period_time_s);
  const auto [dist, angle] = compute_geometry(shot.x_std, shot.y_std);
  r.distance = dist;
  r.angle = angle;
  r.shot_type = shot.shot_type;
  r.goal_diff = shot.goal_diff;

  const LastEventFeatures last =
      compute_last_event_features(shot, prev, shooter_attacks_positive_x);
  r.last_event = last.last_event;
  r.last_event_distance = last.distance;
  r.last_event_zone = last.zone;
  r.last_event_angle = last.angle;
  r.last_event_speed = last.speed;
  r.time_since_last_event = last.time_since;

  r.rebound = rf.rebound;
  r.flurry_count = rf.flurry_count;
  r.fastbreak = detect_fastbreak(last);

  r.krzywicki_x = krzywicki.x;
  r.krzywicki_y = krzywicki.y;
  r.krzywicki_dist = krzywicki.dist;
  r.schuckers_x = schuckers.x;
  r.schuckers_y = schuckers.y;
  r.schuckers_dist = schuckers.dist;
  r.schuckers_angle = schuckers.angle;
  r.outcome = shot.outcome;
  return r;
}

std::vector<BaseFeatureRow> build_base_rows(const std::vector<ShotRecord>& shots,
                                            const std::vector<RawEvent>& events,
                                            const DirectionTable& directions,
                                            const ArenaCdfTable& cdfs,
                                            const ArenaMeanStats& stats) {
  // per-game event list sorted by event_index, for prev lookup
  std::map<std::string, std::vector<const RawEvent*>> by_game;
  for (const RawEvent& e : events) by_game[e.game_id].push_back(&e);
  for (auto& [game_id, list] : by_game)
    std::sort(list.begin(), list.end(),
              [](const RawEvent* a, const RawEvent* b) {
                return a->event_index < b->event_index;
              });

  // per (game, team) on-goal shot times sorted by event_index
  std::map<std::pair<std::string, std::string>,
           std::vector<std::pair<int, int>>>
      shot_times;  // (event_index, game_time_s)
  for (const RawEvent& e : events) {
    if (e.event_type != EventType::Shot && e.event_type != EventType::Goal)
      continue;
    shot_times[{e.game_id, e.team}].emplace_back(e.event_index, e.game_time_s);
  }
  for (auto& [key, list] : shot_times) std::sort(list.begin(), list.end());

  // validated up front: an exception must not escape the parallel region
  std::vector<bool> attack_positive(shots.size());
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const ShotRecord& shot = shots[i];
    const auto direction =
        directions.lookup(shot.game_id, shot.period, shot.team);
    if (!direction)
      throw Error(fmt::format("no attack direction for game {} period {} team {}",
                              shot.game_id, shot.period, shot.team));
    attack_positive[i] = *direction;
  }

  std::vector<BaseFeatureRow> rows(shots.size());
  parallel_for(static_cast<std::ptrdiff_t>(shots.size()), [&](std::ptrdiff_t i) {
    const ShotRecord& shot = shots[static_cast<std::size_t>(i)];

    std::optional<RawEvent> prev;
    if (const auto it = by_game.find(shot.game_id); it != by_game.end()) {
      const auto& list = it->second;
      const auto pos = std::lower_bound(
          list.begin(), list.end(), shot.event_index,
          [](const RawEvent* e, int idx) { return e->event_index < idx; });
      if (pos != list.begin()) {
        const RawEvent* cand = *std::prev(pos);
        if (cand->period == shot.period) prev = *cand;
      }
    }

    std::vector<int> priors;
    if (const auto it = shot_times.find({shot.game_id, shot.team});
        it != shot_times.end()) {
      for (const auto& [event_index, t] : it->second) {
        if (event_index >= shot.event_index) break;
        priors.push_back(t);
      }
    }

    rows[static_cast<std::size_t>(i)] = assemble_base_row(
        shot, prev, attack_positive[static_cast<std::size_t>(i)],
        schuckers_adjust(shot, cdfs), krzywicki_adjust(shot, stats),
        detect_rebound_flurry(shot.game_time_s, priors));
  });
  return rows;
}

}  // namespace xg
