#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xg/types.hpp"

namespace xg {

enum class Zone { Offensive, Neutral, Defensive };

std::string_view to_string(Zone z);
std::optional<Zone> parse_zone(std::string_view s);

// The 25 predictors plus Outcome, one row per cleaned shot. Identity fields
// ride along so downstream stages can join rows back to shots. NaN/empty
// optionals mean "missing"; the learner routes missing values natively.
struct BaseFeatureRow {
  // identity (not predictors)
  int season = 0;
  std::string game_id;
  std::string game_date;
  int event_index = 0;
  std::string shooter_id;
  std::string goalie_id;
  std::string arena_id;

  std::optional<bool> is_strong_side;  // missing when handedness unknown
  double x = 0.0;
  double y = 0.0;
  double game_time = 0.0;
  double period_time = 0.0;
  double distance = 0.0;
  double angle = 0.0;
  std::string shot_type;
  int goal_diff = 0;
  std::optional<std::string> last_event;
  std::optional<double> last_event_distance;
  std::optional<Zone> last_event_zone;
  std::optional<double> last_event_angle;
  std::optional<double> last_event_speed;
  std::optional<double> time_since_last_event;
  bool rebound = false;
  int flurry_count = 0;
  bool fastbreak = false;
  double krzywicki_x = 0.0;
  double krzywicki_y = 0.0;
  double krzywicki_dist = 0.0;
  double schuckers_x = 0.0;
  double schuckers_y = 0.0;
  double schuckers_dist = 0.0;
  double schuckers_angle = 0.0;
  int outcome = 0;
};

// Strong side: the stick is on the side of the body closest to the goal.
// Convention: left-handed at y > 0 or right-handed at y < 0; the centerline
// counts as strong.
inline bool is_strong_side(Handedness handedness, double y_std) {
  if (y_std == 0.0) return true;
  return handedness == Handedness::Left ? y_std > 0.0 : y_std < 0.0;
}

struct LastEventFeatures {
  std::optional<std::string> last_event;
  std::optional<double> distance;
  std::optional<Zone> zone;
  std::optional<double> angle;
  std::optional<double> speed;
  std::optional<double> time_since;
};

// prev must be the immediately preceding event of the same game and period,
// with coordinates still rink-frame; they are flipped into the shooter's
// attack frame here. Pass nullopt prev for the first event of a period.
LastEventFeatures compute_last_event_features(
    const ShotRecord& shot, const std::optional<RawEvent>& prev,
    bool shooter_attacks_positive_x);

struct ReboundFlurry {
  bool rebound = false;
  int flurry_count = 0;
};

// priors: game times (seconds) of earlier on-goal shots by the same team in
// the same game, chronological.
ReboundFlurry detect_rebound_flurry(int shot_game_time_s,
                                    const std::vector<int>& prior_shot_times);

bool detect_fastbreak(const LastEventFeatures& last);

struct SchuckersAdjusted;
struct KrzywickiAdjusted;
class DirectionTable;

BaseFeatureRow assemble_base_row(const ShotRecord& shot,
                                 const std::optional<RawEvent>& prev,
                                 bool shooter_attacks_positive_x,
                                 const SchuckersAdjusted& schuckers,
                                 const KrzywickiAdjusted& krzywicki,
                                 const ReboundFlurry& rf);

struct ArenaCdfTable;
struct ArenaMeanStats;

// One row per shot, in shot order. events supply the last-event context and
// the prior-shot history (per game, sorted by event_index); shots must come
// from clean_and_filter against the same direction table.
std::vector<BaseFeatureRow> build_base_rows(
    const std::vector<ShotRecord>& shots, const std::vector<RawEvent>& events,
    const DirectionTable& directions, const ArenaCdfTable& cdfs,
    const ArenaMeanStats& stats);

}  // namespace xg
