#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xg {

// Standard NHL rink dimensions, feet. Origin at center ice, the attacked
// net sits at (+kGoalLineX, 0) after standardization.
namespace rink {
inline constexpr double kGoalLineX = 89.0;
inline constexpr double kBlueLineX = 25.0;
inline constexpr double kHalfWidth = 42.5;
inline constexpr double kXMax = 100.0;
}  // namespace rink

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class EventType {
  Shot,
  Goal,
  Miss,
  Block,
  Faceoff,
  Hit,
  Giveaway,
  Takeaway,
  Penalty,
  Other,
};

// Unknown strings map to Other.
EventType parse_event_type(std::string_view s);
std::string_view to_string(EventType t);

enum class Handedness { Left, Right };

std::optional<Handedness> parse_handedness(std::string_view s);
std::string_view to_string(Handedness h);

// One parsed play-by-play row. Coordinates are rink-frame as recorded;
// optional fields stay empty when the source row lacks them.
struct RawEvent {
  int season = 0;
  std::string game_id;
  std::string game_date;  // ISO yyyy-mm-dd
  int event_index = 0;
  EventType event_type = EventType::Other;
  int period = 1;
  int period_time_s = 0;
  int game_time_s = 0;
  std::string team;
  std::string home_team;
  std::string arena_id;
  std::optional<double> x;
  std::optional<double> y;
  std::optional<std::string> shot_type;
  std::optional<std::string> shooter_id;
  std::optional<std::string> goalie_id;
  std::optional<Handedness> shooter_handedness;
  std::string strength;
  int score_home = 0;
  int score_away = 0;
};

// A cleaned, coordinate-standardized on-goal 5v5 shot. The attacked net is
// at (+89, 0) and x_std >= 25 (offensive zone only).
struct ShotRecord {
  int season = 0;
  std::string game_id;
  std::string game_date;
  int event_index = 0;
  EventType event_type = EventType::Shot;  // Shot or Goal only
  int period = 1;
  int period_time_s = 0;
  int game_time_s = 0;
  std::string team;
  std::string home_team;
  std::string arena_id;
  std::string shot_type;
  std::string shooter_id;
  std::string goalie_id;
  std::optional<Handedness> shooter_handedness;
  std::string strength;
  double x_std = 0.0;
  double y_std = 0.0;
  int outcome = 0;  // 1 = goal
  bool is_home_shot = false;
  int goal_diff = 0;  // shooting team score minus opponent at shot time
};

// Chronological sort key used to canonicalize shot and event order.
struct ChronoKey {
  std::string_view game_date;
  std::string_view game_id;
  int event_index;

  friend bool operator<(const ChronoKey& a, const ChronoKey& b) {
    if (a.game_date != b.game_date) return a.game_date < b.game_date;
    if (a.game_id != b.game_id) return a.game_id < b.game_id;
    return a.event_index < b.event_index;
  }
};

inline ChronoKey chrono_key(const ShotRecord& s) {
  return ChronoKey{s.game_date, s.game_id, s.event_index};
}

}  // namespace xg
