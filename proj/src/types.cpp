#include "xg/types.hpp"

#include <algorithm>
#include <cctype>

namespace xg {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

}  // namespace

EventType parse_event_type(std::string_view s) {
  const std::string u = upper(s);
  if (u == "SHOT") return EventType::Shot;
  if (u == "GOAL") return EventType::Goal;
  if (u == "MISS" || u == "MISSED_SHOT") return EventType::Miss;
  if (u == "BLOCK" || u == "BLOCKED_SHOT") return EventType::Block;
  if (u == "FACEOFF") return EventType::Faceoff;
  if (u == "HIT") return EventType::Hit;
  if (u == "GIVEAWAY") return EventType::Giveaway;
  if (u == "TAKEAWAY") return EventType::Takeaway;
  if (u == "PENALTY") return EventType::Penalty;
  return EventType::Other;
}

std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::Shot: return "SHOT";
    case EventType::Goal: return "GOAL";
    case EventType::Miss: return "MISS";
    case EventType::Block: return "BLOCK";
    case EventType::Faceoff: return "FACEOFF";
    case EventType::Hit: return "HIT";
    case EventType::Giveaway: return "GIVEAWAY";
    case EventType::Takeaway: return "TAKEAWAY";
    case EventType::Penalty: return "PENALTY";
    case EventType::Other: break;
  }
  return "OTHER";
}

std::optional<Handedness> parse_handedness(std::string_view s) {
  const std::string u = upper(s);
  if (u == "L" || u == "LEFT") return Handedness::Left;
  if (u == "R" || u == "RIGHT") return Handedness::Right;
  return std::nullopt;
}

std::string_view to_string(Handedness h) {
  return h == Handedness::Left ? "L" : "R";
}

}  // namespace xg
