#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "xg/arena_adjust.hpp"
#include "xg/base_features.hpp"
#include "xg/geometry.hpp"
#include "xg/ingest.hpp"
#include "support/test_support.hpp"

using namespace xg;
using testsup::EventSpec;

TEST_CASE("distance and angle from the goal mouth") {
  CHECK(compute_geometry(89, 0) == std::pair{0.0, 0.0});
  CHECK(compute_geometry(64, 0) == std::pair{25.0, 0.0});
  auto [d, a] = compute_geometry(89, 10);
  CHECK(d == doctest::Approx(10.0));
  CHECK(a == doctest::Approx(90.0));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xd(25.0, 100.0);
  std::uniform_real_distribution<double> yd(0.0, 42.5);
  for (int i = 0; i < 500; ++i) {
    const double x = xd(rng), y = yd(rng);
    auto up = compute_geometry(x, y);
    auto down = compute_geometry(x, -y);
    CHECK(up.first == down.first);    // distance even in y
    CHECK(up.second == down.second);  // angle even in y
  }
}

TEST_CASE("strong side follows the stated handedness convention") {
  CHECK(is_strong_side(Handedness::Left, 10.0));
  CHECK_FALSE(is_strong_side(Handedness::Right, 10.0));
  CHECK(is_strong_side(Handedness::Right, 0.0));  // centerline counts
  CHECK(is_strong_side(Handedness::Right, -10.0));
  CHECK_FALSE(is_strong_side(Handedness::Left, -10.0));
}

namespace {

ShotRecord std_shot(double x, double y, int game_time_s) {
  ShotRecord s;
  s.season = 2019;
  s.game_id = "2019020001";
  s.game_date = "2019-10-02";
  s.event_index = 5;
  s.event_type = EventType::Shot;
  s.period = 1;
  s.period_time_s = game_time_s;
  s.game_time_s = game_time_s;
  s.team = "HOME";
  s.home_team = "HOME";
  s.arena_id = "R1";
  s.shot_type = "Wrist";
  s.shooter_id = "S1";
  s.goalie_id = "G1";
  s.strength = "5v5";
  s.x_std = x;
  s.y_std = y;
  s.is_home_shot = true;
  return s;
}

RawEvent prev_event(double x, double y, int game_time_s) {
  RawEvent e;
  e.season = 2019;
  e.game_id = "2019020001";
  e.game_date = "2019-10-02";
  e.event_index = 4;
  e.event_type = EventType::Hit;
  e.period = 1;
  e.period_time_s = game_time_s;
  e.game_time_s = game_time_s;
  e.team = "AWAY";
  e.home_team = "HOME";
  e.arena_id = "R1";
  e.x = x;
  e.y = y;
  e.strength = "5v5";
  return e;
}

}  // namespace

TEST_CASE("last-event distance, speed, and time gap") {
  SUBCASE("co-located previous event") {
    ShotRecord shot = std_shot(64, 0, 10);
    LastEventFeatures f =
        compute_last_event_features(shot, prev_event(64, 0, 5), true);
    CHECK(*f.distance == 0.0);
    CHECK(*f.speed == 0.0);
    CHECK(*f.time_since == 5.0);
  }
  SUBCASE("25 feet in 2 seconds") {
    ShotRecord shot = std_shot(64, 0, 10);
    LastEventFeatures f =
        compute_last_event_features(shot, prev_event(39, 0, 8), true);
    CHECK(*f.distance == doctest::Approx(25.0));
    CHECK(*f.speed == doctest::Approx(12.5));
  }
  SUBCASE("zero gap clamps the divisor") {
    ShotRecord shot = std_shot(64, 0, 10);
    LastEventFeatures f =
        compute_last_event_features(shot, prev_event(34, 0, 10), true);
    CHECK(*f.distance == doctest::Approx(30.0));
    CHECK(*f.speed == doctest::Approx(30.0));
  }
  SUBCASE("no previous event leaves everything missing") {
    ShotRecord shot = std_shot(64, 0, 10);
    LastEventFeatures f = compute_last_event_features(shot, std::nullopt, true);
    CHECK_FALSE(f.last_event.has_value());
    CHECK_FALSE(f.distance.has_value());
    CHECK_FALSE(f.zone.has_value());
  }
}

TEST_CASE("rebound and flurry counting") {
  CHECK(detect_rebound_flurry(100, {}).rebound == false);
  CHECK(detect_rebound_flurry(100, {}).flurry_count == 0);

  ReboundFlurry one = detect_rebound_flurry(100, {99});
  CHECK(one.rebound);
  CHECK(one.flurry_count == 1);

  // three shots one second apart: the third sees both priors
  ReboundFlurry chain = detect_rebound_flurry(100, {98, 99});
  CHECK(chain.rebound);
  CHECK(chain.flurry_count == 2);

  // a three-second gap breaks the chain
  ReboundFlurry gapped = detect_rebound_flurry(100, {94, 97});
  CHECK_FALSE(gapped.rebound);
  CHECK(gapped.flurry_count == 0);
}

TEST_CASE("fastbreak needs a quick entry from outside the offensive zone") {
  auto last = [](Zone zone, double dt) {
    LastEventFeatures f;
    f.zone = zone;
    f.time_since = dt;
    return f;
  };
  CHECK(detect_fastbreak(last(Zone::Neutral, 3)));
  CHECK_FALSE(detect_fastbreak(last(Zone::Offensive, 3)));
  CHECK_FALSE(detect_fastbreak(last(Zone::Defensive, 10)));
  CHECK(detect_fastbreak(last(Zone::Defensive, 4)));
  CHECK_FALSE(detect_fastbreak(LastEventFeatures{}));  // nothing known
}

namespace {

struct Corpus {
  std::vector<RawEvent> events;
  DirectionTable directions;
  std::vector<ShotRecord> shots;
  ArenaCdfTable cdfs;
  ArenaMeanStats stats;
};

// min_sample far above the shot count keeps both adjustments at identity, so
// geometry checks see raw coordinates.
Corpus corpus_from(const std::vector<EventSpec>& specs) {
  Corpus c;
  c.events = testsup::fixture_game("2019020001", "2019-10-02", specs);
  for (int period = 1; period <= 3; ++period) {
    c.directions.set("2019020001", period, "HOME", period % 2 == 1);
    c.directions.set("2019020001", period, "AWAY", period % 2 == 0);
  }
  c.shots = clean_and_filter(c.events, c.directions);
  c.cdfs = build_cdf_tables(c.shots, 1000000);
  c.stats = build_arena_stats(c.shots, 1000000);
  return c;
}

}  // namespace

TEST_CASE("assembled row matches the hand computation") {
  EventSpec faceoff;
  faceoff.event_index = 1;
  faceoff.type = EventType::Faceoff;
  faceoff.period_time_s = 0;
  faceoff.x = 0;
  faceoff.y = 0;
  EventSpec hit;
  hit.event_index = 2;
  hit.type = EventType::Hit;
  hit.team = "AWAY";
  hit.period_time_s = 5;
  hit.x = -30;
  hit.y = -10;
  EventSpec shot;
  shot.event_index = 3;
  shot.type = EventType::Shot;
  shot.period_time_s = 12;
  shot.x = 64;
  shot.y = 5;

  Corpus c = corpus_from({faceoff, hit, shot});
  REQUIRE(c.shots.size() == 1);
  std::vector<BaseFeatureRow> rows =
      build_base_rows(c.shots, c.events, c.directions, c.cdfs, c.stats);
  REQUIRE(rows.size() == 1);
  const BaseFeatureRow& r = rows[0];

  CHECK(r.is_strong_side.has_value());
  CHECK(*r.is_strong_side == true);  // left-handed fixture shooter at y > 0
  CHECK(r.x == 64.0);
  CHECK(r.y == 5.0);
  CHECK(r.game_time == 12.0);
  CHECK(r.period_time == 12.0);
  CHECK(r.distance == doctest::Approx(std::hypot(25.0, 5.0)).epsilon(1e-12));
  CHECK(r.angle ==
        doctest::Approx(std::atan2(5.0, 25.0) * 180.0 / M_PI).epsilon(1e-12));
  CHECK(r.shot_type == "Wrist");
  CHECK(r.goal_diff == 0);
  CHECK(*r.last_event == "HIT");
  CHECK(*r.last_event_distance ==
        doctest::Approx(std::hypot(64.0 + 30.0, 5.0 + 10.0)).epsilon(1e-12));
  CHECK(*r.last_event_zone == Zone::Defensive);
  const double shot_angle = std::atan2(5.0, 25.0) * 180.0 / M_PI;
  const double hit_angle = std::atan2(10.0, 119.0) * 180.0 / M_PI;
  CHECK(*r.last_event_angle ==
        doctest::Approx(std::fabs(shot_angle - hit_angle)).epsilon(1e-12));
  CHECK(*r.last_event_speed ==
        doctest::Approx(std::hypot(94.0, 15.0) / 7.0).epsilon(1e-12));
  CHECK(*r.time_since_last_event == 7.0);
  CHECK_FALSE(r.rebound);
  CHECK(r.flurry_count == 0);
  CHECK_FALSE(r.fastbreak);
  // identity adjustments reproduce the raw geometry
  CHECK(r.schuckers_x == 64.0);
  CHECK(r.schuckers_y == 5.0);
  CHECK(r.krzywicki_dist == r.distance);
  CHECK(r.outcome == 0);
}

TEST_CASE("first event of the game has no last-event context") {
  EventSpec shot;
  shot.event_index = 1;
  shot.period_time_s = 3;
  Corpus c = corpus_from({shot});
  std::vector<BaseFeatureRow> rows =
      build_base_rows(c.shots, c.events, c.directions, c.cdfs, c.stats);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].last_event.has_value());
  CHECK_FALSE(rows[0].last_event_distance.has_value());
  CHECK_FALSE(rows[0].time_since_last_event.has_value());
  CHECK_FALSE(rows[0].rebound);
  CHECK(rows[0].goal_diff == 0);  // tied game
}

TEST_CASE("rebound rows always sit within the two-second window") {
  std::vector<EventSpec> specs;
  const int gaps[] = {0, 1, 3, 1, 8, 2};
  int t = 30;
  for (int i = 0; i < 6; ++i) {
    t += gaps[i];
    EventSpec s;
    s.event_index = i + 1;
    s.period_time_s = t;
    s.x = 70;
    s.y = 2;
    specs.push_back(s);
  }
  Corpus c = corpus_from(specs);
  std::vector<BaseFeatureRow> rows =
      build_base_rows(c.shots, c.events, c.directions, c.cdfs, c.stats);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].rebound)
      CHECK(*rows[i].time_since_last_event <= 2.0);  // same-team shot chain
  }
  CHECK(rows[1].rebound);        // 1 s after the first shot
  CHECK_FALSE(rows[2].rebound);  // 3 s gap
  CHECK(rows[3].flurry_count == 1);
  CHECK(rows[5].flurry_count == 1);
}

TEST_CASE("rows never look past their own shot") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> xd(30.0, 95.0);
  std::uniform_real_distribution<double> yd(-40.0, 40.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<EventSpec> specs;
  for (int i = 0; i < 30; ++i) {
    EventSpec s;
    s.event_index = i + 1;
    s.period = 1 + i / 12;
    s.period_time_s = (i % 12) * 90 + static_cast<int>(unit(rng) * 40);
    s.type = unit(rng) < 0.5 ? EventType::Shot
                             : (unit(rng) < 0.4 ? EventType::Goal
                                                : EventType::Giveaway);
    s.team = unit(rng) < 0.6 ? "HOME" : "AWAY";
    s.x = xd(rng);
    s.y = yd(rng);
    specs.push_back(s);
  }
  Corpus c = corpus_from(specs);
  std::vector<BaseFeatureRow> full =
      build_base_rows(c.shots, c.events, c.directions, c.cdfs, c.stats);

  for (std::size_t k = 0; k < c.shots.size(); ++k) {
    const ShotRecord& s = c.shots[k];
    // drop every event after this shot, and every later shot
    std::vector<RawEvent> truncated_events;
    for (const RawEvent& e : c.events)
      if (e.event_index <= s.event_index) truncated_events.push_back(e);
    std::vector<ShotRecord> truncated_shots(c.shots.begin(),
                                            c.shots.begin() + k + 1);
    std::vector<BaseFeatureRow> rows = build_base_rows(
        truncated_shots, truncated_events, c.directions, c.cdfs, c.stats);
    REQUIRE(rows.size() == k + 1);
    const BaseFeatureRow& a = full[k];
    const BaseFeatureRow& b = rows[k];
    CHECK(a.distance == b.distance);
    CHECK(a.angle == b.angle);
    CHECK(a.last_event == b.last_event);
    CHECK(a.last_event_distance == b.last_event_distance);
    CHECK(a.last_event_speed == b.last_event_speed);
    CHECK(a.rebound == b.rebound);
    CHECK(a.flurry_count == b.flurry_count);
    CHECK(a.fastbreak == b.fastbreak);
    CHECK(a.goal_diff == b.goal_diff);
  }
}
