#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "xg/arena_adjust.hpp"
#include "xg/geometry.hpp"
#include "xg/io.hpp"

using namespace xg;

namespace {

ShotRecord shot_at(const std::string& arena, double x, double y,
                   bool is_home) {
  ShotRecord s;
  s.season = 2019;
  s.game_id = "2019020001";
  s.game_date = "2019-10-02";
  s.arena_id = arena;
  s.x_std = x;
  s.y_std = y;
  s.is_home_shot = is_home;
  s.shot_type = "Wrist";
  s.shooter_id = "S1";
  s.goalie_id = "G1";
  s.strength = "5v5";
  return s;
}

}  // namespace

TEST_CASE("degenerate arena CDF maps its point to the league median") {
  std::vector<ShotRecord> shots;
  // league reference: road shots at five distinct x positions, median 70
  for (double x : {60.0, 65.0, 70.0, 75.0, 80.0})
    shots.push_back(shot_at("LEAGUE", x, 0.0, false));
  // the arena under test: five home shots all at the same point
  for (int i = 0; i < 5; ++i) shots.push_back(shot_at("STUCK", 50.0, 0.0, true));

  ArenaCdfTable tables = build_cdf_tables(shots, 5);
  SchuckersAdjusted adj = schuckers_adjust(shots.back(), tables);
  // all mass at one value collapses to cumulative probability 0.5
  CHECK(adj.x == doctest::Approx(70.0).epsilon(1e-12));
}

TEST_CASE("arena matching the road distribution adjusts to identity") {
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 400; ++i) {
    const double x = 30.0 + 0.14 * i;
    const double y = -40.0 + 0.2 * i;
    shots.push_back(shot_at("R1", x, y, false));  // road = league reference
    shots.push_back(shot_at("R1", x, y, true));   // home, same distribution
  }
  ArenaCdfTable tables = build_cdf_tables(shots, 100);
  for (int i = 50; i < 350; i += 7) {
    const ShotRecord& s = shots[2 * i];
    SchuckersAdjusted adj = schuckers_adjust(s, tables);
    CHECK(adj.x == doctest::Approx(s.x_std).epsilon(1e-9));
    CHECK(adj.y == doctest::Approx(s.y_std).epsilon(1e-9));
  }
}

TEST_CASE("under-sampled arena keeps raw coordinates") {
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 200; ++i)
    shots.push_back(shot_at("BIG", 40.0 + 0.2 * i, 0.0, false));
  for (int i = 0; i < 3; ++i) shots.push_back(shot_at("TINY", 77.0, 4.0, true));

  ArenaCdfTable tables = build_cdf_tables(shots, 50);
  CHECK_FALSE(tables.has_adjustment("TINY"));
  SchuckersAdjusted adj = schuckers_adjust(shots.back(), tables);
  CHECK(adj.x == 77.0);
  CHECK(adj.y == 4.0);

  ArenaMeanStats stats = build_arena_stats(shots, 50);
  CHECK(stats.delta("TINY") == 0.0);
  KrzywickiAdjusted k = krzywicki_adjust(shots.back(), stats);
  CHECK(k.dist == compute_geometry(77.0, 4.0).first);
}

TEST_CASE("uniformly shifted arena is unshifted within interpolation error") {
  std::vector<ShotRecord> shots;
  // unbiased league reference: dense uniform road sample at another rink
  for (int i = 0; i < 3000; ++i)
    shots.push_back(shot_at("FAIR", 40.0 + 40.0 * i / 2999.0, 0.0, false));
  // the biased rink records every x three feet further out, home shots only
  for (int i = 0; i < 600; ++i)
    shots.push_back(shot_at("SKEW", 43.0 + 40.0 * i / 599.0, 0.0, true));

  ArenaCdfTable tables = build_cdf_tables(shots, 200);
  for (int i = 60; i < 540; i += 13) {
    const ShotRecord& s = shots[3000 + i];
    SchuckersAdjusted adj = schuckers_adjust(s, tables);
    CHECK(std::fabs(adj.x - (s.x_std - 3.0)) < 0.25);
  }
}

TEST_CASE("quantile mapping preserves within-arena rank order") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> league(62.0, 9.0);
  std::normal_distribution<double> arena(66.0, 12.0);
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 2000; ++i)
    shots.push_back(
        shot_at("A", std::clamp(league(rng), 25.0, 99.0), 0.0, false));
  std::vector<ShotRecord> at_b;
  for (int i = 0; i < 2000; ++i)
    at_b.push_back(shot_at("B", std::clamp(arena(rng), 25.0, 99.0), 0.0, true));
  shots.insert(shots.end(), at_b.begin(), at_b.end());

  ArenaCdfTable tables = build_cdf_tables(shots, 200);
  std::sort(at_b.begin(), at_b.end(),
            [](const ShotRecord& a, const ShotRecord& b) {
              return a.x_std < b.x_std;
            });
  double prev = -1e9;
  for (const ShotRecord& s : at_b) {
    const double adj = schuckers_adjust(s, tables).x;
    CHECK(adj >= prev - 1e-12);
    prev = adj;
  }
}

TEST_CASE("adjusted arena distribution converges to the league road CDF") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> league(60.0, 8.0);
  std::normal_distribution<double> arena(65.0, 11.0);
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 10000; ++i)
    shots.push_back(
        shot_at("A", std::clamp(league(rng), 25.0, 99.0), 0.0, false));
  for (int i = 0; i < 10000; ++i)
    shots.push_back(shot_at("B", std::clamp(arena(rng), 25.0, 99.0), 0.0, true));

  ArenaCdfTable tables = build_cdf_tables(shots, 200);
  std::vector<double> adjusted;
  std::vector<double> road;
  for (const ShotRecord& s : shots) {
    if (s.arena_id == "B")
      adjusted.push_back(schuckers_adjust(s, tables).x);
    else
      road.push_back(s.x_std);
  }
  std::sort(adjusted.begin(), adjusted.end());
  std::sort(road.begin(), road.end());

  // two-sample Kolmogorov-Smirnov statistic
  double ks = 0.0;
  std::size_t ia = 0, ir = 0;
  while (ia < adjusted.size() && ir < road.size()) {
    if (adjusted[ia] <= road[ir])
      ++ia;
    else
      ++ir;
    const double fa = static_cast<double>(ia) / adjusted.size();
    const double fr = static_cast<double>(ir) / road.size();
    ks = std::max(ks, std::fabs(fa - fr));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("mean-distance deltas from hand-sized fixtures") {
  SUBCASE("arena mean equals league road mean") {
    std::vector<ShotRecord> shots = {
        shot_at("A", 89.0 - 20.0, 0.0, true),   // distance 20
        shot_at("A", 89.0 - 30.0, 0.0, true),   // distance 30
        shot_at("B", 89.0 - 25.0, 0.0, false),  // league road mean 25
        shot_at("B", 89.0 - 25.0, 0.0, false),
    };
    ArenaMeanStats stats = build_arena_stats(shots, 2);
    CHECK(stats.arena_mean_dist.at("A") == doctest::Approx(25.0));
    CHECK(stats.league_road_mean_dist == doctest::Approx(25.0));
    CHECK(stats.delta("A") == doctest::Approx(0.0));
  }
  SUBCASE("five-foot excess mean gives delta +5") {
    std::vector<ShotRecord> shots = {
        shot_at("A", 89.0 - 30.0, 0.0, true),
        shot_at("A", 89.0 - 30.0, 0.0, true),
        shot_at("B", 89.0 - 25.0, 0.0, false),
        shot_at("B", 89.0 - 25.0, 0.0, false),
    };
    ArenaMeanStats stats = build_arena_stats(shots, 2);
    CHECK(stats.delta("A") == doctest::Approx(5.0));
  }
}

TEST_CASE("expected-distance subtraction walks the shot ray") {
  std::vector<ShotRecord> shots = {
      shot_at("A", 64.0, 0.0, true),
      shot_at("A", 64.0, 0.0, true),
      shot_at("B", 89.0 - 20.0, 0.0, false),  // road mean 20, arena mean 25
      shot_at("B", 89.0 - 20.0, 0.0, false),
  };
  ArenaMeanStats stats = build_arena_stats(shots, 2);
  REQUIRE(stats.delta("A") == doctest::Approx(5.0));

  SUBCASE("delta 0 leaves everything in place") {
    KrzywickiAdjusted k = krzywicki_adjust(shots[2], stats);
    CHECK(k.dist == doctest::Approx(20.0));
    CHECK(k.x == doctest::Approx(69.0));
    CHECK(k.y == doctest::Approx(0.0));
  }
  SUBCASE("distance 25 at (64, 0) becomes 20 at (69, 0)") {
    KrzywickiAdjusted k = krzywicki_adjust(shots[0], stats);
    CHECK(k.dist == doctest::Approx(20.0));
    CHECK(k.x == doctest::Approx(69.0));
    CHECK(k.y == doctest::Approx(0.0));
  }
  SUBCASE("short shots clamp at the net, never negative") {
    ShotRecord close = shot_at("A", 86.0, 0.0, true);  // distance 3
    KrzywickiAdjusted k = krzywicki_adjust(close, stats);
    CHECK(k.dist == 0.0);
    CHECK(k.x == doctest::Approx(89.0));
    CHECK(k.y == doctest::Approx(0.0));
  }
}

TEST_CASE("expected-distance subtraction preserves the shot angle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> xd(25.0, 88.0);
  std::uniform_real_distribution<double> yd(-42.5, 42.5);
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 300; ++i)
    shots.push_back(shot_at("A", xd(rng), yd(rng), true));
  for (int i = 0; i < 300; ++i)
    shots.push_back(shot_at("B", xd(rng), yd(rng), false));
  ArenaMeanStats stats = build_arena_stats(shots, 100);

  for (int i = 0; i < 300; i += 11) {
    const ShotRecord& s = shots[i];
    KrzywickiAdjusted k = krzywicki_adjust(s, stats);
    CHECK(k.dist >= 0.0);
    if (k.dist > 1e-9) {
      const double raw_angle = compute_geometry(s.x_std, s.y_std).second;
      const double adj_angle = compute_geometry(k.x, k.y).second;
      CHECK(adj_angle == doctest::Approx(raw_angle).epsilon(1e-9));
    }
  }
}

TEST_CASE("adjustments are deterministic given frozen tables") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> xd(25.0, 99.0);
  std::uniform_real_distribution<double> yd(-42.5, 42.5);
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 500; ++i)
    shots.push_back(shot_at(i % 2 ? "A" : "B", xd(rng), yd(rng), i % 3 == 0));
  ArenaCdfTable cdfs = build_cdf_tables(shots, 100);
  ArenaMeanStats stats = build_arena_stats(shots, 100);

  for (const ShotRecord& s : shots) {
    SchuckersAdjusted a1 = schuckers_adjust(s, cdfs);
    SchuckersAdjusted a2 = schuckers_adjust(s, cdfs);
    CHECK(a1.x == a2.x);
    CHECK(a1.y == a2.y);
    CHECK(a1.dist == a2.dist);
    CHECK(a1.angle == a2.angle);
    KrzywickiAdjusted k1 = krzywicki_adjust(s, stats);
    KrzywickiAdjusted k2 = krzywicki_adjust(s, stats);
    CHECK(k1.dist == k2.dist);
    CHECK(k1.x == k2.x);
  }
}

TEST_CASE("frozen tables survive a JSON round trip byte-for-byte") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> xd(25.0, 99.0);
  std::uniform_real_distribution<double> yd(-42.5, 42.5);
  std::vector<ShotRecord> shots;
  for (int i = 0; i < 600; ++i)
    shots.push_back(shot_at(i % 2 ? "A" : "B", xd(rng), yd(rng), i % 3 == 0));
  ArenaCdfTable cdfs = build_cdf_tables(shots, 100);
  ArenaMeanStats stats = build_arena_stats(shots, 100);

  const std::string text = arena_tables_to_json(cdfs, stats);
  auto [cdfs2, stats2] = arena_tables_from_json(text);
  CHECK(arena_tables_to_json(cdfs2, stats2) == text);

  // and the round-tripped tables adjust identically
  for (int i = 0; i < 600; i += 37) {
    SchuckersAdjusted a = schuckers_adjust(shots[i], cdfs);
    SchuckersAdjusted b = schuckers_adjust(shots[i], cdfs2);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
  }
}
