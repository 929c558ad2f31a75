#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xg/types.hpp"

namespace xg {

// Piecewise-linear empirical CDF with midrank plotting positions, and its
// inverse. Built from one sample; quantile(cdf(v)) is the identity on the
// sample range, and a constant sample maps everything through p = 0.5.
class QuantileMap {
 public:
  QuantileMap() = default;
  explicit QuantileMap(std::vector<double> values);

  double cdf(double v) const;
  double quantile(double p) const;
  std::size_t sample_size() const { return n_; }
  bool empty() const { return n_ == 0; }

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& probs() const { return probs_; }
  static QuantileMap from_points(std::vector<double> points,
                                 std::vector<double> probs, std::size_t n);

 private:
  std::vector<double> points_;  // sorted unique sample values
  std::vector<double> probs_;   // midrank probability at each point
  std::size_t n_ = 0;
};

struct AxisCdfs {
  QuantileMap x;
  QuantileMap y;
};

// Per-arena empirical coordinate CDFs over every shot recorded at that
// arena, plus league reference CDFs built from road shots only. Arenas with
// fewer than min_sample shots fall back to the identity adjustment.
struct ArenaCdfTable {
  std::size_t min_sample = 200;
  AxisCdfs league;  // road shots only
  std::map<std::string, AxisCdfs> arenas;

  bool has_adjustment(const std::string& arena_id) const;
};

struct ArenaMeanStats {
  std::size_t min_sample = 200;
  double league_road_mean_dist = 0.0;
  // arena mean recorded shot distance; keyed by arena_id
  std::map<std::string, double> arena_mean_dist;
  std::map<std::string, std::size_t> arena_counts;

  // arena mean minus league road mean; 0 for unknown or under-sampled arenas
  double delta(const std::string& arena_id) const;
};

inline constexpr std::size_t kDefaultArenaMinSample = 200;

ArenaCdfTable build_cdf_tables(const std::vector<ShotRecord>& shots,
                               std::size_t min_sample = kDefaultArenaMinSample);

ArenaMeanStats build_arena_stats(const std::vector<ShotRecord>& shots,
                                 std::size_t min_sample = kDefaultArenaMinSample);

struct SchuckersAdjusted {
  double x = 0.0;
  double y = 0.0;
  double dist = 0.0;
  double angle = 0.0;
};

struct KrzywickiAdjusted {
  double x = 0.0;
  double y = 0.0;
  double dist = 0.0;
};

// Quantile-maps each axis through the arena CDF into the league road CDF,
// clamps to the rink, and recomputes distance/angle. Unknown and
// under-sampled arenas pass through unchanged.
SchuckersAdjusted schuckers_adjust(const ShotRecord& shot,
                                   const ArenaCdfTable& tables);

// Subtracts the arena's expected-distance delta along the ray from the net
// through the shot; never negative, net-coincident shots stay at the net.
KrzywickiAdjusted krzywicki_adjust(const ShotRecord& shot,
                                   const ArenaMeanStats& stats);

// JSON round-trip for frozen tables (sorted keys, reproducible byte-wise).
std::string arena_tables_to_json(const ArenaCdfTable& cdfs,
                                 const ArenaMeanStats& stats);
std::pair<ArenaCdfTable, ArenaMeanStats> arena_tables_from_json(
    const std::string& text);

}  // namespace xg
