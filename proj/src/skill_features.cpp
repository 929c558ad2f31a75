#include "xg/skill_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/core.h>

#include "xg/parallel.hpp"

namespace xg {

std::string_view to_string(BinId b) {
  switch (b) {
    case BinId::B1: return "B1";
    case BinId::B2: return "B2";
    case BinId::B3: return "B3";
    case BinId::B4: return "B4";
    case BinId::B5: return "B5";
    case BinId::B6: return "B6";
    case BinId::B7: return "B7";
    case BinId::B8: return "B8";
    case BinId::B9: return "B9";
    case BinId::BelowGoalLine: break;
  }
  return "BelowGoalLine";
}

BinId bin_of(double x_std, double y_std) {
  if (x_std < rink::kBlueLineX)
    throw Error(fmt::format("bin_of: x_std {} outside the cleaned domain",
                            x_std));
  if (x_std > rink::kGoalLineX) return BinId::BelowGoalLine;
  const double cell_w = (rink::kGoalLineX - rink::kBlueLineX) / 3.0;
  const double cell_h = 2.0 * rink::kHalfWidth / 3.0;
  const int col = std::min(
      2, static_cast<int>(std::floor((x_std - rink::kBlueLineX) / cell_w)));
  const int row = std::min(
      2, static_cast<int>(std::floor((y_std + rink::kHalfWidth) / cell_h)));
  return static_cast<BinId>(3 * row + col + 1);
}

std::vector<double> linear_weights(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return w;
}

GowerSubset gower_subset_of(const BaseFeatureRow& row) {
  GowerSubset g;
  g.is_strong_side = row.is_strong_side;
  g.last_event = row.last_event;
  g.shot_type = row.shot_type;
  g.schuckers_x = row.schuckers_x;
  g.schuckers_y = row.schuckers_y;
  g.schuckers_dist = row.schuckers_dist;
  g.schuckers_angle = row.schuckers_angle;
  g.rebound = row.rebound;
  g.fastbreak = row.fastbreak;
  return g;
}

namespace {

double range_of(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  return range > 0.0 ? range : 1.0;
}

}  // namespace

GowerRanges compute_gower_ranges(const std::vector<GowerSubset>& subsets) {
  std::vector<double> xs, ys, dists, angles;
  for (const GowerSubset& g : subsets) {
    if (g.schuckers_x) xs.push_back(*g.schuckers_x);
    if (g.schuckers_y) ys.push_back(*g.schuckers_y);
    if (g.schuckers_dist) dists.push_back(*g.schuckers_dist);
    if (g.schuckers_angle) angles.push_back(*g.schuckers_angle);
  }
  GowerRanges r;
  r.schuckers_x = range_of(xs);
  r.schuckers_y = range_of(ys);
  r.schuckers_dist = range_of(dists);
  r.schuckers_angle = range_of(angles);
  return r;
}

double gower_distance(const GowerSubset& a, const GowerSubset& b,
                      const GowerRanges& ranges) {
  double sum = 0.0;
  int count = 0;

  auto numeric = [&](const std::optional<double>& x,
                     const std::optional<double>& y, double range) {
    if (!x || !y) return;
    sum += std::min(1.0, std::fabs(*x - *y) / range);
    ++count;
  };
  auto categorical = [&](const auto& x, const auto& y) {
    if (!x || !y) return;
    sum += *x == *y ? 0.0 : 1.0;
    ++count;
  };

  categorical(a.is_strong_side, b.is_strong_side);
  categorical(a.last_event, b.last_event);
  categorical(a.shot_type, b.shot_type);
  numeric(a.schuckers_x, b.schuckers_x, ranges.schuckers_x);
  numeric(a.schuckers_y, b.schuckers_y, ranges.schuckers_y);
  numeric(a.schuckers_dist, b.schuckers_dist, ranges.schuckers_dist);
  numeric(a.schuckers_angle, b.schuckers_angle, ranges.schuckers_angle);
  categorical(a.rebound, b.rebound);
  categorical(a.fastbreak, b.fastbreak);

  if (count == 0) throw Error("gower distance undefined: all features missing");
  return sum / static_cast<double>(count);
}

std::vector<double> inverse_normalize(const std::vector<double>& distances) {
  if (distances.empty()) return {};
  const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
  const double range = *hi - *lo;
  std::vector<double> w(distances.size(), 1.0);
  if (range == 0.0) return w;
  for (std::size_t i = 0; i < distances.size(); ++i)
    w[i] = 1.0 - (distances[i] - *lo) / range;
  return w;
}

double above_expected(const std::vector<WeightedEntry>& entries, Role role) {
  double outcome_sum = 0.0;
  double xg_sum = 0.0;
  for (const WeightedEntry& e : entries) {
    outcome_sum += e.weight * e.outcome;
    xg_sum += e.weight * e.xg;
  }
  const double shooter_value = outcome_sum - xg_sum;
  return role == Role::Shooter ? shooter_value : -shooter_value;
}

double talent(const std::vector<WeightedEntry>& entries, Role role) {
  double outcome_sum = 0.0;
  double xg_sum = 0.0;
  for (const WeightedEntry& e : entries) {
    outcome_sum += e.weight * e.outcome;
    xg_sum += e.weight * e.xg;
  }
  const double num = role == Role::Shooter ? outcome_sum : xg_sum;
  const double den = role == Role::Shooter ? xg_sum : outcome_sum;
  if (den == 0.0) return 0.0;
  return num / den;
}

namespace {

std::tuple<std::string_view, std::string_view, int> entry_key(
    const LedgerEntry& e) {
  return {e.game_date, e.game_id, e.event_index};
}

void validate_ledger(const SkillLedger& ledger) {
  for (std::size_t i = 1; i < ledger.entries.size(); ++i) {
    if (!(entry_key(ledger.entries[i - 1]) < entry_key(ledger.entries[i])))
      throw Error(fmt::format("ledger for {} not strictly ordered at entry {}",
                              ledger.player_id, i));
  }
}

}  // namespace

void SkillLedger::append(LedgerEntry e) {
  if (!(e.xg > 0.0 && e.xg < 1.0))
    throw Error(fmt::format("ledger xg {} outside (0,1)", e.xg));
  if (!entries.empty() && !(entry_key(entries.back()) < entry_key(e)))
    throw Error(fmt::format("ledger for {} not strictly ordered on append",
                            player_id));
  entries.push_back(std::move(e));
}

SkillSide skill_side(const SkillLedger& ledger, Role role, BinId shot_bin,
                     const GowerSubset& shot_gower, const GowerRanges& ranges) {
  const std::size_t n = ledger.entries.size();
  SkillSide side;
  if (n == 0) return side;

  const std::vector<double> recency = linear_weights(n);

  std::vector<WeightedEntry> total(n);
  for (std::size_t i = 0; i < n; ++i)
    total[i] = {recency[i], ledger.entries[i].xg,
                static_cast<double>(ledger.entries[i].outcome)};

  // locational: recency weights recomputed over the same-bin subsequence
  std::vector<const LedgerEntry*> in_bin;
  for (const LedgerEntry& e : ledger.entries)
    if (e.bin == shot_bin) in_bin.push_back(&e);
  std::vector<WeightedEntry> locational(in_bin.size());
  const std::vector<double> bin_recency = linear_weights(in_bin.size());
  for (std::size_t i = 0; i < in_bin.size(); ++i)
    locational[i] = {bin_recency[i], in_bin[i]->xg,
                     static_cast<double>(in_bin[i]->outcome)};

  // situational: recency times inverse-normalized Gower similarity
  std::vector<double> distances(n);
  for (std::size_t i = 0; i < n; ++i)
    distances[i] = gower_distance(ledger.entries[i].gower, shot_gower, ranges);
  const std::vector<double> gower_w = inverse_normalize(distances);
  std::vector<WeightedEntry> situational(n);
  for (std::size_t i = 0; i < n; ++i)
    situational[i] = {recency[i] * gower_w[i], ledger.entries[i].xg,
                      static_cast<double>(ledger.entries[i].outcome)};

  side.true_above_expected = above_expected(total, role) +
                             above_expected(locational, role) +
                             above_expected(situational, role);
  side.true_talent =
      talent(total, role) + talent(locational, role) + talent(situational, role);
  return side;
}

SkillFeatureRow build_skill_row(const BaseFeatureRow& shot, double xg_base,
                                const SkillLedger& shooter_ledger,
                                const SkillLedger& goalie_ledger,
                                const GowerRanges& ranges) {
  validate_ledger(shooter_ledger);
  validate_ledger(goalie_ledger);
  const auto shot_game = std::make_tuple(std::string_view(shot.game_date),
                                         std::string_view(shot.game_id));
  for (const SkillLedger* ledger : {&shooter_ledger, &goalie_ledger}) {
    if (!ledger->entries.empty()) {
      const LedgerEntry& last = ledger->entries.back();
      if (!(std::make_tuple(std::string_view(last.game_date),
                            std::string_view(last.game_id)) < shot_game))
        throw Error(fmt::format(
            "ledger for {} includes game {} not strictly before shot game {}",
            ledger->player_id, last.game_id, shot.game_id));
    }
  }

  const BinId bin = bin_of(shot.x, shot.y);
  const GowerSubset gower = gower_subset_of(shot);

  const SkillSide shooter =
      skill_side(shooter_ledger, Role::Shooter, bin, gower, ranges);
  const SkillSide goalie =
      skill_side(goalie_ledger, Role::Goalie, bin, gower, ranges);

  SkillFeatureRow r;
  r.season = shot.season;
  r.game_id = shot.game_id;
  r.game_date = shot.game_date;
  r.event_index = shot.event_index;
  r.shooter_id = shot.shooter_id;
  r.goalie_id = shot.goalie_id;
  r.true_gax_shooter = shooter.true_above_expected;
  r.true_talent_shooter = shooter.true_talent;
  r.true_gsax_goalie = goalie.true_above_expected;
  r.true_talent_goalie = goalie.true_talent;
  r.xg_base = xg_base;
  r.outcome = shot.outcome;
  return r;
}

std::vector<SkillFeatureRow> build_skill_rows(
    const std::vector<BaseFeatureRow>& rows, const std::vector<double>& xg,
    const std::vector<bool>& featurize, const GowerRanges& ranges) {
  if (rows.size() != xg.size() || rows.size() != featurize.size())
    throw Error("build_skill_rows: rows/xg/featurize size mismatch");
  const std::size_t n = rows.size();

  // everything that can throw is checked before the parallel passes
  std::vector<BinId> bins(n);
  std::vector<GowerSubset> subsets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xg[i] > 0.0 && xg[i] < 1.0))
      throw Error(fmt::format("xg {} outside (0,1) at row {}", xg[i], i));
    bins[i] = bin_of(rows[i].x, rows[i].y);
    subsets[i] = gower_subset_of(rows[i]);
  }

  struct PlayerShots {
    std::string player_id;
    std::vector<std::size_t> indices;  // chronological
  };
  auto group_by = [&](bool shooter_role) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i)
      groups[shooter_role ? rows[i].shooter_id : rows[i].goalie_id].push_back(i);
    std::vector<PlayerShots> out;
    out.reserve(groups.size());
    for (auto& [player_id, indices] : groups) {
      std::sort(indices.begin(), indices.end(),
                [&](std::size_t a, std::size_t b) {
                  return ChronoKey{rows[a].game_date, rows[a].game_id,
                                   rows[a].event_index} <
                         ChronoKey{rows[b].game_date, rows[b].game_id,
                                   rows[b].event_index};
                });
      for (std::size_t k = 1; k < indices.size(); ++k) {
        const BaseFeatureRow& a = rows[indices[k - 1]];
        const BaseFeatureRow& b = rows[indices[k]];
        if (a.game_id == b.game_id && a.game_date == b.game_date &&
            a.event_index == b.event_index)
          throw Error(fmt::format("duplicate shot for {} in game {} at event {}",
                                  player_id, b.game_id, b.event_index));
      }
      out.push_back({player_id, std::move(indices)});
    }
    return out;
  };

  std::vector<SkillSide> shooter_sides(n);
  std::vector<SkillSide> goalie_sides(n);

  auto run_role = [&](Role role, std::vector<SkillSide>& sides) {
    const std::vector<PlayerShots> players = group_by(role == Role::Shooter);
    parallel_for(static_cast<std::ptrdiff_t>(players.size()),
                 [&](std::ptrdiff_t p) {
      const PlayerShots& ps = players[static_cast<std::size_t>(p)];
      SkillLedger ledger;
      ledger.player_id = ps.player_id;
      ledger.role = role;
      // walk game by game: featurize against the ledger before appending the
      // game's own shots, so entries come from strictly earlier games only
      std::size_t g = 0;
      while (g < ps.indices.size()) {
        std::size_t g_end = g;
        while (g_end < ps.indices.size() &&
               rows[ps.indices[g_end]].game_id == rows[ps.indices[g]].game_id &&
               rows[ps.indices[g_end]].game_date == rows[ps.indices[g]].game_date)
          ++g_end;
        for (std::size_t k = g; k < g_end; ++k) {
          const std::size_t i = ps.indices[k];
          if (featurize[i])
            sides[i] = skill_side(ledger, role, bins[i], subsets[i], ranges);
        }
        for (std::size_t k = g; k < g_end; ++k) {
          const std::size_t i = ps.indices[k];
          ledger.append(LedgerEntry{rows[i].game_date, rows[i].game_id,
                                    rows[i].event_index, xg[i],
                                    rows[i].outcome, bins[i], subsets[i]});
        }
        g = g_end;
      }
    });
  };
  run_role(Role::Shooter, shooter_sides);
  run_role(Role::Goalie, goalie_sides);

  std::vector<SkillFeatureRow> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!featurize[i]) continue;
    SkillFeatureRow r;
    r.season = rows[i].season;
    r.game_id = rows[i].game_id;
    r.game_date = rows[i].game_date;
    r.event_index = rows[i].event_index;
    r.shooter_id = rows[i].shooter_id;
    r.goalie_id = rows[i].goalie_id;
    r.true_gax_shooter = shooter_sides[i].true_above_expected;
    r.true_talent_shooter = shooter_sides[i].true_talent;
    r.true_gsax_goalie = goalie_sides[i].true_above_expected;
    r.true_talent_goalie = goalie_sides[i].true_talent;
    r.xg_base = xg[i];
    r.outcome = rows[i].outcome;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace xg
