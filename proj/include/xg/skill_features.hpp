#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xg/base_features.hpp"
#include "xg/types.hpp"

namespace xg {

// Nine equal cells tiling x in [25, 89], y in [-42.5, 42.5], numbered from
// the low corner with x varying fastest, plus one cell past the goal line.
enum class BinId : std::uint8_t {
  B1 = 1,
  B2,
  B3,
  B4,
  B5,
  B6,
  B7,
  B8,
  B9,
  BelowGoalLine,
};

std::string_view to_string(BinId b);

// Requires x_std >= 25 (cleaned-shot domain). Boundary points belong to the
// higher cell, clamped at the outer maximum; x > 89 is BelowGoalLine.
BinId bin_of(double x_std, double y_std);

// w_i = i/n, oldest first, newest exactly 1.0.
std::vector<double> linear_weights(std::size_t n);

// The similarity subset: four venue-adjusted numerics plus five
// categorical/boolean features. Empty optionals are missing and drop out of
// the Gower mean.
struct GowerSubset {
  std::optional<bool> is_strong_side;
  std::optional<std::string> last_event;
  std::optional<std::string> shot_type;
  std::optional<double> schuckers_x;
  std::optional<double> schuckers_y;
  std::optional<double> schuckers_dist;
  std::optional<double> schuckers_angle;
  std::optional<bool> rebound;
  std::optional<bool> fastbreak;
};

GowerSubset gower_subset_of(const BaseFeatureRow& row);

// Global per-numeric-feature ranges, frozen from the training-era corpus.
struct GowerRanges {
  double schuckers_x = 1.0;
  double schuckers_y = 1.0;
  double schuckers_dist = 1.0;
  double schuckers_angle = 1.0;
};

GowerRanges compute_gower_ranges(const std::vector<GowerSubset>& subsets);

// Mean per-feature dissimilarity in [0,1]. Numerics contribute
// |a-b|/range clamped to [0,1]; categoricals contribute 0/1. Features
// missing on either side are excluded from the mean; throws if nothing
// remains.
double gower_distance(const GowerSubset& a, const GowerSubset& b,
                      const GowerRanges& ranges);

// w_i = 1 - (d_i - d_min)/(d_max - d_min); all-equal input maps to all 1.
std::vector<double> inverse_normalize(const std::vector<double>& distances);

enum class Role { Shooter, Goalie };

struct WeightedEntry {
  double weight = 0.0;
  double xg = 0.0;
  double outcome = 0.0;
};

// Shooter: sum w*outcome - sum w*xg. Goalie: the negation. Empty -> 0.
double above_expected(const std::vector<WeightedEntry>& entries, Role role);

// Shooter: sum(w*outcome)/sum(w*xg); goalie the reciprocal orientation.
// Empty history or a zero denominator -> 0.
double talent(const std::vector<WeightedEntry>& entries, Role role);

struct LedgerEntry {
  std::string game_date;
  std::string game_id;
  int event_index = 0;
  double xg = 0.0;
  int outcome = 0;
  BinId bin = BinId::B1;
  GowerSubset gower;
};

// Chronologically ordered per-player shot history. Entries visible to a
// given shot must come from strictly earlier games.
struct SkillLedger {
  std::string player_id;
  Role role = Role::Shooter;
  std::vector<LedgerEntry> entries;

  void append(LedgerEntry e);
};

// The Table 4 predictors plus outcome, with join identity.
struct SkillFeatureRow {
  int season = 0;
  std::string game_id;
  std::string game_date;
  int event_index = 0;
  std::string shooter_id;
  std::string goalie_id;

  double true_gax_shooter = 0.0;
  double true_talent_shooter = 0.0;
  double true_gsax_goalie = 0.0;
  double true_talent_goalie = 0.0;
  double xg_base = 0.0;
  int outcome = 0;
};

// One statistic pair (above-expected, talent) summed over the total,
// locational, and situational variants.
struct SkillSide {
  double true_above_expected = 0.0;
  double true_talent = 0.0;
};

// Computes the three-variant sums for one side. shot_bin/shot_gower describe
// the shot being featurized; the ledger must hold only prior-game entries.
SkillSide skill_side(const SkillLedger& ledger, Role role, BinId shot_bin,
                     const GowerSubset& shot_gower, const GowerRanges& ranges);

SkillFeatureRow build_skill_row(const BaseFeatureRow& shot, double xg_base,
                                const SkillLedger& shooter_ledger,
                                const SkillLedger& goalie_ledger,
                                const GowerRanges& ranges);

// Batch construction over a chronologically usable corpus. rows/xg must be
// index-aligned; rows are grouped per player and per game internally so each
// shot sees only strictly earlier games. Only shots with `featurize[i]` true
// produce output rows (all shots still feed ledgers). Players are processed
// in parallel.
std::vector<SkillFeatureRow> build_skill_rows(
    const std::vector<BaseFeatureRow>& rows, const std::vector<double>& xg,
    const std::vector<bool>& featurize, const GowerRanges& ranges);

}  // namespace xg
