#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "xg/skill_features.hpp"
#include "xg/types.hpp"

// Shared fixtures and independent reference implementations. The reference
// code recomputes everything from the written definitions with plain loops;
// it must not call into the library functions it checks.
namespace xg::testsup {

// --- reference: Gower dissimilarity ---
double ref_gower(const GowerSubset& a, const GowerSubset& b,
                 const GowerRanges& ranges);

// --- reference: inverse normalization of a distance vector ---
std::vector<double> ref_inverse_normalize(const std::vector<double>& d);

// --- reference: the skill-feature pair for one side, recomputed naively ---
// Recency weights i/n over the full ledger; locational over the same-bin
// subsequence with fresh weights; situational as recency times inverse-
// normalized Gower similarity; above-expected and talent summed over the
// three variants, goalie signs/reciprocals applied at the end.
struct RefSkillSide {
  double above_expected = 0.0;
  double talent = 0.0;
};
RefSkillSide ref_skill_side(const std::vector<LedgerEntry>& entries, Role role,
                            BinId shot_bin, const GowerSubset& shot_gower,
                            const GowerRanges& ranges);

// --- reference: AUC by pairwise enumeration, ties counted half ---
double ref_auc(const std::vector<double>& preds, const std::vector<int>& labels);

// --- reference: best split gain on one numeric feature ---
// Enumerates every threshold between adjacent distinct values; child values
// are found by scanning the leaf objective g*w + h*w^2/2 + lambda*w^2/2
// numerically, so the gain formula is checked against an independent
// minimization rather than itself.
double ref_best_split_gain(const std::vector<double>& x,
                           const std::vector<double>& g,
                           const std::vector<double>& h, double lambda,
                           int min_leaf);

// --- randomized skill fixtures ---
GowerSubset random_subset(std::mt19937_64& rng);
LedgerEntry random_entry(std::mt19937_64& rng, int serial);
SkillLedger random_ledger(std::size_t n, Role role, std::mt19937_64& rng);

// --- raw-event fixture building ---
struct EventSpec {
  int event_index = 1;
  EventType type = EventType::Shot;
  int period = 1;
  int period_time_s = 0;
  std::string team = "HOME";
  double x = 70.0;
  double y = 5.0;
  std::string shot_type = "Wrist";
  std::string shooter = "S1";
  std::string goalie = "G1";
};

// One game's worth of events with consistent metadata; non-shot specs leave
// the shot-only fields unset.
std::vector<RawEvent> fixture_game(const std::string& game_id,
                                   const std::string& date,
                                   const std::vector<EventSpec>& specs);

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace xg::testsup
