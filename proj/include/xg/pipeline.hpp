#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xg/ingest.hpp"
#include "xg/metrics.hpp"
#include "xg/skill_features.hpp"
#include "xg/tune.hpp"
#include "xg/types.hpp"

namespace xg {

struct SeasonRange {
  int lo = 0;
  int hi = 0;  // inclusive

  bool contains(int season) const { return season >= lo && season <= hi; }
  bool overlaps(const SeasonRange& o) const { return lo <= o.hi && o.lo <= hi; }
  bool within(const SeasonRange& o) const { return lo >= o.lo && hi <= o.hi; }
};

enum class Bracket { Low, Mid, High };

std::string_view to_string(Bracket b);

struct PipelineConfig {
  SeasonRange base_train{2010, 2020};
  SeasonRange skill_span{2012, 2022};
  SeasonRange final_train{2012, 2020};
  SeasonRange test{2021, 2022};

  int k_folds = 5;
  double bracket_cut_low = 0.5;
  double bracket_cut_mid = 0.75;
  Role bracket_key = Role::Shooter;
  std::size_t bracket_min_shots = 20;
  std::size_t arena_min_sample = 200;
  int tuner_budget = 8;
  gbdt::SearchSpace search_space;
  std::uint64_t seed = 17;

  // file-based runs
  std::vector<std::string> event_paths;
  std::string direction_table_path;
  std::string out_dir;
  ApiClientConfig ingest;

  void validate() const;  // throws before any training on a bad split
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::string& path);
  std::string hash() const;  // FNV-1a over the canonical JSON
};

struct PlayerSkill {
  double ratio = 1.0;
  double percentile = 0.5;
  bool qualified = false;
  std::size_t shots = 0;
};

struct BracketAssignment {
  std::map<std::string, PlayerSkill> players;
  std::vector<Bracket> shot_bracket;  // aligned with the shots passed in
};

// Skill ratio from unweighted cumulative sums over training-era history:
// shooters goals/xG, goalies xG/goals. Under-sampled players and zero
// denominators pin to 1.0 and do not enter the percentile ranking. Each shot
// takes its key player's bracket via midrank percentile against the
// qualifying ratios.
BracketAssignment assign_brackets(const std::vector<std::string>& shot_player,
                                  const std::vector<std::string>& hist_player,
                                  const std::vector<double>& hist_xg,
                                  const std::vector<int>& hist_outcome,
                                  Role key_role, std::size_t min_shots,
                                  double cut_low, double cut_mid);

// Learner datasets for the two model families: the 25 Table-1 predictors and
// the 5 skill-model predictors. idx selects and orders the rows.
gbdt::Dataset base_dataset(const std::vector<BaseFeatureRow>& rows,
                           const std::vector<std::size_t>& idx);
gbdt::Dataset sa_dataset(const std::vector<SkillFeatureRow>& rows,
                         const std::vector<std::size_t>& idx);

struct BracketReport {
  Bracket bracket = Bracket::Low;
  std::string percentile_range;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  MetricsBundle baseline;
  MetricsBundle skill_adjusted;
  // normalized gain importance of the skill-adjusted model, descending
  std::vector<std::pair<std::string, double>> sa_importance;
};

struct EvalReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t n_train_shots = 0;
  std::size_t n_test_shots = 0;
  std::vector<BracketReport> brackets;  // high, mid, low

  // row-count-weighted metrics over all brackets' held-out predictions
  MetricsBundle pooled_baseline;
  MetricsBundle pooled_skill_adjusted;
};

struct ArtifactProvenance {
  std::string name;
  std::set<int> seasons;
};

// Everything the no-leakage audit needs: which seasons fed each frozen
// artifact, and the fold bookkeeping behind every training-era xG value.
struct LeakageAudit {
  std::set<int> test_seasons;
  std::vector<ArtifactProvenance> artifacts;
  gbdt::CvPrediction oof;
  std::vector<int> oof_seasons;
};

struct PipelineResult {
  EvalReport report;
  LeakageAudit audit;
};

struct PipelineInputs {
  std::vector<RawEvent> events;
  DirectionTable directions;
};

// The full stacked protocol on in-memory inputs; deterministic given config.
PipelineResult run_stacked_pipeline(const PipelineConfig& config,
                                    const PipelineInputs& inputs);

// File-based wrapper: parses config.event_paths, runs the core, emits the
// report and a config-hash-stamped manifest into config.out_dir.
PipelineResult run_stacked_pipeline(const PipelineConfig& config);

// Writes metrics.csv (4-decimal, Table-5-shaped), one importance_<bracket>.csv
// per bracket, and report.json (full precision + metadata). Returns the
// written paths. Byte-stable for a fixed report.
std::vector<std::string> emit_report(const EvalReport& report,
                                     const std::string& out_dir);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace xg
