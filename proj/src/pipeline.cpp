#include "xg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include <fmt/core.h>
#include <json.hpp>

#include "xg/arena_adjust.hpp"
#include "xg/base_features.hpp"
#include "xg/io.hpp"
#include "xg/log.hpp"
#include "xg/skill_features.hpp"

namespace xg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Bracket b) {
  switch (b) {
    case Bracket::Low:
      return "low";
    case Bracket::Mid:
      return "mid";
    case Bracket::High:
      return "high";
  }
  return "low";
}

void PipelineConfig::validate() const {
  auto check_range = [](const SeasonRange& r, const char* name) {
    if (r.lo > r.hi)
      throw Error(fmt::format("{} range [{}, {}] is inverted", name, r.lo, r.hi));
  };
  check_range(base_train, "base_train");
  check_range(skill_span, "skill_span");
  check_range(final_train, "final_train");
  check_range(test, "test");
  if (test.overlaps(base_train))
    throw Error("test seasons overlap base_train");
  if (test.overlaps(final_train))
    throw Error("test seasons overlap final_train");
  for (int s = skill_span.lo; s <= skill_span.hi; ++s)
    if (!base_train.contains(s) && !test.contains(s))
      throw Error(fmt::format(
          "skill_span season {} has no base xG coverage", s));
  if (!final_train.within(skill_span))
    throw Error("final_train must lie within skill_span");
  if (!test.within(skill_span))
    throw Error("test must lie within skill_span");
  if (!final_train.within(base_train))
    throw Error("final_train must lie within base_train");
  if (k_folds < 2) throw Error("k_folds must be at least 2");
  if (!(bracket_cut_low > 0.0 && bracket_cut_low < bracket_cut_mid &&
        bracket_cut_mid < 1.0))
    throw Error("bracket cuts must satisfy 0 < low < mid < 1");
  if (bracket_min_shots < 1) throw Error("bracket_min_shots must be positive");
  if (tuner_budget < 1) throw Error("tuner_budget must be positive");
  search_space.validate();
}

namespace {

json range_to_json(const SeasonRange& r) { return json::array({r.lo, r.hi}); }

SeasonRange range_from_json(const json& j) {
  return SeasonRange{j.at(0).get<int>(), j.at(1).get<int>()};
}

json space_to_json(const gbdt::SearchSpace& s) {
  json j;
  j["learning_rate"] = json::array({s.learning_rate_lo, s.learning_rate_hi});
  j["num_leaves"] = json::array({s.num_leaves_lo, s.num_leaves_hi});
  j["max_depth"] = json::array({s.max_depth_lo, s.max_depth_hi});
  j["min_data_in_leaf"] =
      json::array({s.min_data_in_leaf_lo, s.min_data_in_leaf_hi});
  j["l2_lambda"] = json::array({s.l2_lambda_lo, s.l2_lambda_hi});
  j["feature_fraction"] =
      json::array({s.feature_fraction_lo, s.feature_fraction_hi});
  j["bagging_fraction"] =
      json::array({s.bagging_fraction_lo, s.bagging_fraction_hi});
  j["max_n_estimators"] = s.max_n_estimators;
  j["early_stopping_rounds"] = s.early_stopping_rounds;
  j["max_bins"] = s.max_bins;
  return j;
}

gbdt::SearchSpace space_from_json(const json& j) {
  gbdt::SearchSpace s;
  auto pair = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    lo = j.at(key).at(0).get<std::decay_t<decltype(lo)>>();
    hi = j.at(key).at(1).get<std::decay_t<decltype(hi)>>();
  };
  pair("learning_rate", s.learning_rate_lo, s.learning_rate_hi);
  pair("num_leaves", s.num_leaves_lo, s.num_leaves_hi);
  pair("max_depth", s.max_depth_lo, s.max_depth_hi);
  pair("min_data_in_leaf", s.min_data_in_leaf_lo, s.min_data_in_leaf_hi);
  pair("l2_lambda", s.l2_lambda_lo, s.l2_lambda_hi);
  pair("feature_fraction", s.feature_fraction_lo, s.feature_fraction_hi);
  pair("bagging_fraction", s.bagging_fraction_lo, s.bagging_fraction_hi);
  s.max_n_estimators = j.value("max_n_estimators", s.max_n_estimators);
  s.early_stopping_rounds =
      j.value("early_stopping_rounds", s.early_stopping_rounds);
  s.max_bins = j.value("max_bins", s.max_bins);
  return s;
}

}  // namespace

std::string PipelineConfig::to_json() const {
  json j;
  j["base_train"] = range_to_json(base_train);
  j["skill_span"] = range_to_json(skill_span);
  j["final_train"] = range_to_json(final_train);
  j["test"] = range_to_json(test);
  j["k_folds"] = k_folds;
  j["bracket_cut_low"] = bracket_cut_low;
  j["bracket_cut_mid"] = bracket_cut_mid;
  j["bracket_key"] = bracket_key == Role::Shooter ? "shooter" : "goalie";
  j["bracket_min_shots"] = bracket_min_shots;
  j["arena_min_sample"] = arena_min_sample;
  j["tuner_budget"] = tuner_budget;
  j["search_space"] = space_to_json(search_space);
  j["seed"] = seed;
  j["event_paths"] = event_paths;
  j["direction_table_path"] = direction_table_path;
  j["out_dir"] = out_dir;
  json ingest_json;
  ingest_json["api_base"] = ingest.api_base;
  ingest_json["cache_dir"] = ingest.cache_dir;
  ingest_json["fixtures"] = ingest.fixture_dir;
  j["ingest"] = std::move(ingest_json);
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  PipelineConfig c;
  if (j.contains("base_train")) c.base_train = range_from_json(j.at("base_train"));
  if (j.contains("skill_span")) c.skill_span = range_from_json(j.at("skill_span"));
  if (j.contains("final_train"))
    c.final_train = range_from_json(j.at("final_train"));
  if (j.contains("test")) c.test = range_from_json(j.at("test"));
  c.k_folds = j.value("k_folds", c.k_folds);
  c.bracket_cut_low = j.value("bracket_cut_low", c.bracket_cut_low);
  c.bracket_cut_mid = j.value("bracket_cut_mid", c.bracket_cut_mid);
  if (j.contains("bracket_key")) {
    const std::string key = j.at("bracket_key").get<std::string>();
    if (key == "shooter")
      c.bracket_key = Role::Shooter;
    else if (key == "goalie")
      c.bracket_key = Role::Goalie;
    else
      throw Error(fmt::format("unknown bracket_key {}", key));
  }
  c.bracket_min_shots = j.value("bracket_min_shots", c.bracket_min_shots);
  c.arena_min_sample = j.value("arena_min_sample", c.arena_min_sample);
  c.tuner_budget = j.value("tuner_budget", c.tuner_budget);
  if (j.contains("search_space"))
    c.search_space = space_from_json(j.at("search_space"));
  c.seed = j.value("seed", c.seed);
  c.event_paths = j.value("event_paths", c.event_paths);
  c.direction_table_path =
      j.value("direction_table_path", c.direction_table_path);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("ingest")) {
    const json& ij = j.at("ingest");
    c.ingest.api_base = ij.value("api_base", c.ingest.api_base);
    c.ingest.cache_dir = ij.value("cache_dir", c.ingest.cache_dir);
    c.ingest.fixture_dir = ij.value("fixtures", c.ingest.fixture_dir);
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return from_json(io::read_file(path));
}

std::string PipelineConfig::hash() const {
  const std::string canon = to_json();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

BracketAssignment assign_brackets(const std::vector<std::string>& shot_player,
                                  const std::vector<std::string>& hist_player,
                                  const std::vector<double>& hist_xg,
                                  const std::vector<int>& hist_outcome,
                                  Role key_role, std::size_t min_shots,
                                  double cut_low, double cut_mid) {
  if (hist_player.size() != hist_xg.size() ||
      hist_player.size() != hist_outcome.size())
    throw Error("history arrays misaligned");

  struct Tally {
    double xg = 0.0;
    double goals = 0.0;
    std::size_t shots = 0;
  };
  std::map<std::string, Tally> tallies;
  for (std::size_t i = 0; i < hist_player.size(); ++i) {
    Tally& t = tallies[hist_player[i]];
    t.xg += hist_xg[i];
    t.goals += static_cast<double>(hist_outcome[i]);
    t.shots += 1;
  }

  BracketAssignment out;
  std::vector<double> qualifying;
  for (const auto& [player, t] : tallies) {
    PlayerSkill skill;
    skill.shots = t.shots;
    const double num = key_role == Role::Shooter ? t.goals : t.xg;
    const double den = key_role == Role::Shooter ? t.xg : t.goals;
    if (t.shots >= min_shots && den > 0.0) {
      skill.ratio = num / den;
      skill.qualified = true;
      qualifying.push_back(skill.ratio);
    }
    out.players[player] = skill;
  }
  if (qualifying.empty()) throw Error("no qualifying players for brackets");
  std::sort(qualifying.begin(), qualifying.end());

  // midrank percentile of a ratio against the qualifying distribution
  auto percentile_of = [&](double ratio) {
    const auto lo = std::lower_bound(qualifying.begin(), qualifying.end(), ratio);
    const auto hi = std::upper_bound(qualifying.begin(), qualifying.end(), ratio);
    const double below = static_cast<double>(lo - qualifying.begin());
    const double equal = static_cast<double>(hi - lo);
    return (below + 0.5 * equal) / static_cast<double>(qualifying.size());
  };

  for (auto& [player, skill] : out.players)
    skill.percentile = percentile_of(skill.ratio);

  auto bracket_of = [&](double p) {
    if (p <= cut_low) return Bracket::Low;
    if (p <= cut_mid) return Bracket::Mid;
    return Bracket::High;
  };

  const double default_percentile = percentile_of(1.0);
  out.shot_bracket.reserve(shot_player.size());
  for (const std::string& player : shot_player) {
    const auto it = out.players.find(player);
    if (it == out.players.end()) {
      PlayerSkill skill;
      skill.percentile = default_percentile;
      out.players[player] = skill;
      out.shot_bracket.push_back(bracket_of(default_percentile));
    } else {
      out.shot_bracket.push_back(bracket_of(it->second.percentile));
    }
  }
  return out;
}

namespace {

std::string categorical_or_missing(const std::optional<std::string>& v) {
  return v ? *v : std::string("missing");
}

std::string bool_categorical(bool v) { return v ? "true" : "false"; }

std::string bool_categorical(const std::optional<bool>& v) {
  return v ? bool_categorical(*v) : std::string("missing");
}

double numeric_or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

// Table 1 predictors; missing categoricals become an explicit "missing"
// category, missing numerics stay NaN for the learner's missing routing.
gbdt::Dataset base_dataset(const std::vector<BaseFeatureRow>& rows,
                           const std::vector<std::size_t>& idx) {
  gbdt::Dataset ds;
  auto numeric = [&](const char* name, auto&& get) {
    gbdt::Column c;
    c.name = name;
    c.kind = gbdt::FeatureKind::Numeric;
    c.numeric.reserve(idx.size());
    for (std::size_t i : idx) c.numeric.push_back(get(rows[i]));
    ds.columns.push_back(std::move(c));
  };
  auto categorical = [&](const char* name, auto&& get) {
    gbdt::Column c;
    c.name = name;
    c.kind = gbdt::FeatureKind::Categorical;
    c.categorical.reserve(idx.size());
    for (std::size_t i : idx) c.categorical.push_back(get(rows[i]));
    ds.columns.push_back(std::move(c));
  };

  categorical("isStrongSide",
              [](const BaseFeatureRow& r) { return bool_categorical(r.is_strong_side); });
  numeric("x", [](const BaseFeatureRow& r) { return r.x; });
  numeric("y", [](const BaseFeatureRow& r) { return r.y; });
  numeric("GameTime", [](const BaseFeatureRow& r) { return r.game_time; });
  numeric("PeriodTime", [](const BaseFeatureRow& r) { return r.period_time; });
  numeric("Distance", [](const BaseFeatureRow& r) { return r.distance; });
  numeric("Angle", [](const BaseFeatureRow& r) { return r.angle; });
  categorical("ShotType", [](const BaseFeatureRow& r) { return r.shot_type; });
  numeric("GoalDiff",
          [](const BaseFeatureRow& r) { return static_cast<double>(r.goal_diff); });
  categorical("LastEvent", [](const BaseFeatureRow& r) {
    return categorical_or_missing(r.last_event);
  });
  numeric("LastEventDistance",
          [](const BaseFeatureRow& r) { return numeric_or_nan(r.last_event_distance); });
  categorical("LastEventZone", [](const BaseFeatureRow& r) {
    return r.last_event_zone ? std::string(to_string(*r.last_event_zone))
                             : std::string("missing");
  });
  numeric("LastEventAngle",
          [](const BaseFeatureRow& r) { return numeric_or_nan(r.last_event_angle); });
  numeric("LastEventSpeed",
          [](const BaseFeatureRow& r) { return numeric_or_nan(r.last_event_speed); });
  numeric("TimeSinceLastEvent", [](const BaseFeatureRow& r) {
    return numeric_or_nan(r.time_since_last_event);
  });
  categorical("Rebound",
              [](const BaseFeatureRow& r) { return bool_categorical(r.rebound); });
  numeric("FlurryCount",
          [](const BaseFeatureRow& r) { return static_cast<double>(r.flurry_count); });
  categorical("Fastbreak",
              [](const BaseFeatureRow& r) { return bool_categorical(r.fastbreak); });
  numeric("krzywickiX", [](const BaseFeatureRow& r) { return r.krzywicki_x; });
  numeric("krzywickiY", [](const BaseFeatureRow& r) { return r.krzywicki_y; });
  numeric("krzywickiDist", [](const BaseFeatureRow& r) { return r.krzywicki_dist; });
  numeric("SchuckersX", [](const BaseFeatureRow& r) { return r.schuckers_x; });
  numeric("SchuckersY", [](const BaseFeatureRow& r) { return r.schuckers_y; });
  numeric("SchuckersDist", [](const BaseFeatureRow& r) { return r.schuckers_dist; });
  numeric("SchuckersAngle", [](const BaseFeatureRow& r) { return r.schuckers_angle; });
  return ds;
}

gbdt::Dataset sa_dataset(const std::vector<SkillFeatureRow>& rows,
                         const std::vector<std::size_t>& idx) {
  gbdt::Dataset ds;
  auto numeric = [&](const char* name, auto&& get) {
    gbdt::Column c;
    c.name = name;
    c.kind = gbdt::FeatureKind::Numeric;
    c.numeric.reserve(idx.size());
    for (std::size_t i : idx) c.numeric.push_back(get(rows[i]));
    ds.columns.push_back(std::move(c));
  };
  numeric("true_gax_shooter",
          [](const SkillFeatureRow& r) { return r.true_gax_shooter; });
  numeric("true_talent_shooter",
          [](const SkillFeatureRow& r) { return r.true_talent_shooter; });
  numeric("true_gsax_goalie",
          [](const SkillFeatureRow& r) { return r.true_gsax_goalie; });
  numeric("true_talent_goalie",
          [](const SkillFeatureRow& r) { return r.true_talent_goalie; });
  numeric("xg_base", [](const SkillFeatureRow& r) { return r.xg_base; });
  return ds;
}

namespace {

std::set<int> seasons_of(const std::vector<ShotRecord>& shots,
                         const std::vector<std::size_t>& idx) {
  std::set<int> out;
  for (std::size_t i : idx) out.insert(shots[i].season);
  return out;
}

json metrics_to_json(const MetricsBundle& m) {
  json j;
  j["log_loss"] = m.log_loss;
  j["auc"] = m.auc;
  j["brier"] = m.brier;
  return j;
}

MetricsBundle metrics_from_json(const json& j) {
  MetricsBundle m;
  m.log_loss = j.at("log_loss").get<double>();
  m.auc = j.at("auc").get<double>();
  m.brier = j.at("brier").get<double>();
  return m;
}

}  // namespace

PipelineResult run_stacked_pipeline(const PipelineConfig& config,
                                    const PipelineInputs& inputs) {
  config.validate();
  const std::string config_hash = config.hash();

  auto stage_error = [&](const char* name, const std::exception& e) -> Error {
    return Error(fmt::format("stage {} failed (config {}): {}", name,
                             config_hash, e.what()));
  };

  PipelineResult result;
  result.report.config_hash = config_hash;
  result.report.seed = config.seed;
  LeakageAudit& audit = result.audit;
  for (int s = config.test.lo; s <= config.test.hi; ++s)
    audit.test_seasons.insert(s);

  // stage: clean
  std::vector<ShotRecord> shots;
  try {
    CleanStats stats;
    shots = clean_and_filter(inputs.events, inputs.directions, &stats);
    log::info(fmt::format("clean: {} events -> {} shots ({} games, {} skipped)",
                          stats.events_in, stats.shots_out, stats.games_in,
                          stats.games_skipped));
    if (shots.empty()) throw Error("no shots survived cleaning");
  } catch (const std::exception& e) {
    throw stage_error("clean", e);
  }

  std::vector<std::size_t> train_era_idx, base_train_idx, test_idx;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const int season = shots[i].season;
    if (config.base_train.contains(season) ||
        config.final_train.contains(season))
      train_era_idx.push_back(i);
    if (config.base_train.contains(season)) base_train_idx.push_back(i);
    if (config.test.contains(season)) test_idx.push_back(i);
  }
  if (base_train_idx.empty())
    throw stage_error("clean", Error("no shots in base_train seasons"));
  if (test_idx.empty())
    throw stage_error("clean", Error("no shots in test seasons"));
  const std::set<int> train_era_seasons = seasons_of(shots, train_era_idx);
  const std::set<int> base_train_seasons = seasons_of(shots, base_train_idx);

  // stage: arena_tables (training era only; test shots must not shape them)
  ArenaCdfTable cdfs;
  ArenaMeanStats arena_stats;
  try {
    std::vector<ShotRecord> train_shots;
    train_shots.reserve(train_era_idx.size());
    for (std::size_t i : train_era_idx) train_shots.push_back(shots[i]);
    cdfs = build_cdf_tables(train_shots, config.arena_min_sample);
    arena_stats = build_arena_stats(train_shots, config.arena_min_sample);
    audit.artifacts.push_back({"arena_cdf", train_era_seasons});
    audit.artifacts.push_back({"arena_mean", train_era_seasons});
  } catch (const std::exception& e) {
    throw stage_error("arena_tables", e);
  }

  // stage: base_features
  std::vector<BaseFeatureRow> base_rows;
  try {
    base_rows =
        build_base_rows(shots, inputs.events, inputs.directions, cdfs,
                        arena_stats);
  } catch (const std::exception& e) {
    throw stage_error("base_features", e);
  }

  // stage: base_model (model A: tuned and fit on base_train, scores test)
  gbdt::TuneResult base_tuned;
  gbdt::GbdtModel model_a;
  std::vector<double> test_xg;
  std::vector<int> base_train_labels;
  gbdt::Dataset base_train_ds;
  try {
    base_train_ds = base_dataset(base_rows, base_train_idx);
    base_train_labels.reserve(base_train_idx.size());
    for (std::size_t i : base_train_idx)
      base_train_labels.push_back(base_rows[i].outcome);
    base_tuned = gbdt::tune(base_train_ds, base_train_labels,
                            config.search_space, config.tuner_budget,
                            config.k_folds, config.seed);
    model_a = gbdt::fit_gbdt(base_train_ds, base_train_labels, base_tuned.best);
    const gbdt::Dataset test_ds = base_dataset(base_rows, test_idx);
    test_xg = model_a.predict(test_ds);
    audit.artifacts.push_back({"base_model_tuner", base_train_seasons});
    audit.artifacts.push_back({"base_model", base_train_seasons});
    log::info(fmt::format("base model: trial {} of {}, {} trees",
                          base_tuned.best_trial, config.tuner_budget,
                          base_tuned.best.n_estimators));
  } catch (const std::exception& e) {
    throw stage_error("base_model", e);
  }

  // stage: oof_xg (out-of-fold xG for every training-era shot)
  try {
    audit.oof = gbdt::cross_val_predict(base_train_ds, base_train_labels,
                                        base_tuned.best, config.k_folds,
                                        config.seed);
    audit.oof_seasons.reserve(base_train_idx.size());
    for (std::size_t i : base_train_idx)
      audit.oof_seasons.push_back(base_rows[i].season);
  } catch (const std::exception& e) {
    throw stage_error("oof_xg", e);
  }

  // stage: merge_xg (training era takes OOF values, test takes model A's)
  std::vector<double> merged_xg(shots.size(),
                                std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < base_train_idx.size(); ++j)
    merged_xg[base_train_idx[j]] = audit.oof.preds[j];
  for (std::size_t j = 0; j < test_idx.size(); ++j)
    merged_xg[test_idx[j]] = test_xg[j];

  // stage: gower_ranges (frozen from the training era)
  GowerRanges ranges;
  try {
    std::vector<GowerSubset> subsets;
    subsets.reserve(train_era_idx.size());
    for (std::size_t i : train_era_idx)
      subsets.push_back(gower_subset_of(base_rows[i]));
    ranges = compute_gower_ranges(subsets);
    audit.artifacts.push_back({"gower_ranges", train_era_seasons});
  } catch (const std::exception& e) {
    throw stage_error("gower_ranges", e);
  }

  // stage: skill_features
  std::vector<SkillFeatureRow> skill_rows;
  try {
    std::vector<BaseFeatureRow> corpus_rows;
    std::vector<double> corpus_xg;
    std::vector<bool> featurize;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      if (std::isnan(merged_xg[i])) continue;
      corpus_rows.push_back(base_rows[i]);
      corpus_xg.push_back(merged_xg[i]);
      featurize.push_back(config.skill_span.contains(shots[i].season));
    }
    skill_rows = build_skill_rows(corpus_rows, corpus_xg, featurize, ranges);
    if (skill_rows.empty()) throw Error("no skill rows produced");
  } catch (const std::exception& e) {
    throw stage_error("skill_features", e);
  }

  // stage: brackets (training-era cumulative ratios, midrank percentiles)
  BracketAssignment assignment;
  try {
    std::vector<std::string> shot_player;
    shot_player.reserve(skill_rows.size());
    for (const SkillFeatureRow& r : skill_rows)
      shot_player.push_back(config.bracket_key == Role::Shooter ? r.shooter_id
                                                                : r.goalie_id);
    std::vector<std::string> hist_player;
    std::vector<double> hist_xg;
    std::vector<int> hist_outcome;
    hist_player.reserve(base_train_idx.size());
    for (std::size_t j = 0; j < base_train_idx.size(); ++j) {
      const BaseFeatureRow& r = base_rows[base_train_idx[j]];
      hist_player.push_back(config.bracket_key == Role::Shooter ? r.shooter_id
                                                                : r.goalie_id);
      hist_xg.push_back(audit.oof.preds[j]);
      hist_outcome.push_back(r.outcome);
    }
    assignment = assign_brackets(shot_player, hist_player, hist_xg,
                                 hist_outcome, config.bracket_key,
                                 config.bracket_min_shots,
                                 config.bracket_cut_low, config.bracket_cut_mid);
    audit.artifacts.push_back({"brackets", base_train_seasons});
  } catch (const std::exception& e) {
    throw stage_error("brackets", e);
  }

  // stage: bracket_models (per bracket: skill-adjusted and fresh baseline on
  // identical shot sets, evaluated on test seasons only)
  try {
    // the baseline needs Table 1 features for the very same shots
    std::map<std::pair<std::string, int>, std::size_t> base_row_of;
    for (std::size_t i = 0; i < base_rows.size(); ++i)
      base_row_of[{base_rows[i].game_id, base_rows[i].event_index}] = i;

    std::vector<double> pooled_bl, pooled_sa;
    std::vector<int> pooled_labels;
    const std::set<int> final_train_seasons = [&] {
      std::set<int> s;
      for (const SkillFeatureRow& r : skill_rows)
        if (config.final_train.contains(r.season)) s.insert(r.season);
      return s;
    }();

    const Bracket order[3] = {Bracket::High, Bracket::Mid, Bracket::Low};
    for (const Bracket bracket : order) {
      std::vector<std::size_t> sa_train, sa_test;
      for (std::size_t r = 0; r < skill_rows.size(); ++r) {
        if (assignment.shot_bracket[r] != bracket) continue;
        if (config.final_train.contains(skill_rows[r].season))
          sa_train.push_back(r);
        else if (config.test.contains(skill_rows[r].season))
          sa_test.push_back(r);
      }
      if (sa_train.empty() || sa_test.empty())
        throw Error(fmt::format("bracket {} has {} train and {} test rows",
                                to_string(bracket), sa_train.size(),
                                sa_test.size()));

      std::vector<std::size_t> bl_train, bl_test;
      auto to_base = [&](const std::vector<std::size_t>& sa_idx,
                         std::vector<std::size_t>& out) {
        out.reserve(sa_idx.size());
        for (std::size_t r : sa_idx) {
          const auto it = base_row_of.find(
              {skill_rows[r].game_id, skill_rows[r].event_index});
          if (it == base_row_of.end())
            throw Error(fmt::format("skill row {}:{} has no base row",
                                    skill_rows[r].game_id,
                                    skill_rows[r].event_index));
          out.push_back(it->second);
        }
      };
      to_base(sa_train, bl_train);
      to_base(sa_test, bl_test);

      std::vector<int> train_labels, test_labels;
      for (std::size_t r : sa_train) train_labels.push_back(skill_rows[r].outcome);
      for (std::size_t r : sa_test) test_labels.push_back(skill_rows[r].outcome);

      const gbdt::Dataset sa_train_ds = sa_dataset(skill_rows, sa_train);
      const gbdt::Dataset sa_test_ds = sa_dataset(skill_rows, sa_test);
      const gbdt::TuneResult sa_tuned =
          gbdt::tune(sa_train_ds, train_labels, config.search_space,
                     config.tuner_budget, config.k_folds, config.seed);
      const gbdt::GbdtModel sa_model =
          gbdt::fit_gbdt(sa_train_ds, train_labels, sa_tuned.best);
      const std::vector<double> sa_preds = sa_model.predict(sa_test_ds);

      const gbdt::Dataset bl_train_ds = base_dataset(base_rows, bl_train);
      const gbdt::Dataset bl_test_ds = base_dataset(base_rows, bl_test);
      const gbdt::TuneResult bl_tuned =
          gbdt::tune(bl_train_ds, train_labels, config.search_space,
                     config.tuner_budget, config.k_folds, config.seed);
      const gbdt::GbdtModel bl_model =
          gbdt::fit_gbdt(bl_train_ds, train_labels, bl_tuned.best);
      const std::vector<double> bl_preds = bl_model.predict(bl_test_ds);

      BracketReport report;
      report.bracket = bracket;
      if (bracket == Bracket::Low)
        report.percentile_range = fmt::format("p <= {:g}", config.bracket_cut_low);
      else if (bracket == Bracket::Mid)
        report.percentile_range = fmt::format(
            "{:g} < p <= {:g}", config.bracket_cut_low, config.bracket_cut_mid);
      else
        report.percentile_range = fmt::format("p > {:g}", config.bracket_cut_mid);
      report.train_rows = sa_train.size();
      report.test_rows = sa_test.size();
      report.baseline = compute_metrics(bl_preds, test_labels);
      report.skill_adjusted = compute_metrics(sa_preds, test_labels);
      for (const auto& [name, gain] : gbdt::feature_importance_gain(sa_model))
        report.sa_importance.emplace_back(name, gain);
      std::stable_sort(report.sa_importance.begin(), report.sa_importance.end(),
                       [](const auto& a, const auto& b) {
                         return a.second > b.second;
                       });
      result.report.brackets.push_back(std::move(report));

      audit.artifacts.push_back(
          {fmt::format("sa_model_{}", to_string(bracket)), final_train_seasons});
      audit.artifacts.push_back(
          {fmt::format("baseline_model_{}", to_string(bracket)),
           final_train_seasons});

      pooled_sa.insert(pooled_sa.end(), sa_preds.begin(), sa_preds.end());
      pooled_bl.insert(pooled_bl.end(), bl_preds.begin(), bl_preds.end());
      pooled_labels.insert(pooled_labels.end(), test_labels.begin(),
                           test_labels.end());
      result.report.n_train_shots += sa_train.size();
      result.report.n_test_shots += sa_test.size();
      log::info(fmt::format(
          "bracket {}: {} train / {} test, log loss {:.4f} vs {:.4f}",
          to_string(bracket), sa_train.size(), sa_test.size(),
          result.report.brackets.back().skill_adjusted.log_loss,
          result.report.brackets.back().baseline.log_loss));
    }

    result.report.pooled_baseline = compute_metrics(pooled_bl, pooled_labels);
    result.report.pooled_skill_adjusted =
        compute_metrics(pooled_sa, pooled_labels);
  } catch (const std::exception& e) {
    throw stage_error("bracket_models", e);
  }

  return result;
}

PipelineResult run_stacked_pipeline(const PipelineConfig& config) {
  config.validate();
  if (config.event_paths.empty()) throw Error("no event paths configured");
  if (config.out_dir.empty()) throw Error("no out_dir configured");

  PipelineInputs inputs;
  for (const std::string& path : config.event_paths) {
    ParseOptions opts;
    std::size_t skipped = 0;
    opts.issue_sink = [&](const ParseIssue&) { ++skipped; };
    std::vector<RawEvent> events = parse_pbp(path, opts);
    if (skipped > 0)
      log::warn(fmt::format("{}: skipped {} malformed records", path, skipped));
    inputs.events.insert(inputs.events.end(),
                         std::make_move_iterator(events.begin()),
                         std::make_move_iterator(events.end()));
  }
  if (config.direction_table_path.empty())
    throw Error("no direction table configured");
  inputs.directions = DirectionTable::load(config.direction_table_path);

  PipelineResult result = run_stacked_pipeline(config, inputs);

  fs::create_directories(config.out_dir);
  std::vector<std::string> outputs = emit_report(result.report, config.out_dir);

  json manifest;
  manifest["config"] = json::parse(config.to_json());
  manifest["config_hash"] = result.report.config_hash;
  manifest["n_events"] = inputs.events.size();
  manifest["outputs"] = outputs;
  const std::string manifest_path =
      (fs::path(config.out_dir) / "manifest.json").string();
  io::write_file(manifest_path, manifest.dump(2) + "\n");
  return result;
}

std::vector<std::string> emit_report(const EvalReport& report,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  std::string csv = "model,percentile,log_loss,auc,brier\n";
  auto metric_rows = [&](const char* model,
                         const MetricsBundle& (*pick)(const BracketReport&)) {
    for (const BracketReport& b : report.brackets) {
      const MetricsBundle& m = pick(b);
      csv += fmt::format("{},{},{:.4f},{:.4f},{:.4f}\n", model,
                         b.percentile_range, m.log_loss, m.auc, m.brier);
    }
  };
  metric_rows("baseline", [](const BracketReport& b) -> const MetricsBundle& {
    return b.baseline;
  });
  metric_rows("skill_adjusted",
              [](const BracketReport& b) -> const MetricsBundle& {
                return b.skill_adjusted;
              });
  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  io::write_file(metrics_path, csv);
  written.push_back(metrics_path);

  for (const BracketReport& b : report.brackets) {
    std::string imp = "feature,gain\n";
    for (const auto& [name, gain] : b.sa_importance)
      imp += fmt::format("{},{}\n", name, io::format_double(gain));
    const std::string path =
        (fs::path(out_dir) /
         fmt::format("importance_{}.csv", to_string(b.bracket)))
            .string();
    io::write_file(path, imp);
    written.push_back(path);
  }

  const std::string report_path = (fs::path(out_dir) / "report.json").string();
  io::write_file(report_path, report_to_json(report) + "\n");
  written.push_back(report_path);
  return written;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["n_train_shots"] = report.n_train_shots;
  j["n_test_shots"] = report.n_test_shots;
  json brackets = json::array();
  for (const BracketReport& b : report.brackets) {
    json bj;
    bj["bracket"] = std::string(to_string(b.bracket));
    bj["percentile_range"] = b.percentile_range;
    bj["train_rows"] = b.train_rows;
    bj["test_rows"] = b.test_rows;
    bj["baseline"] = metrics_to_json(b.baseline);
    bj["skill_adjusted"] = metrics_to_json(b.skill_adjusted);
    json imp = json::array();
    for (const auto& [name, gain] : b.sa_importance)
      imp.push_back(json::array({name, gain}));
    bj["sa_importance"] = std::move(imp);
    brackets.push_back(std::move(bj));
  }
  j["brackets"] = std::move(brackets);
  j["pooled_baseline"] = metrics_to_json(report.pooled_baseline);
  j["pooled_skill_adjusted"] = metrics_to_json(report.pooled_skill_adjusted);
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  EvalReport report;
  report.config_hash = j.at("config_hash").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n_train_shots = j.at("n_train_shots").get<std::size_t>();
  report.n_test_shots = j.at("n_test_shots").get<std::size_t>();
  for (const json& bj : j.at("brackets")) {
    BracketReport b;
    const std::string name = bj.at("bracket").get<std::string>();
    if (name == "low")
      b.bracket = Bracket::Low;
    else if (name == "mid")
      b.bracket = Bracket::Mid;
    else if (name == "high")
      b.bracket = Bracket::High;
    else
      throw Error(fmt::format("unknown bracket {}", name));
    b.percentile_range = bj.at("percentile_range").get<std::string>();
    b.train_rows = bj.at("train_rows").get<std::size_t>();
    b.test_rows = bj.at("test_rows").get<std::size_t>();
    b.baseline = metrics_from_json(bj.at("baseline"));
    b.skill_adjusted = metrics_from_json(bj.at("skill_adjusted"));
    for (const json& pair : bj.at("sa_importance"))
      b.sa_importance.emplace_back(pair.at(0).get<std::string>(),
                                   pair.at(1).get<double>());
    report.brackets.push_back(std::move(b));
  }
  report.pooled_baseline = metrics_from_json(j.at("pooled_baseline"));
  report.pooled_skill_adjusted = metrics_from_json(j.at("pooled_skill_adjusted"));
  return report;
}

}  // namespace xg
