// Command line front end. Subcommands mirror the pipeline stages: ingest,
// adjust, features base, features skill, train, predict, run, evaluate,
// report.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "xg/arena_adjust.hpp"
#include "xg/base_features.hpp"
#include "xg/gbdt.hpp"
#include "xg/ingest.hpp"
#include "xg/io.hpp"
#include "xg/log.hpp"
#include "xg/metrics.hpp"
#include "xg/pipeline.hpp"
#include "xg/skill_features.hpp"
#include "xg/tune.hpp"
#include "xg/types.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

xg::io::TableFormat out_format(const std::string& path,
                               const std::string& flag) {
  return flag.empty() ? xg::io::format_from_path(path)
                      : xg::io::format_from_flag(flag);
}

std::vector<xg::RawEvent> parse_inputs(const std::vector<std::string>& paths,
                                       xg::OnError on_error) {
  xg::ParseOptions opts;
  opts.on_error = on_error;
  std::vector<xg::RawEvent> events;
  for (const std::string& path : paths) {
    std::size_t skipped = 0;
    opts.issue_sink = [&](const xg::ParseIssue& issue) {
      ++skipped;
      xg::log::debug(fmt::format("{}:{}: {}", path, issue.line_no, issue.message));
    };
    std::vector<xg::RawEvent> batch = xg::parse_pbp(path, opts);
    if (skipped > 0)
      xg::log::warn(fmt::format("{}: skipped {} malformed records", path, skipped));
    events.insert(events.end(), std::make_move_iterator(batch.begin()),
                  std::make_move_iterator(batch.end()));
  }
  return events;
}

// A generic columnar table writer for ad-hoc outputs (adjusted coordinates,
// predictions). Cells are pre-formatted strings.
void write_columns(const std::string& path, xg::io::TableFormat fmt,
                   const std::vector<std::string>& names,
                   const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  if (fmt == xg::io::TableFormat::Csv) {
    out += xg::io::join_csv_line(names);
    out += '\n';
    for (const auto& cells : rows) {
      out += xg::io::join_csv_line(cells);
      out += '\n';
    }
  } else {
    for (const auto& cells : rows) {
      json j;
      for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string& cell = cells[c];
        // numeric cells round-trip as numbers, everything else as strings
        char* end = nullptr;
        double v = std::strtod(cell.c_str(), &end);
        if (!cell.empty() && end == cell.c_str() + cell.size())
          j[names[c]] = v;
        else
          j[names[c]] = cell;
      }
      out += j.dump();
      out += '\n';
    }
  }
  xg::io::write_file(path, out);
}

std::string gower_ranges_to_json(const xg::GowerRanges& r) {
  json j;
  j["schuckers_x"] = r.schuckers_x;
  j["schuckers_y"] = r.schuckers_y;
  j["schuckers_dist"] = r.schuckers_dist;
  j["schuckers_angle"] = r.schuckers_angle;
  return j.dump(2);
}

xg::GowerRanges gower_ranges_from_json(const std::string& text) {
  const json j = json::parse(text);
  xg::GowerRanges r;
  r.schuckers_x = j.at("schuckers_x").get<double>();
  r.schuckers_y = j.at("schuckers_y").get<double>();
  r.schuckers_dist = j.at("schuckers_dist").get<double>();
  r.schuckers_angle = j.at("schuckers_angle").get<double>();
  return r;
}

// The xG column file: CSV with a header or JSONL objects; the value column is
// whichever of these names appears.
std::vector<double> read_xg_column(const std::string& path) {
  static const std::vector<std::string> kNames = {"prediction", "xg", "xG",
                                                  "xg_base"};
  const xg::io::TableFormat fmt = xg::io::format_from_path(path);
  std::vector<double> values;
  if (fmt == xg::io::TableFormat::Csv) {
    std::optional<std::size_t> col;
    xg::io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
      std::vector<std::string> cells = xg::io::split_csv_line(line);
      if (line_no == 1) {
        for (const std::string& name : kNames) {
          for (std::size_t c = 0; c < cells.size(); ++c)
            if (cells[c] == name) col = c;
          if (col) break;
        }
        if (!col)
          throw xg::Error(fmt::format("{}: no prediction column in header", path));
        return;
      }
      if (*col >= cells.size())
        throw xg::Error(fmt::format("{}:{}: short row", path, line_no));
      values.push_back(std::stod(cells[*col]));
    });
  } else {
    xg::io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
      const json j = json::parse(line);
      for (const std::string& name : kNames) {
        if (j.contains(name)) {
          values.push_back(j.at(name).get<double>());
          return;
        }
      }
      throw xg::Error(fmt::format("{}:{}: no prediction key", path, line_no));
    });
  }
  return values;
}

enum class RowKind { Base, Skill };

// A skill-feature table is recognized by its own column names; anything else
// is read as a base-feature table.
RowKind sniff_row_kind(const std::string& path) {
  RowKind kind = RowKind::Base;
  xg::io::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line_no > 1) return;
    if (line.find("true_gax_shooter") != std::string_view::npos)
      kind = RowKind::Skill;
  });
  return kind;
}

struct LoadedTable {
  xg::gbdt::Dataset dataset;
  std::vector<int> labels;
  RowKind kind = RowKind::Base;
  std::size_t n_rows = 0;
};

LoadedTable load_table(const std::string& path) {
  LoadedTable t;
  t.kind = sniff_row_kind(path);
  if (t.kind == RowKind::Skill) {
    std::vector<xg::SkillFeatureRow> rows = xg::io::read_skill_rows(path);
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    t.dataset = xg::sa_dataset(rows, idx);
    t.labels.reserve(rows.size());
    for (const auto& r : rows) t.labels.push_back(r.outcome);
    t.n_rows = rows.size();
  } else {
    std::vector<xg::BaseFeatureRow> rows = xg::io::read_base_rows(path);
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    t.dataset = xg::base_dataset(rows, idx);
    t.labels.reserve(rows.size());
    for (const auto& r : rows) t.labels.push_back(r.outcome);
    t.n_rows = rows.size();
  }
  return t;
}

xg::gbdt::GbdtParams params_from_file(const std::string& path) {
  json j = json::parse(xg::io::read_file(path));
  if (j.contains("params")) j = j.at("params");  // accept a model document too
  xg::gbdt::GbdtParams d;
  xg::gbdt::GbdtParams p;
  p.n_estimators = j.value("n_estimators", d.n_estimators);
  p.learning_rate = j.value("learning_rate", d.learning_rate);
  p.max_depth = j.value("max_depth", d.max_depth);
  p.num_leaves = j.value("num_leaves", d.num_leaves);
  p.min_data_in_leaf = j.value("min_data_in_leaf", d.min_data_in_leaf);
  p.l2_lambda = j.value("l2_lambda", d.l2_lambda);
  p.feature_fraction = j.value("feature_fraction", d.feature_fraction);
  p.bagging_fraction = j.value("bagging_fraction", d.bagging_fraction);
  p.max_bins = j.value("max_bins", d.max_bins);
  p.early_stopping_rounds = j.value("early_stopping_rounds", d.early_stopping_rounds);
  p.seed = j.value("seed", d.seed);
  p.validate();
  return p;
}

int cmd_ingest(const std::vector<std::string>& inputs,
               const std::string& direction_path, const std::string& out,
               const std::string& format_flag, const std::string& on_error) {
  const xg::OnError mode =
      on_error == "abort" ? xg::OnError::Abort : xg::OnError::Skip;
  std::vector<xg::RawEvent> events = parse_inputs(inputs, mode);
  xg::DirectionTable directions = xg::DirectionTable::load(direction_path);
  xg::CleanStats stats;
  std::vector<xg::ShotRecord> shots =
      xg::clean_and_filter(events, directions, &stats);
  xg::io::write_shots(out, shots, out_format(out, format_flag));
  xg::log::info(fmt::format(
      "{} events in {} games -> {} shots ({} games missing directions)",
      stats.events_in, stats.games_in, stats.shots_out, stats.games_skipped));
  return 0;
}

int cmd_adjust(const std::string& shots_path, const std::string& out,
               const std::string& tables_out) {
  std::vector<xg::ShotRecord> shots = xg::io::read_shots(shots_path);
  xg::ArenaCdfTable cdfs = xg::build_cdf_tables(shots, xg::kDefaultArenaMinSample);
  xg::ArenaMeanStats stats = xg::build_arena_stats(shots, xg::kDefaultArenaMinSample);
  if (!tables_out.empty())
    xg::io::write_file(tables_out, xg::arena_tables_to_json(cdfs, stats) + "\n");

  const std::vector<std::string> names = {
      "game_id",       "event_index",  "x",             "y",
      "SchuckersX",    "SchuckersY",   "SchuckersDist", "SchuckersAngle",
      "krzywickiX",    "krzywickiY",   "krzywickiDist"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(shots.size());
  for (const xg::ShotRecord& shot : shots) {
    const xg::SchuckersAdjusted s = xg::schuckers_adjust(shot, cdfs);
    const xg::KrzywickiAdjusted k = xg::krzywicki_adjust(shot, stats);
    rows.push_back({shot.game_id, std::to_string(shot.event_index),
                    xg::io::format_double(shot.x_std),
                    xg::io::format_double(shot.y_std),
                    xg::io::format_double(s.x), xg::io::format_double(s.y),
                    xg::io::format_double(s.dist),
                    xg::io::format_double(s.angle),
                    xg::io::format_double(k.x), xg::io::format_double(k.y),
                    xg::io::format_double(k.dist)});
  }
  write_columns(out, xg::io::format_from_path(out), names, rows);
  xg::log::info(fmt::format("adjusted {} shots across {} arenas", shots.size(),
                            stats.arena_counts.size()));
  return 0;
}

int cmd_features_base(const std::string& shots_path,
                      const std::string& tables_path,
                      const std::vector<std::string>& event_paths,
                      const std::string& direction_path,
                      const std::string& out) {
  std::vector<xg::ShotRecord> shots = xg::io::read_shots(shots_path);
  auto [cdfs, stats] =
      xg::arena_tables_from_json(xg::io::read_file(tables_path));
  std::vector<xg::RawEvent> events = parse_inputs(event_paths, xg::OnError::Skip);
  xg::DirectionTable directions = xg::DirectionTable::load(direction_path);
  std::vector<xg::BaseFeatureRow> rows =
      xg::build_base_rows(shots, events, directions, cdfs, stats);
  xg::io::write_base_rows(out, rows, xg::io::format_from_path(out));
  xg::log::info(fmt::format("{} feature rows", rows.size()));
  return 0;
}

int cmd_features_skill(const std::string& base_rows_path,
                       const std::string& xg_path, const std::string& out,
                       const std::string& ranges_path) {
  std::vector<xg::BaseFeatureRow> rows = xg::io::read_base_rows(base_rows_path);
  std::vector<double> xg_vals = read_xg_column(xg_path);
  if (xg_vals.size() != rows.size())
    throw xg::Error(fmt::format("{} xG values for {} rows", xg_vals.size(),
                                rows.size()));

  xg::GowerRanges ranges;
  if (!ranges_path.empty() && fs::exists(ranges_path)) {
    ranges = gower_ranges_from_json(xg::io::read_file(ranges_path));
  } else {
    std::vector<xg::GowerSubset> subsets;
    subsets.reserve(rows.size());
    for (const auto& r : rows) subsets.push_back(xg::gower_subset_of(r));
    ranges = xg::compute_gower_ranges(subsets);
    if (!ranges_path.empty())
      xg::io::write_file(ranges_path, gower_ranges_to_json(ranges) + "\n");
  }

  std::vector<bool> featurize(rows.size(), true);
  std::vector<xg::SkillFeatureRow> skill_rows =
      xg::build_skill_rows(rows, xg_vals, featurize, ranges);
  xg::io::write_skill_rows(out, skill_rows, xg::io::format_from_path(out));
  xg::log::info(fmt::format("{} skill rows", skill_rows.size()));
  return 0;
}

int cmd_train(const std::string& rows_path, const std::string& labels_col,
              const std::string& params_path, bool tune_flag, int budget,
              int folds, std::uint64_t seed, const std::string& out) {
  if (labels_col != "Outcome" && labels_col != "outcome")
    throw xg::Error(fmt::format("unsupported labels column {}", labels_col));
  LoadedTable table = load_table(rows_path);

  xg::gbdt::GbdtParams params;
  if (tune_flag) {
    xg::gbdt::SearchSpace space;
    xg::gbdt::TuneResult result =
        xg::gbdt::tune(table.dataset, table.labels, space, budget, folds, seed);
    params = result.best;
    xg::log::info(fmt::format(
        "tuned: trial {} of {}, cv logloss {:.6f}, {} estimators",
        result.best_trial + 1, budget,
        result.trials[result.best_trial].mean_valid_logloss,
        params.n_estimators));
  } else {
    params = params_from_file(params_path);
  }

  xg::gbdt::GbdtModel model = xg::gbdt::fit_gbdt(table.dataset, table.labels, params);
  model.save(out);
  xg::log::info(fmt::format("{} rows, {} trees -> {}", table.n_rows,
                            model.trees.size(), out));
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& rows_path,
                const std::string& out) {
  xg::gbdt::GbdtModel model = xg::gbdt::GbdtModel::load(model_path);
  LoadedTable table = load_table(rows_path);
  std::vector<double> preds = model.predict(table.dataset);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(preds.size());
  for (double p : preds) rows.push_back({xg::io::format_double(p)});
  write_columns(out, xg::io::format_from_path(out), {"prediction"}, rows);
  xg::log::info(fmt::format("{} predictions -> {}", preds.size(), out));
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& rows_path) {
  xg::gbdt::GbdtModel model = xg::gbdt::GbdtModel::load(model_path);
  LoadedTable table = load_table(rows_path);
  std::vector<double> preds = model.predict(table.dataset);
  xg::MetricsBundle m = xg::compute_metrics(preds, table.labels);
  fmt::print("rows {}\nlog_loss {:.6f}\nauc {:.6f}\nbrier {:.6f}\n",
             table.n_rows, m.log_loss, m.auc, m.brier);
  return 0;
}

int cmd_run(const std::string& config_path) {
  xg::PipelineConfig config = xg::PipelineConfig::load(config_path);
  xg::PipelineResult result = xg::run_stacked_pipeline(config);
  const xg::EvalReport& r = result.report;
  fmt::print("train {} test {} shots\n", r.n_train_shots, r.n_test_shots);
  for (const xg::BracketReport& b : r.brackets)
    fmt::print("{:>5} [{}]  baseline ll {:.4f}  skill-adjusted ll {:.4f}\n",
               to_string(b.bracket), b.percentile_range, b.baseline.log_loss,
               b.skill_adjusted.log_loss);
  fmt::print("pooled baseline ll {:.4f}  skill-adjusted ll {:.4f}\n",
             r.pooled_baseline.log_loss, r.pooled_skill_adjusted.log_loss);
  fmt::print("report in {}\n", config.out_dir);
  return 0;
}

int cmd_report(const std::string& in_dir) {
  const std::string report_path = (fs::path(in_dir) / "report.json").string();
  xg::EvalReport report = xg::report_from_json(xg::io::read_file(report_path));
  std::vector<std::string> written = xg::emit_report(report, in_dir);
  for (const std::string& path : written) fmt::print("{}\n", path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skill-adjusted expected goals pipeline"};
  app.require_subcommand(1);

  // ingest
  std::vector<std::string> ingest_inputs;
  std::string ingest_directions, ingest_out, ingest_format;
  std::string ingest_on_error = "skip";
  auto* ingest = app.add_subcommand("ingest", "parse and clean play-by-play events");
  ingest->add_option("--input", ingest_inputs, "event files (jsonl/csv, .gz ok)")
      ->required();
  ingest->add_option("--direction-table", ingest_directions,
                     "attack-direction table")->required();
  ingest->add_option("--out", ingest_out, "shot table out")->required();
  ingest->add_option("--format", ingest_format, "jsonl|csv (default: by extension)")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ingest->add_option("--on-error", ingest_on_error, "skip|abort on bad records")
      ->check(CLI::IsMember({"skip", "abort"}));

  // adjust
  std::string adjust_shots, adjust_out, adjust_tables_out;
  auto* adjust = app.add_subcommand("adjust", "arena-bias coordinate adjustment");
  adjust->add_option("--shots", adjust_shots, "shot table")->required();
  adjust->add_option("--out", adjust_out, "adjusted coordinates out")->required();
  adjust->add_option("--tables-out", adjust_tables_out, "frozen tables JSON out");

  // features base / skill
  auto* features = app.add_subcommand("features", "feature tables");
  features->require_subcommand(1);
  std::string fb_shots, fb_tables, fb_directions, fb_out;
  std::vector<std::string> fb_events;
  auto* fbase = features->add_subcommand("base", "shot quality predictors");
  fbase->add_option("--shots", fb_shots, "shot table")->required();
  fbase->add_option("--adjust-tables", fb_tables, "frozen adjustment tables JSON")
      ->required();
  fbase->add_option("--events", fb_events,
                    "event files (last-event context and shot history)")
      ->required();
  fbase->add_option("--direction-table", fb_directions, "attack-direction table")
      ->required();
  fbase->add_option("--out", fb_out, "feature table out")->required();

  std::string fs_base_rows, fs_xg, fs_out, fs_ranges;
  auto* fskill = features->add_subcommand("skill", "ledger-based skill features");
  fskill->add_option("--base-rows", fs_base_rows, "base feature table")->required();
  fskill->add_option("--xg", fs_xg, "per-shot xG column (prediction/xg)")
      ->required();
  fskill->add_option("--out", fs_out, "skill feature table out")->required();
  fskill->add_option("--ranges", fs_ranges,
                     "Gower ranges JSON; loaded if present, else written");

  // train
  std::string train_rows, train_labels = "Outcome", train_params, train_out;
  bool train_tune = false;
  int train_budget = 20, train_folds = 5;
  std::uint64_t train_seed = 1;
  auto* train = app.add_subcommand("train", "fit the boosted-tree classifier");
  train->add_option("--rows", train_rows, "feature table")->required();
  train->add_option("--labels-col", train_labels, "label column (Outcome)");
  auto* params_opt =
      train->add_option("--params", train_params, "hyperparameter JSON");
  auto* tune_opt = train->add_flag("--tune", train_tune, "random-search tuning");
  params_opt->excludes(tune_opt);
  train->add_option("--budget", train_budget, "tuning trials")->needs(tune_opt);
  train->add_option("--folds", train_folds, "cv folds")->needs(tune_opt);
  train->add_option("--seed", train_seed, "tuning seed")->needs(tune_opt);
  train->add_option("--out", train_out, "model JSON out")->required();

  // predict
  std::string predict_model, predict_rows, predict_out;
  auto* predict = app.add_subcommand("predict", "score a feature table");
  predict->add_option("--model", predict_model, "model JSON")->required();
  predict->add_option("--rows", predict_rows, "feature table")->required();
  predict->add_option("--out", predict_out, "predictions out")->required();

  // run
  std::string run_config;
  auto* run = app.add_subcommand("run", "full stacked pipeline from a config");
  run->add_option("--config", run_config, "pipeline config JSON")->required();

  // evaluate
  std::string eval_model, eval_rows;
  auto* evaluate = app.add_subcommand("evaluate", "score and report metrics");
  evaluate->add_option("--model", eval_model, "model JSON")->required();
  evaluate->add_option("--rows", eval_rows, "feature table with outcomes")
      ->required();

  // report
  std::string report_in;
  auto* report = app.add_subcommand("report", "regenerate tables from report.json");
  report->add_option("--in", report_in, "report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest)
      return cmd_ingest(ingest_inputs, ingest_directions, ingest_out,
                        ingest_format, ingest_on_error);
    if (*adjust) return cmd_adjust(adjust_shots, adjust_out, adjust_tables_out);
    if (*fbase)
      return cmd_features_base(fb_shots, fb_tables, fb_events, fb_directions,
                               fb_out);
    if (*fskill)
      return cmd_features_skill(fs_base_rows, fs_xg, fs_out, fs_ranges);
    if (*train) {
      if (!train_tune && train_params.empty())
        throw xg::Error("pass --params <file> or --tune");
      return cmd_train(train_rows, train_labels, train_params, train_tune,
                       train_budget, train_folds, train_seed, train_out);
    }
    if (*predict) return cmd_predict(predict_model, predict_rows, predict_out);
    if (*run) return cmd_run(run_config);
    if (*evaluate) return cmd_evaluate(eval_model, eval_rows);
    if (*report) return cmd_report(report_in);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
