#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xg/base_features.hpp"
#include "xg/skill_features.hpp"
#include "xg/types.hpp"

namespace xg::io {

enum class TableFormat { Jsonl, Csv };

TableFormat format_from_flag(const std::string& flag);  // "jsonl" | "csv"
// .csv/.csv.gz => Csv, otherwise Jsonl.
TableFormat format_from_path(const std::string& path);

// Reads a whole file line by line; transparently gunzips *.gz.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Minimal CSV with quoting for commas/quotes/newlines; empty cell = missing.
std::vector<std::string> split_csv_line(std::string_view line);
std::string join_csv_line(const std::vector<std::string>& cells);

// --- RawEvent ---
std::string raw_event_to_jsonl(const RawEvent& e);
RawEvent raw_event_from_json(const std::string& line);
extern const std::vector<std::string> kRawEventColumns;
std::vector<std::string> raw_event_to_cells(const RawEvent& e);
RawEvent raw_event_from_cells(const std::vector<std::string>& header,
                              const std::vector<std::string>& cells);
void write_raw_events(const std::string& path, const std::vector<RawEvent>& es,
                      TableFormat fmt);

// --- ShotRecord ---
std::string shot_to_jsonl(const ShotRecord& s);
ShotRecord shot_from_json(const std::string& line);
extern const std::vector<std::string> kShotColumns;
std::vector<std::string> shot_to_cells(const ShotRecord& s);
ShotRecord shot_from_cells(const std::vector<std::string>& header,
                           const std::vector<std::string>& cells);
void write_shots(const std::string& path, const std::vector<ShotRecord>& shots,
                 TableFormat fmt);
std::vector<ShotRecord> read_shots(const std::string& path);

// --- BaseFeatureRow --- (feature columns carry the exact Table 1 names)
extern const std::vector<std::string> kBaseRowColumns;
std::vector<std::string> base_row_to_cells(const BaseFeatureRow& r);
BaseFeatureRow base_row_from_cells(const std::vector<std::string>& header,
                                   const std::vector<std::string>& cells);
std::string base_row_to_jsonl(const BaseFeatureRow& r);
BaseFeatureRow base_row_from_json(const std::string& line);
void write_base_rows(const std::string& path,
                     const std::vector<BaseFeatureRow>& rows, TableFormat fmt);
std::vector<BaseFeatureRow> read_base_rows(const std::string& path);

// --- SkillFeatureRow ---
extern const std::vector<std::string> kSkillRowColumns;
std::vector<std::string> skill_row_to_cells(const SkillFeatureRow& r);
SkillFeatureRow skill_row_from_cells(const std::vector<std::string>& header,
                                     const std::vector<std::string>& cells);
std::string skill_row_to_jsonl(const SkillFeatureRow& r);
SkillFeatureRow skill_row_from_json(const std::string& line);
void write_skill_rows(const std::string& path,
                      const std::vector<SkillFeatureRow>& rows,
                      TableFormat fmt);
std::vector<SkillFeatureRow> read_skill_rows(const std::string& path);

// Full-precision shortest round-trip rendering; integers render without a
// trailing ".0" so CSV cells stay stable.
std::string format_double(double v);

}  // namespace xg::io
