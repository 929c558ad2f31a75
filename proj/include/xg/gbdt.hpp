#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xg/types.hpp"

namespace xg::gbdt {

enum class FeatureKind { Numeric, Categorical };

// One input column. Numeric cells use NaN for missing; categorical cells use
// the empty string.
struct Column {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<double> numeric;
  std::vector<std::string> categorical;

  std::size_t size() const {
    return kind == FeatureKind::Numeric ? numeric.size() : categorical.size();
  }
};

struct Dataset {
  std::vector<Column> columns;

  std::size_t n_rows() const { return columns.empty() ? 0 : columns[0].size(); }
  const Column* find(const std::string& name) const;
};

struct GbdtParams {
  int n_estimators = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  int num_leaves = 31;
  int min_data_in_leaf = 20;
  double l2_lambda = 1.0;
  double feature_fraction = 1.0;
  double bagging_fraction = 1.0;
  int max_bins = 256;
  int early_stopping_rounds = 0;  // 0 = off
  std::uint64_t seed = 0;

  void validate() const;  // throws on bad values, incl. num_leaves > 2^max_depth
};

struct FeatureSchemaEntry {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<std::string> categories;  // vocabulary frozen at fit time
};

// Expanded (post one-hot) column -> source feature. category < 0 for plain
// numerics.
struct ExpandedFeature {
  int source = 0;
  int category = -1;
};

struct TreeNode {
  bool is_leaf = true;
  double leaf_value = 0.0;
  int feature = -1;  // expanded column index
  double threshold = 0.0;
  bool missing_left = false;
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

class GbdtModel {
 public:
  std::vector<FeatureSchemaEntry> schema;
  std::vector<ExpandedFeature> expanded;
  GbdtParams params;
  double base_score = 0.0;  // log-odds of the training positive rate
  std::vector<Tree> trees;
  std::vector<double> split_gain;  // per expanded column, cumulative

  // Probability in (0,1). Throws Error naming the offending feature on a
  // schema mismatch.
  double predict_row(const Dataset& rows, std::size_t row) const;
  std::vector<double> predict(const Dataset& rows) const;

  std::string to_json() const;  // sorted keys, byte-stable for a fixed fit
  static GbdtModel from_json(const std::string& text);

  void save(const std::string& path) const;
  static GbdtModel load(const std::string& path);
};

// Logistic-loss pointwise gradient/hessian at raw score s with label y:
// g = sigmoid(s) - y, h = p(1-p).
double sigmoid(double s);
double logistic_gradient(double score, double label);
double logistic_hessian(double score);
// Pointwise loss ln(1+e^s) - y*s, computed stably.
double logistic_loss(double score, double label);

struct FitOptions {
  // Optional holdout for early stopping (requires params.early_stopping_rounds).
  const Dataset* valid = nullptr;
  std::span<const int> valid_labels;
};

// Histogram gradient boosting with logistic loss. Deterministic given seed;
// invariant under training-row permutation (rows are canonicalized
// internally before any sampling or aggregation).
GbdtModel fit_gbdt(const Dataset& rows, std::span<const int> labels,
                   const GbdtParams& params, const FitOptions& opts = {});

// Per-source-feature share of total split gain, one-hot columns re-aggregated
// to their parent; sums to 1 (uniform when the model has no gain at all).
std::map<std::string, double> feature_importance_gain(const GbdtModel& model);

}  // namespace xg::gbdt
