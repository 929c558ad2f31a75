#include "xg/tune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "xg/metrics.hpp"

namespace xg::gbdt {

void SearchSpace::validate() const {
  if (!(learning_rate_lo > 0.0) || learning_rate_hi < learning_rate_lo)
    throw Error("bad learning_rate range");
  if (num_leaves_lo < 2 || num_leaves_hi < num_leaves_lo)
    throw Error("bad num_leaves range");
  if (max_depth_lo < 1 || max_depth_hi < max_depth_lo)
    throw Error("bad max_depth range");
  if (min_data_in_leaf_lo < 1 || min_data_in_leaf_hi < min_data_in_leaf_lo)
    throw Error("bad min_data_in_leaf range");
  if (!(l2_lambda_lo > 0.0) || l2_lambda_hi < l2_lambda_lo)
    throw Error("bad l2_lambda range");
  if (!(feature_fraction_lo > 0.0) || feature_fraction_hi < feature_fraction_lo ||
      feature_fraction_hi > 1.0)
    throw Error("bad feature_fraction range");
  if (!(bagging_fraction_lo > 0.0) || bagging_fraction_hi < bagging_fraction_lo ||
      bagging_fraction_hi > 1.0)
    throw Error("bad bagging_fraction range");
  if (max_n_estimators < 1) throw Error("max_n_estimators must be positive");
  if (early_stopping_rounds < 0)
    throw Error("early_stopping_rounds must be non-negative");
  if (max_bins < 2 || max_bins > 65534) throw Error("max_bins out of range");
}

GbdtParams RandomSearchTuner::propose(const SearchSpace& space, int /*trial*/,
                                      std::mt19937_64& rng) {
  auto log_uniform = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
  };
  auto uniform_int = [&](int lo, int hi) {
    std::uniform_int_distribution<int> u(lo, hi);
    return u(rng);
  };
  auto uniform = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
  };

  GbdtParams p;
  p.learning_rate = log_uniform(space.learning_rate_lo, space.learning_rate_hi);
  p.max_depth = uniform_int(space.max_depth_lo, space.max_depth_hi);
  const int leaf_cap =
      p.max_depth < 31 ? (1 << p.max_depth) : space.num_leaves_hi;
  const int leaves_hi = std::min(space.num_leaves_hi, leaf_cap);
  const int leaves_lo = std::min(space.num_leaves_lo, leaves_hi);
  p.num_leaves = uniform_int(leaves_lo, leaves_hi);
  p.min_data_in_leaf =
      uniform_int(space.min_data_in_leaf_lo, space.min_data_in_leaf_hi);
  p.l2_lambda = log_uniform(space.l2_lambda_lo, space.l2_lambda_hi);
  p.feature_fraction =
      uniform(space.feature_fraction_lo, space.feature_fraction_hi);
  p.bagging_fraction =
      uniform(space.bagging_fraction_lo, space.bagging_fraction_hi);
  p.n_estimators = space.max_n_estimators;
  p.early_stopping_rounds = space.early_stopping_rounds;
  p.max_bins = space.max_bins;
  return p;
}

std::vector<int> stratified_folds(std::span<const int> labels, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw Error("need at least 2 folds");
  if (labels.empty()) throw Error("no labels");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("labels must be 0 or 1");
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<int> fold(labels.size(), 0);
  for (std::size_t i = 0; i < pos.size(); ++i)
    fold[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < neg.size(); ++i)
    fold[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

namespace {

Dataset dataset_subset(const Dataset& rows,
                       const std::vector<std::size_t>& idx) {
  Dataset out;
  out.columns.reserve(rows.columns.size());
  for (const Column& c : rows.columns) {
    Column sub;
    sub.name = c.name;
    sub.kind = c.kind;
    if (c.kind == FeatureKind::Numeric) {
      sub.numeric.reserve(idx.size());
      for (std::size_t i : idx) sub.numeric.push_back(c.numeric[i]);
    } else {
      sub.categorical.reserve(idx.size());
      for (std::size_t i : idx) sub.categorical.push_back(c.categorical[i]);
    }
    out.columns.push_back(std::move(sub));
  }
  return out;
}

std::vector<int> labels_subset(std::span<const int> labels,
                               const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

void check_both_classes(std::span<const int> labels, int fold) {
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  if (pos == 0 || pos == labels.size())
    throw Error(fmt::format("fold {}: training split has a single class", fold));
}

}  // namespace

TuneResult tune(const Dataset& rows, std::span<const int> labels,
                const SearchSpace& space, int budget, int k,
                std::uint64_t seed, TunerStrategy* strategy) {
  space.validate();
  if (budget < 1) throw Error("budget must be positive");
  if (rows.n_rows() != labels.size()) throw Error("labels size mismatch");

  RandomSearchTuner fallback;
  TunerStrategy* tuner = strategy ? strategy : &fallback;

  const std::vector<int> fold_of_row = stratified_folds(labels, k, seed);
  std::vector<std::vector<std::size_t>> fold_rows(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    fold_rows[static_cast<std::size_t>(fold_of_row[i])].push_back(i);

  std::mt19937_64 rng(seed);
  TuneResult result;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int trial = 0; trial < budget; ++trial) {
    TuneTrial record;
    record.params = tuner->propose(space, trial, rng);
    record.params.seed = seed;

    double loss_sum = 0.0;
    for (int f = 0; f < k; ++f) {
      std::vector<std::size_t> train_idx;
      for (std::size_t i = 0; i < fold_of_row.size(); ++i)
        if (fold_of_row[i] != f) train_idx.push_back(i);
      const Dataset train = dataset_subset(rows, train_idx);
      const std::vector<int> train_y = labels_subset(labels, train_idx);
      check_both_classes(train_y, f);
      const Dataset valid =
          dataset_subset(rows, fold_rows[static_cast<std::size_t>(f)]);
      const std::vector<int> valid_y =
          labels_subset(labels, fold_rows[static_cast<std::size_t>(f)]);

      FitOptions opts;
      opts.valid = &valid;
      opts.valid_labels = valid_y;
      const GbdtModel model = fit_gbdt(train, train_y, record.params, opts);
      const std::vector<double> preds = model.predict(valid);
      loss_sum += log_loss(preds, valid_y);
      record.best_iterations.push_back(static_cast<int>(model.trees.size()));
    }
    record.mean_valid_logloss = loss_sum / static_cast<double>(k);
    tuner->observe(trial, record.params, record.mean_valid_logloss);

    if (record.mean_valid_logloss < best_loss) {
      best_loss = record.mean_valid_logloss;
      result.best_trial = trial;
    }
    result.trials.push_back(std::move(record));
  }

  const TuneTrial& winner =
      result.trials[static_cast<std::size_t>(result.best_trial)];
  result.best = winner.params;
  double mean_iters = 0.0;
  for (int it : winner.best_iterations) mean_iters += it;
  mean_iters /= static_cast<double>(winner.best_iterations.size());
  result.best.n_estimators =
      std::max(1, static_cast<int>(std::llround(mean_iters)));
  result.best.early_stopping_rounds = 0;
  return result;
}

CvPrediction cross_val_predict(const Dataset& rows, std::span<const int> labels,
                               const GbdtParams& params, int k,
                               std::uint64_t seed) {
  if (rows.n_rows() != labels.size()) throw Error("labels size mismatch");
  CvPrediction cv;
  cv.fold_of_row = stratified_folds(labels, k, seed);
  cv.preds.assign(labels.size(), 0.0);
  cv.trained_folds.resize(static_cast<std::size_t>(k));

  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < cv.fold_of_row.size(); ++i)
      (cv.fold_of_row[i] == f ? test_idx : train_idx).push_back(i);
    for (int other = 0; other < k; ++other)
      if (other != f)
        cv.trained_folds[static_cast<std::size_t>(f)].push_back(other);

    const Dataset train = dataset_subset(rows, train_idx);
    const std::vector<int> train_y = labels_subset(labels, train_idx);
    check_both_classes(train_y, f);

    GbdtParams fold_params = params;
    fold_params.early_stopping_rounds = 0;
    const GbdtModel model = fit_gbdt(train, train_y, fold_params);

    const Dataset test = dataset_subset(rows, test_idx);
    const std::vector<double> preds = model.predict(test);
    for (std::size_t j = 0; j < test_idx.size(); ++j)
      cv.preds[test_idx[j]] = preds[j];
  }
  return cv;
}

}  // namespace xg::gbdt
