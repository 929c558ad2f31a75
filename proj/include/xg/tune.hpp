#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "xg/gbdt.hpp"

namespace xg::gbdt {

// Sampling ranges for the random-search tuner. Rates are log-uniform,
// integer ranges inclusive.
struct SearchSpace {
  double learning_rate_lo = 0.01, learning_rate_hi = 0.3;
  int num_leaves_lo = 15, num_leaves_hi = 255;
  int max_depth_lo = 3, max_depth_hi = 10;
  int min_data_in_leaf_lo = 20, min_data_in_leaf_hi = 200;
  double l2_lambda_lo = 1e-3, l2_lambda_hi = 10.0;
  double feature_fraction_lo = 0.6, feature_fraction_hi = 1.0;
  double bagging_fraction_lo = 0.6, bagging_fraction_hi = 1.0;
  int max_n_estimators = 2000;
  int early_stopping_rounds = 50;
  int max_bins = 256;

  void validate() const;
};

// Strategy interface so a smarter tuner can plug in behind tune(); the
// default is seeded random search.
class TunerStrategy {
 public:
  virtual ~TunerStrategy() = default;
  virtual GbdtParams propose(const SearchSpace& space, int trial,
                             std::mt19937_64& rng) = 0;
  virtual void observe(int /*trial*/, const GbdtParams& /*params*/,
                       double /*mean_valid_loss*/) {}
};

class RandomSearchTuner : public TunerStrategy {
 public:
  GbdtParams propose(const SearchSpace& space, int trial,
                     std::mt19937_64& rng) override;
};

struct TuneTrial {
  GbdtParams params;
  double mean_valid_logloss = 0.0;
  std::vector<int> best_iterations;  // per fold
};

struct TuneResult {
  GbdtParams best;  // n_estimators fixed to the mean per-fold best iteration
  int best_trial = -1;
  std::vector<TuneTrial> trials;
};

// Minimizes mean stratified-k-fold validation log loss over `budget` sampled
// configurations; ties keep the earlier trial. Deterministic given seed.
TuneResult tune(const Dataset& rows, std::span<const int> labels,
                const SearchSpace& space, int budget, int k,
                std::uint64_t seed, TunerStrategy* strategy = nullptr);

// Stratified, seeded fold assignment; every row appears in exactly one fold
// and each fold keeps both classes where counts allow.
std::vector<int> stratified_folds(std::span<const int> labels, int k,
                                  std::uint64_t seed);

struct CvPrediction {
  std::vector<double> preds;        // one out-of-fold prediction per row
  std::vector<int> fold_of_row;     // fold index per row
  std::vector<std::vector<int>> trained_folds;  // per fold-model: folds used
};

// Out-of-fold predictions: row i is predicted by the model whose training
// set excludes fold_of_row[i]. Throws when a training split ends up
// single-class (stratification makes that an extreme-imbalance case).
CvPrediction cross_val_predict(const Dataset& rows, std::span<const int> labels,
                               const GbdtParams& params, int k,
                               std::uint64_t seed);

}  // namespace xg::gbdt
