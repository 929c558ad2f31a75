#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "support/test_support.hpp"
#include "xg/gbdt.hpp"

using namespace xg;
using namespace xg::gbdt;
using xg::testsup::TempDir;
using xg::testsup::ref_auc;
using xg::testsup::ref_best_split_gain;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Column num_col(std::string name, std::vector<double> v) {
  Column c;
  c.name = std::move(name);
  c.numeric = std::move(v);
  return c;
}

Column cat_col(std::string name, std::vector<std::string> v) {
  Column c;
  c.name = std::move(name);
  c.kind = FeatureKind::Categorical;
  c.categorical = std::move(v);
  return c;
}

double mean_logloss(const std::vector<double>& p, const std::vector<int>& y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    sum += y[i] == 1 ? -std::log(p[i]) : -std::log(1.0 - p[i]);
  return sum / static_cast<double>(p.size());
}

// two noisy numerics driving a smooth logit, plus labels
struct NoisyProblem {
  Dataset data;
  std::vector<int> labels;
};

NoisyProblem noisy_problem(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x1(n), x2(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = unit(rng);
    x2[i] = unit(rng);
    const double p = sigmoid(3.0 * (x1[i] - x2[i]));
    y[i] = unit(rng) < p ? 1 : 0;
  }
  NoisyProblem out;
  out.data.columns = {num_col("x1", std::move(x1)), num_col("x2", std::move(x2))};
  out.labels = std::move(y);
  return out;
}

}  // namespace

TEST_CASE("logistic primitives match finite differences") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(logistic_gradient(0.0, 1.0) == doctest::Approx(-0.5));
  CHECK(logistic_gradient(0.0, 0.0) == doctest::Approx(0.5));

  const double h = 1e-6;
  for (double s : {-8.0, -3.0, -0.7, 0.0, 0.4, 2.0, 6.0}) {
    CHECK(sigmoid(-s) == doctest::Approx(1.0 - sigmoid(s)).epsilon(1e-12));
    for (double y : {0.0, 1.0}) {
      const double fd_grad =
          (logistic_loss(s + h, y) - logistic_loss(s - h, y)) / (2.0 * h);
      CHECK(std::fabs(logistic_gradient(s, y) - fd_grad) < 1e-6);
    }
    const double fd_hess =
        (logistic_gradient(s + h, 0.0) - logistic_gradient(s - h, 0.0)) /
        (2.0 * h);
    CHECK(std::fabs(logistic_hessian(s) - fd_hess) < 1e-6);
  }

  // large scores must not overflow through exp
  CHECK(std::isfinite(logistic_loss(700.0, 0.0)));
  CHECK(logistic_loss(700.0, 0.0) == doctest::Approx(700.0));
  CHECK(logistic_loss(-700.0, 1.0) == doctest::Approx(700.0));
  CHECK(logistic_loss(-700.0, 0.0) == doctest::Approx(0.0));
  CHECK(logistic_loss(700.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("parameter validation") {
  GbdtParams p;
  CHECK_NOTHROW(p.validate());

  GbdtParams bad = p;
  bad.num_leaves = 32;
  bad.max_depth = 4;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.max_depth = 5;
  CHECK_NOTHROW(bad.validate());

  bad = p;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.max_bins = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.feature_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.min_data_in_leaf = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fit rejects degenerate inputs") {
  Dataset d;
  d.columns = {num_col("x", {1.0, 2.0, 3.0, 4.0})};
  GbdtParams params;
  params.n_estimators = 5;

  CHECK_THROWS_AS(fit_gbdt(d, std::vector<int>{1, 1, 1, 1}, params), Error);
  CHECK_THROWS_AS(fit_gbdt(d, std::vector<int>{0, 0, 0, 0}, params), Error);
  CHECK_THROWS_AS(fit_gbdt(d, std::vector<int>{0, 1, 1}, params), Error);
  CHECK_THROWS_AS(fit_gbdt(d, std::vector<int>{0, 1, 2, 1}, params), Error);

  GbdtParams es = params;
  es.early_stopping_rounds = 5;
  CHECK_THROWS_AS(fit_gbdt(d, std::vector<int>{0, 1, 0, 1}, es), Error);
}

TEST_CASE("constant features give the base rate and no splits") {
  const std::size_t n = 100;
  Dataset d;
  d.columns = {num_col("x", std::vector<double>(n, 7.0)),
               cat_col("c", std::vector<std::string>(n, "same"))};
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < 27; ++i) y[i] = 1;

  GbdtParams params;
  params.n_estimators = 20;
  const GbdtModel model = fit_gbdt(d, y, params);

  CHECK(model.base_score == doctest::Approx(std::log(27.0 / 73.0)));
  const auto preds = model.predict(d);
  for (double p : preds) CHECK(p == doctest::Approx(0.27).epsilon(1e-12));

  for (double g : model.split_gain) CHECK(g == 0.0);
  const auto importance = feature_importance_gain(model);
  REQUIRE(importance.size() == 2);
  CHECK(importance.at("x") == doctest::Approx(0.5));
  CHECK(importance.at("c") == doctest::Approx(0.5));
}

TEST_CASE("hand-built trees route rows as written") {
  GbdtModel model;
  model.base_score = 0.2;

  SUBCASE("no trees means the base score alone") {
    model.schema = {{"x", FeatureKind::Numeric, {}}};
    model.expanded = {{0, -1}};
    model.split_gain = {0.0};
    Dataset d;
    d.columns = {num_col("x", {1.0, kNaN})};
    const auto preds = model.predict(d);
    CHECK(preds[0] == sigmoid(0.2));
    CHECK(preds[1] == sigmoid(0.2));
  }

  SUBCASE("numeric split with missing routed left") {
    model.schema = {{"x", FeatureKind::Numeric, {}}};
    model.expanded = {{0, -1}};
    model.split_gain = {1.0};
    Tree t;
    t.nodes.resize(3);
    t.nodes[0] = {false, 0.0, 0, 5.0, true, 1, 2};
    t.nodes[1] = {true, 0.75, -1, 0.0, false, -1, -1};
    t.nodes[2] = {true, -0.25, -1, 0.0, false, -1, -1};
    model.trees = {t};

    Dataset d;
    d.columns = {num_col("x", {3.0, 5.0, 7.0, kNaN})};
    const auto preds = model.predict(d);
    CHECK(preds[0] == sigmoid(0.2 + 0.75));  // below the threshold
    CHECK(preds[1] == sigmoid(0.2 + 0.75));  // at the threshold: left
    CHECK(preds[2] == sigmoid(0.2 - 0.25));
    CHECK(preds[3] == sigmoid(0.2 + 0.75));  // missing follows missing_left
  }

  SUBCASE("one-hot split separates a single category") {
    model.schema = {{"shot", FeatureKind::Categorical, {"Slap", "Wrist"}}};
    model.expanded = {{0, 0}, {0, 1}};
    model.split_gain = {0.0, 1.0};
    Tree t;
    t.nodes.resize(3);
    // splits on the "Wrist" indicator; missing goes right
    t.nodes[0] = {false, 0.0, 1, 0.5, false, 1, 2};
    t.nodes[1] = {true, -0.5, -1, 0.0, false, -1, -1};
    t.nodes[2] = {true, 0.5, -1, 0.0, false, -1, -1};
    model.trees = {t};

    Dataset d;
    d.columns = {cat_col("shot", {"Wrist", "Slap", "", "Deflected"})};
    const auto preds = model.predict(d);
    CHECK(preds[0] == sigmoid(0.2 + 0.5));  // indicator 1 > threshold
    CHECK(preds[1] == sigmoid(0.2 - 0.5));
    CHECK(preds[2] == sigmoid(0.2 + 0.5));  // empty cell is missing
    CHECK(preds[3] == sigmoid(0.2 + 0.5));  // unseen value treated as missing
  }

  SUBCASE("prediction names the offending feature on schema mismatch") {
    model.schema = {{"x", FeatureKind::Numeric, {}}};
    model.expanded = {{0, -1}};
    model.split_gain = {0.0};
    Dataset wrong;
    wrong.columns = {num_col("other", {1.0})};
    try {
      static_cast<void>(model.predict(wrong));
      FAIL("expected a schema error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
    Dataset wrong_kind;
    wrong_kind.columns = {cat_col("x", {"a"})};
    CHECK_THROWS_AS(static_cast<void>(model.predict(wrong_kind)), Error);
  }
}

TEST_CASE("batch prediction equals the serial per-row loop") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 300;
  std::vector<double> x(n);
  std::vector<std::string> c(n);
  std::vector<int> y(n);
  const std::vector<std::string> cats = {"a", "b", "c", ""};
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = unit(rng) < 0.1 ? kNaN : unit(rng);
    c[i] = cats[rng() % cats.size()];
    y[i] = unit(rng) < (c[i] == "a" ? 0.7 : 0.3) ? 1 : 0;
  }
  Dataset d;
  d.columns = {num_col("x", x), cat_col("c", c)};

  GbdtParams params;
  params.n_estimators = 30;
  params.max_depth = 4;
  params.num_leaves = 15;
  params.min_data_in_leaf = 5;
  const GbdtModel model = fit_gbdt(d, y, params);

  const auto batch = model.predict(d);
  REQUIRE(batch.size() == n);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(batch[i] == model.predict_row(d, i));
  CHECK_THROWS_AS(static_cast<void>(model.predict_row(d, n)), Error);
}

TEST_CASE("separable data trains to a near-perfect holdout ranking") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto make = [&](std::size_t n) {
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = unit(rng);
      y[i] = x[i] > 0.55 ? 1 : 0;
    }
    Dataset d;
    d.columns = {num_col("x", std::move(x))};
    return std::pair(std::move(d), std::move(y));
  };

  auto [train, train_y] = make(2000);
  auto [holdout, holdout_y] = make(500);

  GbdtParams params;
  params.n_estimators = 60;
  params.learning_rate = 0.2;
  params.max_depth = 3;
  params.num_leaves = 8;
  params.min_data_in_leaf = 5;
  const GbdtModel model = fit_gbdt(train, train_y, params);

  const auto preds = model.predict(holdout);
  CHECK(ref_auc(preds, holdout_y) >= 0.99);

  const double base = sigmoid(model.base_score);
  std::vector<double> base_preds(train_y.size(), base);
  CHECK(mean_logloss(model.predict(train), train_y) <
        mean_logloss(base_preds, train_y));
}

TEST_CASE("training loss never rises across boosting rounds") {
  NoisyProblem prob = noisy_problem(600, 99);

  GbdtParams params;
  params.n_estimators = 25;
  params.learning_rate = 0.1;
  params.max_depth = 3;
  params.num_leaves = 8;
  params.min_data_in_leaf = 10;
  const GbdtModel fitted = fit_gbdt(prob.data, prob.labels, params);
  REQUIRE(!fitted.trees.empty());

  GbdtModel probe = fitted;
  probe.trees.clear();
  double prev = mean_logloss(probe.predict(prob.data), prob.labels);
  for (std::size_t r = 0; r < fitted.trees.size(); ++r) {
    probe.trees.push_back(fitted.trees[r]);
    const double cur = mean_logloss(probe.predict(prob.data), prob.labels);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("first split matches a brute-force scan") {
  std::mt19937_64 rng(7001);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 30 + rng() % 35;
    std::vector<double> x(n);
    std::vector<int> y(n);
    std::size_t pos = 0;
    do {
      pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng() % 10);
        y[i] = static_cast<int>(rng() % 2);
        pos += static_cast<std::size_t>(y[i]);
      }
    } while (pos == 0 || pos == n);

    Dataset d;
    d.columns = {num_col("x", x)};
    GbdtParams params;
    params.n_estimators = 1;
    params.learning_rate = 1.0;
    params.max_depth = 1;
    params.num_leaves = 2;
    params.min_data_in_leaf = 1;
    const GbdtModel model = fit_gbdt(d, y, params);

    // round-0 gradients are flat: every row starts at the base score
    const double p0 = static_cast<double>(pos) / static_cast<double>(n);
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = p0 - static_cast<double>(y[i]);
      h[i] = p0 * (1.0 - p0);
    }
    const double want_gain =
        ref_best_split_gain(x, g, h, params.l2_lambda, 1);

    REQUIRE(model.split_gain.size() == 1);
    CHECK(model.split_gain[0] == doctest::Approx(want_gain).epsilon(1e-9));

    if (want_gain > 0.0) {
      REQUIRE(model.trees.size() == 1);
      const Tree& t = model.trees[0];
      REQUIRE(!t.nodes[0].is_leaf);
      // the leaves hold the exact Newton step for their side
      double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= t.nodes[0].threshold) {
          gl += g[i];
          hl += h[i];
        } else {
          gr += g[i];
          hr += h[i];
        }
      }
      const auto& left = t.nodes[static_cast<std::size_t>(t.nodes[0].left)];
      const auto& right = t.nodes[static_cast<std::size_t>(t.nodes[0].right)];
      CHECK(left.leaf_value ==
            doctest::Approx(-gl / (hl + params.l2_lambda)).epsilon(1e-12));
      CHECK(right.leaf_value ==
            doctest::Approx(-gr / (hr + params.l2_lambda)).epsilon(1e-12));
    }

    // a tight leaf floor must be respected by both scans
    GbdtParams floored = params;
    floored.min_data_in_leaf = static_cast<int>(n / 2 - 2);
    const GbdtModel fm = fit_gbdt(d, y, floored);
    const double floored_want = ref_best_split_gain(
        x, g, h, params.l2_lambda, static_cast<std::size_t>(n / 2 - 2));
    CHECK(fm.split_gain[0] == doctest::Approx(floored_want).epsilon(1e-9));
  }
}

TEST_CASE("fit is deterministic and invariant to row order") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 400;
  std::vector<double> x1(n), x2(n);
  std::vector<std::string> c(n);
  std::vector<int> y(n);
  const std::vector<std::string> cats = {"l", "m", "r", ""};
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = unit(rng) < 0.05 ? kNaN : unit(rng);
    x2[i] = unit(rng);
    c[i] = cats[rng() % cats.size()];
    const double p = sigmoid(2.0 * x2[i] - 1.0 + (c[i] == "l" ? 0.8 : 0.0));
    y[i] = unit(rng) < p ? 1 : 0;
  }
  Dataset d;
  d.columns = {num_col("x1", x1), num_col("x2", x2), cat_col("c", c)};

  GbdtParams params;
  params.n_estimators = 15;
  params.max_depth = 4;
  params.num_leaves = 12;
  params.min_data_in_leaf = 8;
  params.feature_fraction = 0.8;
  params.bagging_fraction = 0.8;
  params.seed = 42;

  const std::string first = fit_gbdt(d, y, params).to_json();
  CHECK(fit_gbdt(d, y, params).to_json() == first);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset shuffled;
  shuffled.columns = {num_col("x1", {}), num_col("x2", {}), cat_col("c", {})};
  std::vector<int> y_shuffled(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.columns[0].numeric.push_back(x1[perm[i]]);
    shuffled.columns[1].numeric.push_back(x2[perm[i]]);
    shuffled.columns[2].categorical.push_back(c[perm[i]]);
    y_shuffled[i] = y[perm[i]];
  }
  CHECK(fit_gbdt(shuffled, y_shuffled, params).to_json() == first);
}

TEST_CASE("model json round trips byte for byte") {
  NoisyProblem prob = noisy_problem(200, 5);
  GbdtParams params;
  params.n_estimators = 8;
  params.max_depth = 3;
  params.num_leaves = 6;
  params.min_data_in_leaf = 10;
  const GbdtModel model = fit_gbdt(prob.data, prob.labels, params);

  const std::string text = model.to_json();
  const GbdtModel parsed = GbdtModel::from_json(text);
  CHECK(parsed.to_json() == text);

  const auto a = model.predict(prob.data);
  const auto b = parsed.predict(prob.data);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  TempDir tmp;
  const std::string path = tmp.file("model.json");
  model.save(path);
  const GbdtModel loaded = GbdtModel::load(path);
  CHECK(loaded.to_json() == text);

  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  std::string wrong = text;
  wrong.replace(pos, 12, "\"version\": 2");
  CHECK_THROWS_AS(GbdtModel::from_json(wrong), Error);
  CHECK_THROWS_AS(GbdtModel::from_json("not json"), Error);
}

TEST_CASE("gain importance aggregates one-hot columns to their source") {
  GbdtModel model;
  model.schema = {{"x", FeatureKind::Numeric, {}},
                  {"c", FeatureKind::Categorical, {"a", "b"}}};
  model.expanded = {{0, -1}, {1, 0}, {1, 1}};
  model.split_gain = {1.0, 0.5, 0.5};

  const auto importance = feature_importance_gain(model);
  REQUIRE(importance.size() == 2);
  CHECK(importance.at("x") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(importance.at("c") == doctest::Approx(0.5).epsilon(1e-12));

  model.split_gain = {3.0, 1.0, 0.0};
  const auto skewed = feature_importance_gain(model);
  CHECK(skewed.at("x") == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(skewed.at("c") == doctest::Approx(0.25).epsilon(1e-12));

  double total = 0.0;
  for (const auto& [name, share] : skewed) total += share;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("early stopping keeps exactly the best prefix") {
  NoisyProblem train = noisy_problem(800, 17);
  NoisyProblem valid = noisy_problem(400, 18);

  GbdtParams params;
  params.n_estimators = 200;
  params.learning_rate = 0.3;
  params.max_depth = 4;
  params.num_leaves = 16;
  params.min_data_in_leaf = 5;
  params.early_stopping_rounds = 5;

  FitOptions opts;
  opts.valid = &valid.data;
  opts.valid_labels = valid.labels;
  const GbdtModel stopped = fit_gbdt(train.data, train.labels, params, opts);
  REQUIRE(!stopped.trees.empty());
  CHECK(stopped.trees.size() < 200);

  // the same fit without stopping walks the identical tree sequence
  GbdtParams full = params;
  full.early_stopping_rounds = 0;
  full.n_estimators = static_cast<int>(stopped.trees.size());
  const GbdtModel prefix = fit_gbdt(train.data, train.labels, full);
  const auto a = stopped.predict(valid.data);
  const auto b = prefix.predict(valid.data);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // and the kept prefix scores no worse than running all 200 rounds
  GbdtParams overfit = params;
  overfit.early_stopping_rounds = 0;
  const GbdtModel all_rounds = fit_gbdt(train.data, train.labels, overfit);
  CHECK(mean_logloss(stopped.predict(valid.data), valid.labels) <=
        mean_logloss(all_rounds.predict(valid.data), valid.labels) + 1e-12);
}
