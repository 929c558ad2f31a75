#include "xg/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/core.h>
#include <json.hpp>

#include "xg/io.hpp"
#include "xg/parallel.hpp"

namespace xg::gbdt {

using nlohmann::json;

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

double logistic_gradient(double score, double label) {
  return sigmoid(score) - label;
}

double logistic_hessian(double score) {
  const double p = sigmoid(score);
  return p * (1.0 - p);
}

double logistic_loss(double score, double label) {
  // ln(1 + e^s) - y*s without overflow for large |s|
  const double softplus =
      score > 0.0 ? score + std::log1p(std::exp(-score))
                  : std::log1p(std::exp(score));
  return softplus - label * score;
}

const Column* Dataset::find(const std::string& name) const {
  for (const Column& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

void GbdtParams::validate() const {
  if (n_estimators < 1) throw Error("n_estimators must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (max_depth < 1) throw Error("max_depth must be positive");
  if (num_leaves < 2) throw Error("num_leaves must be at least 2");
  if (max_depth < 31 && num_leaves > (1 << max_depth))
    throw Error(fmt::format("num_leaves {} exceeds 2^max_depth {}", num_leaves,
                            1 << max_depth));
  if (min_data_in_leaf < 1) throw Error("min_data_in_leaf must be positive");
  if (!(l2_lambda > 0.0)) throw Error("l2_lambda must be positive");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
    throw Error("feature_fraction must be in (0,1]");
  if (!(bagging_fraction > 0.0 && bagging_fraction <= 1.0))
    throw Error("bagging_fraction must be in (0,1]");
  if (max_bins < 2 || max_bins > 65534) throw Error("max_bins out of range");
  if (early_stopping_rounds < 0)
    throw Error("early_stopping_rounds must be non-negative");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 1)));
}

struct ExpandedMatrix {
  std::size_t n = 0;
  // column-major, NaN = missing; one-hot columns are 0/1/NaN
  std::vector<std::vector<double>> cols;
};

std::vector<FeatureSchemaEntry> build_schema(const Dataset& rows) {
  if (rows.columns.empty()) throw Error("empty feature matrix");
  const std::size_t n = rows.n_rows();
  std::vector<FeatureSchemaEntry> schema;
  for (const Column& c : rows.columns) {
    if (c.name.empty()) throw Error("unnamed feature column");
    if (c.size() != n)
      throw Error(fmt::format("column {} has {} rows, expected {}", c.name,
                              c.size(), n));
    FeatureSchemaEntry e;
    e.name = c.name;
    e.kind = c.kind;
    if (c.kind == FeatureKind::Categorical) {
      std::vector<std::string> vocab;
      for (const std::string& v : c.categorical)
        if (!v.empty()) vocab.push_back(v);
      std::sort(vocab.begin(), vocab.end());
      vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
      if (vocab.empty())
        throw Error(fmt::format("categorical column {} has no values", c.name));
      e.categories = std::move(vocab);
    }
    schema.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < schema.size(); ++i)
    for (std::size_t j = i + 1; j < schema.size(); ++j)
      if (schema[i].name == schema[j].name)
        throw Error(fmt::format("duplicate feature column {}", schema[i].name));
  return schema;
}

std::vector<ExpandedFeature> expand_schema(
    const std::vector<FeatureSchemaEntry>& schema) {
  std::vector<ExpandedFeature> expanded;
  for (std::size_t s = 0; s < schema.size(); ++s) {
    if (schema[s].kind == FeatureKind::Numeric) {
      expanded.push_back({static_cast<int>(s), -1});
    } else {
      for (std::size_t c = 0; c < schema[s].categories.size(); ++c)
        expanded.push_back({static_cast<int>(s), static_cast<int>(c)});
    }
  }
  return expanded;
}

ExpandedMatrix expand_values(const Dataset& rows,
                             const std::vector<FeatureSchemaEntry>& schema,
                             const std::vector<ExpandedFeature>& expanded) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  ExpandedMatrix m;
  m.n = rows.n_rows();
  m.cols.resize(expanded.size());

  // per-source categorical code: -1 = missing or unseen
  std::vector<std::vector<int>> codes(schema.size());
  std::vector<const Column*> cols(schema.size());
  for (std::size_t s = 0; s < schema.size(); ++s) {
    const Column* c = rows.find(schema[s].name);
    if (!c) throw Error(fmt::format("feature {} missing from input",
                                    schema[s].name));
    if (c->kind != schema[s].kind)
      throw Error(fmt::format("feature {} has the wrong kind", schema[s].name));
    if (c->size() != m.n)
      throw Error(fmt::format("column {} has {} rows, expected {}",
                              schema[s].name, c->size(), m.n));
    cols[s] = c;
    if (schema[s].kind == FeatureKind::Categorical) {
      codes[s].resize(m.n, -1);
      const auto& vocab = schema[s].categories;
      for (std::size_t i = 0; i < m.n; ++i) {
        const std::string& cell = c->categorical[i];
        if (cell.empty()) continue;
        const auto it = std::lower_bound(vocab.begin(), vocab.end(), cell);
        if (it != vocab.end() && *it == cell)
          codes[s][i] = static_cast<int>(it - vocab.begin());
      }
    }
  }

  for (std::size_t e = 0; e < expanded.size(); ++e) {
    std::vector<double>& out = m.cols[e];
    out.resize(m.n);
    const std::size_t s = static_cast<std::size_t>(expanded[e].source);
    if (expanded[e].category < 0) {
      out = cols[s]->numeric;
    } else {
      for (std::size_t i = 0; i < m.n; ++i) {
        const int code = codes[s][i];
        out[i] = code < 0 ? kNaN : (code == expanded[e].category ? 1.0 : 0.0);
      }
    }
  }
  return m;
}

// lexicographic by expanded values with missing last, then label; makes every
// later aggregation independent of the caller's row order
std::vector<std::size_t> canonical_order(const ExpandedMatrix& m,
                                         std::span<const int> labels) {
  std::vector<std::size_t> order(m.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (const std::vector<double>& col : m.cols) {
      const double va = col[a];
      const double vb = col[b];
      const bool na = std::isnan(va);
      const bool nb = std::isnan(vb);
      if (na != nb) return nb;  // missing sorts after present
      if (!na && va != vb) return va < vb;
    }
    return labels[a] < labels[b];
  });
  return order;
}

struct BinnedFeature {
  std::vector<double> split_values;  // upper edge of each left-of-cut bin
  std::uint16_t n_bins = 0;          // real bins; missing bin id == n_bins
};

BinnedFeature bin_feature(const std::vector<double>& values, int max_bins) {
  std::vector<double> present;
  present.reserve(values.size());
  for (double v : values)
    if (!std::isnan(v)) present.push_back(v);
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());

  BinnedFeature b;
  const std::size_t max_cuts = static_cast<std::size_t>(max_bins - 1);
  if (present.size() <= max_cuts) {
    b.split_values = std::move(present);
  } else {
    // quantile cuts over the distinct values
    for (std::size_t j = 1; j <= max_cuts; ++j) {
      const std::size_t rank =
          j * present.size() / (max_cuts + 1);
      b.split_values.push_back(present[std::min(rank, present.size() - 1)]);
    }
    b.split_values.erase(
        std::unique(b.split_values.begin(), b.split_values.end()),
        b.split_values.end());
  }
  b.n_bins = static_cast<std::uint16_t>(b.split_values.size() + 1);
  return b;
}

std::uint16_t bin_index(const BinnedFeature& b, double v) {
  if (std::isnan(v)) return b.n_bins;  // missing bin
  const auto it =
      std::lower_bound(b.split_values.begin(), b.split_values.end(), v);
  return static_cast<std::uint16_t>(it - b.split_values.begin());
}

struct SplitInfo {
  double gain = 0.0;
  int feature = -1;  // expanded index
  int bin = -1;      // route left iff bin <= this
  bool missing_left = false;
  double gl = 0.0, hl = 0.0;
  double gr = 0.0, hr = 0.0;
  std::size_t cl = 0, cr = 0;
};

struct Hist {
  std::vector<double> g;
  std::vector<double> h;
  std::vector<std::uint32_t> c;

  void reset(std::size_t total) {
    g.assign(total, 0.0);
    h.assign(total, 0.0);
    c.assign(total, 0);
  }
};

struct LeafState {
  int node = -1;
  std::size_t lo = 0, hi = 0;  // range in the partition array
  int depth = 0;
  double g = 0.0, h = 0.0;
  int seq = 0;
  Hist hist;
  SplitInfo best;
};

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                g * g / (h + lambda));
}

}  // namespace

GbdtModel fit_gbdt(const Dataset& rows, std::span<const int> labels,
                   const GbdtParams& params, const FitOptions& opts) {
  params.validate();
  const std::size_t n = rows.n_rows();
  if (n < 2) throw Error("need at least 2 rows");
  if (labels.size() != n) throw Error("labels size mismatch");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == n) throw Error("single-class labels");
  if (params.early_stopping_rounds > 0 && !opts.valid)
    throw Error("early stopping requires a holdout");
  if (opts.valid && opts.valid_labels.size() != opts.valid->n_rows())
    throw Error("holdout labels size mismatch");

  GbdtModel model;
  model.schema = build_schema(rows);
  model.expanded = expand_schema(model.schema);
  model.params = params;
  model.base_score = std::log(static_cast<double>(pos) /
                              static_cast<double>(n - pos));
  const std::size_t n_expanded = model.expanded.size();
  model.split_gain.assign(n_expanded, 0.0);

  const ExpandedMatrix raw = expand_values(rows, model.schema, model.expanded);
  const std::vector<std::size_t> order = canonical_order(raw, labels);

  // (expanded feature, gain) per applied split, grouped by round, so the
  // importances can be rebuilt if early stopping discards trailing trees
  std::vector<std::vector<std::pair<std::size_t, double>>> gain_records;

  // everything below works in canonical row order
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[order[i]];

  std::vector<BinnedFeature> binned(n_expanded);
  std::vector<std::uint16_t> bins(n_expanded * n);
  parallel_for(static_cast<std::ptrdiff_t>(n_expanded), [&](std::ptrdiff_t e) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = raw.cols[static_cast<std::size_t>(e)][order[i]];
    binned[static_cast<std::size_t>(e)] =
        bin_feature(col, params.max_bins);
    std::uint16_t* out = bins.data() + static_cast<std::size_t>(e) * n;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = bin_index(binned[static_cast<std::size_t>(e)], col[i]);
  });

  std::vector<std::size_t> hist_offset(n_expanded + 1, 0);
  for (std::size_t e = 0; e < n_expanded; ++e)
    hist_offset[e + 1] = hist_offset[e] + binned[e].n_bins + 1;  // +missing
  const std::size_t total_bins = hist_offset[n_expanded];

  // holdout, expanded against the training schema
  ExpandedMatrix valid;
  std::vector<double> valid_scores;
  if (opts.valid) {
    valid = expand_values(*opts.valid, model.schema, model.expanded);
    valid_scores.assign(valid.n, model.base_score);
  }

  std::vector<double> scores(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<std::size_t> partition(n);
  std::vector<std::size_t> scratch(n);

  const std::size_t bag_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(params.bagging_fraction *
                                  static_cast<double>(n)));
  const std::size_t active_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(params.feature_fraction *
                                  static_cast<double>(n_expanded)));

  double best_valid_loss = std::numeric_limits<double>::infinity();
  int best_round = -1;
  int rounds_since_best = 0;

  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<std::size_t> all_features(n_expanded);
  std::iota(all_features.begin(), all_features.end(), 0);

  for (int round = 0; round < params.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      grad[i] = p - static_cast<double>(y[i]);
      hess[i] = p * (1.0 - p);
    }

    std::mt19937_64 round_rng(mix(params.seed, static_cast<std::uint64_t>(round)));
    std::vector<std::size_t> bag;
    if (bag_size == n) {
      bag = all_rows;
    } else {
      std::vector<std::size_t> idx = all_rows;
      std::shuffle(idx.begin(), idx.end(), round_rng);
      bag.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(bag_size));
      std::sort(bag.begin(), bag.end());
    }
    std::vector<std::size_t> active;
    if (active_size == n_expanded) {
      active = all_features;
    } else {
      std::vector<std::size_t> idx = all_features;
      std::shuffle(idx.begin(), idx.end(), round_rng);
      active.assign(idx.begin(),
                    idx.begin() + static_cast<std::ptrdiff_t>(active_size));
      std::sort(active.begin(), active.end());
    }

    std::copy(bag.begin(), bag.end(), partition.begin());

    Tree tree;
    tree.nodes.push_back(TreeNode{});
    gain_records.emplace_back();

    auto build_hist = [&](const LeafState& leaf, Hist& out) {
      out.reset(total_bins);
      parallel_for(static_cast<std::ptrdiff_t>(active.size()),
                   [&](std::ptrdiff_t a) {
        const std::size_t e = active[static_cast<std::size_t>(a)];
        const std::uint16_t* feature_bins = bins.data() + e * n;
        double* hg = out.g.data() + hist_offset[e];
        double* hh = out.h.data() + hist_offset[e];
        std::uint32_t* hc = out.c.data() + hist_offset[e];
        for (std::size_t k = leaf.lo; k < leaf.hi; ++k) {
          const std::size_t row = partition[k];
          const std::uint16_t b = feature_bins[row];
          hg[b] += grad[row];
          hh[b] += hess[row];
          hc[b] += 1;
        }
      });
    };

    auto find_best = [&](LeafState& leaf) {
      leaf.best = SplitInfo{};
      if (leaf.depth >= params.max_depth) return;
      if (leaf.hi - leaf.lo <
          2 * static_cast<std::size_t>(params.min_data_in_leaf))
        return;
      std::vector<SplitInfo> per_feature(active.size());
      parallel_for(static_cast<std::ptrdiff_t>(active.size()),
                   [&](std::ptrdiff_t a) {
        const std::size_t e = active[static_cast<std::size_t>(a)];
        const BinnedFeature& bf = binned[e];
        const double* hg = leaf.hist.g.data() + hist_offset[e];
        const double* hh = leaf.hist.h.data() + hist_offset[e];
        const std::uint32_t* hc = leaf.hist.c.data() + hist_offset[e];
        const double gm = hg[bf.n_bins];
        const double hm = hh[bf.n_bins];
        const std::size_t cm = hc[bf.n_bins];
        const double gt = leaf.g;
        const double ht = leaf.h;
        const std::size_t ct = leaf.hi - leaf.lo;
        const std::size_t min_leaf =
            static_cast<std::size_t>(params.min_data_in_leaf);

        SplitInfo best;
        double gl0 = 0.0, hl0 = 0.0;
        std::size_t cl0 = 0;
        for (int k = 0; k + 1 < static_cast<int>(bf.n_bins); ++k) {
          gl0 += hg[k];
          hl0 += hh[k];
          cl0 += hc[k];
          // missing right, then missing left; strictly-greater updates
          for (int variant = 0; variant < 2; ++variant) {
            const bool miss_left = variant == 1;
            const double gl = miss_left ? gl0 + gm : gl0;
            const double hl = miss_left ? hl0 + hm : hl0;
            const std::size_t cl = miss_left ? cl0 + cm : cl0;
            const std::size_t cr = ct - cl;
            if (cl < min_leaf || cr < min_leaf) continue;
            const double gain = split_gain(gl, hl, gt - gl, ht - hl,
                                           params.l2_lambda);
            if (gain > best.gain) {
              best.gain = gain;
              best.feature = static_cast<int>(e);
              best.bin = k;
              best.missing_left = miss_left;
              best.gl = gl;
              best.hl = hl;
              best.gr = gt - gl;
              best.hr = ht - hl;
              best.cl = cl;
              best.cr = cr;
            }
          }
        }
        per_feature[static_cast<std::size_t>(a)] = best;
      });
      for (const SplitInfo& cand : per_feature)
        if (cand.gain > leaf.best.gain) leaf.best = cand;
    };

    std::vector<LeafState> leaves;
    leaves.reserve(static_cast<std::size_t>(params.num_leaves) * 2);
    {
      LeafState root;
      root.node = 0;
      root.lo = 0;
      root.hi = bag.size();
      root.depth = 0;
      root.seq = 0;
      for (std::size_t k = root.lo; k < root.hi; ++k) {
        root.g += grad[partition[k]];
        root.h += hess[partition[k]];
      }
      build_hist(root, root.hist);
      find_best(root);
      leaves.push_back(std::move(root));
    }

    int n_leaves = 1;
    int next_seq = 1;
    std::vector<std::size_t> open = {0};  // indices into leaves
    while (n_leaves < params.num_leaves) {
      // best open leaf; ties keep the earliest-created
      std::size_t pick = open.size();
      for (std::size_t oi = 0; oi < open.size(); ++oi) {
        const LeafState& cand = leaves[open[oi]];
        if (cand.best.gain <= 0.0) continue;
        if (pick == open.size() ||
            cand.best.gain > leaves[open[pick]].best.gain)
          pick = oi;
      }
      if (pick == open.size()) break;

      const std::size_t li = open[pick];
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      const SplitInfo chosen = leaves[li].best;
      const std::size_t e = static_cast<std::size_t>(chosen.feature);
      const BinnedFeature& bf = binned[e];

      // stable partition keeps canonical relative order in both children
      const std::size_t lo = leaves[li].lo;
      const std::size_t hi = leaves[li].hi;
      const std::uint16_t* feature_bins = bins.data() + e * n;
      std::size_t nl = 0;
      std::size_t nr = 0;
      std::vector<std::size_t>& right_buf = scratch;
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t row = partition[k];
        const std::uint16_t b = feature_bins[row];
        const bool left = b == bf.n_bins
                              ? chosen.missing_left
                              : b <= static_cast<std::uint16_t>(chosen.bin);
        if (left)
          partition[lo + nl++] = row;
        else
          right_buf[nr++] = row;
      }
      std::copy(right_buf.begin(),
                right_buf.begin() + static_cast<std::ptrdiff_t>(nr),
                partition.begin() + static_cast<std::ptrdiff_t>(lo + nl));

      const int node_id = leaves[li].node;
      TreeNode& parent = tree.nodes[static_cast<std::size_t>(node_id)];
      parent.is_leaf = false;
      parent.feature = chosen.feature;
      parent.threshold = bf.split_values[static_cast<std::size_t>(chosen.bin)];
      parent.missing_left = chosen.missing_left;
      parent.left = static_cast<int>(tree.nodes.size());
      parent.right = static_cast<int>(tree.nodes.size() + 1);
      tree.nodes.push_back(TreeNode{});
      tree.nodes.push_back(TreeNode{});
      gain_records.back().emplace_back(e, chosen.gain);

      LeafState left_leaf;
      left_leaf.node = static_cast<int>(tree.nodes.size()) - 2;
      left_leaf.lo = lo;
      left_leaf.hi = lo + nl;
      left_leaf.depth = leaves[li].depth + 1;
      left_leaf.g = chosen.gl;
      left_leaf.h = chosen.hl;
      left_leaf.seq = next_seq++;
      LeafState right_leaf;
      right_leaf.node = static_cast<int>(tree.nodes.size()) - 1;
      right_leaf.lo = lo + nl;
      right_leaf.hi = hi;
      right_leaf.depth = leaves[li].depth + 1;
      right_leaf.g = chosen.gr;
      right_leaf.h = chosen.hr;
      right_leaf.seq = next_seq++;

      // histogram for the smaller child; the larger is the difference
      const bool left_smaller = nl <= nr;
      LeafState& small = left_smaller ? left_leaf : right_leaf;
      LeafState& large = left_smaller ? right_leaf : left_leaf;
      build_hist(small, small.hist);
      large.hist = std::move(leaves[li].hist);
      for (std::size_t t = 0; t < total_bins; ++t) {
        large.hist.g[t] -= small.hist.g[t];
        large.hist.h[t] -= small.hist.h[t];
        large.hist.c[t] -= small.hist.c[t];
      }
      find_best(left_leaf);
      find_best(right_leaf);

      const std::size_t left_idx = leaves.size();
      leaves.push_back(std::move(left_leaf));
      const std::size_t right_idx = leaves.size();
      leaves.push_back(std::move(right_leaf));
      open.push_back(left_idx);
      open.push_back(right_idx);
      ++n_leaves;
    }

    for (const LeafState& leaf : leaves) {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
      if (!node.is_leaf) continue;
      node.leaf_value =
          -params.learning_rate * leaf.g / (leaf.h + params.l2_lambda);
    }

    // score updates for every training row, routed through the bin matrix
    parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
      int node_id = 0;
      while (!tree.nodes[static_cast<std::size_t>(node_id)].is_leaf) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
        const std::size_t e = static_cast<std::size_t>(node.feature);
        const std::uint16_t b = bins[e * n + static_cast<std::size_t>(i)];
        const BinnedFeature& bf = binned[e];
        bool left;
        if (b == bf.n_bins) {
          left = node.missing_left;
        } else {
          const auto cut = std::lower_bound(bf.split_values.begin(),
                                            bf.split_values.end(),
                                            node.threshold);
          left = b <= static_cast<std::uint16_t>(cut - bf.split_values.begin());
        }
        node_id = left ? node.left : node.right;
      }
      scores[static_cast<std::size_t>(i)] +=
          tree.nodes[static_cast<std::size_t>(node_id)].leaf_value;
    });

    model.trees.push_back(std::move(tree));

    if (opts.valid) {
      const Tree& t = model.trees.back();
      parallel_for(static_cast<std::ptrdiff_t>(valid.n), [&](std::ptrdiff_t i) {
        int node_id = 0;
        while (!t.nodes[static_cast<std::size_t>(node_id)].is_leaf) {
          const TreeNode& node = t.nodes[static_cast<std::size_t>(node_id)];
          const double v =
              valid.cols[static_cast<std::size_t>(node.feature)]
                        [static_cast<std::size_t>(i)];
          const bool left =
              std::isnan(v) ? node.missing_left : v <= node.threshold;
          node_id = left ? node.left : node.right;
        }
        valid_scores[static_cast<std::size_t>(i)] +=
            t.nodes[static_cast<std::size_t>(node_id)].leaf_value;
      });
      double loss = 0.0;
      for (std::size_t i = 0; i < valid.n; ++i)
        loss += logistic_loss(valid_scores[i],
                              static_cast<double>(opts.valid_labels[i]));
      loss /= static_cast<double>(valid.n);
      if (loss < best_valid_loss) {
        best_valid_loss = loss;
        best_round = round;
        rounds_since_best = 0;
      } else {
        ++rounds_since_best;
      }
      if (params.early_stopping_rounds > 0 &&
          rounds_since_best >= params.early_stopping_rounds)
        break;
    }
  }

  if (opts.valid && params.early_stopping_rounds > 0 && best_round >= 0) {
    model.trees.resize(static_cast<std::size_t>(best_round) + 1);
    gain_records.resize(model.trees.size());
  }
  for (const auto& round_gains : gain_records)
    for (const auto& [feature, gain] : round_gains)
      model.split_gain[feature] += gain;

  return model;
}

namespace {

struct PredictContext {
  std::vector<const Column*> cols;
  std::vector<std::map<std::string, int>> vocab_index;
};

PredictContext prepare_predict(const GbdtModel& model, const Dataset& rows) {
  PredictContext ctx;
  ctx.cols.resize(model.schema.size());
  ctx.vocab_index.resize(model.schema.size());
  for (std::size_t s = 0; s < model.schema.size(); ++s) {
    const FeatureSchemaEntry& entry = model.schema[s];
    const Column* c = rows.find(entry.name);
    if (!c)
      throw Error(fmt::format("feature {} missing from input", entry.name));
    if (c->kind != entry.kind)
      throw Error(fmt::format("feature {} has the wrong kind", entry.name));
    ctx.cols[s] = c;
    for (std::size_t v = 0; v < entry.categories.size(); ++v)
      ctx.vocab_index[s][entry.categories[v]] = static_cast<int>(v);
  }
  return ctx;
}

double predict_with_context(const GbdtModel& model, const PredictContext& ctx,
                            std::size_t row) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  // per-source value cache for this row
  std::vector<double> numeric(model.schema.size(), kNaN);
  std::vector<int> code(model.schema.size(), -1);
  for (std::size_t s = 0; s < model.schema.size(); ++s) {
    const Column* c = ctx.cols[s];
    if (model.schema[s].kind == FeatureKind::Numeric) {
      numeric[s] = c->numeric[row];
    } else {
      const std::string& cell = c->categorical[row];
      if (!cell.empty()) {
        const auto it = ctx.vocab_index[s].find(cell);
        if (it != ctx.vocab_index[s].end()) code[s] = it->second;
      }
    }
  }

  double score = model.base_score;
  for (const Tree& tree : model.trees) {
    int node_id = 0;
    while (!tree.nodes[static_cast<std::size_t>(node_id)].is_leaf) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
      const ExpandedFeature& e =
          model.expanded[static_cast<std::size_t>(node.feature)];
      const std::size_t s = static_cast<std::size_t>(e.source);
      bool left;
      if (e.category < 0) {
        const double v = numeric[s];
        left = std::isnan(v) ? node.missing_left : v <= node.threshold;
      } else {
        if (code[s] < 0)
          left = node.missing_left;
        else
          left = (code[s] == e.category ? 1.0 : 0.0) <= node.threshold;
      }
      node_id = left ? node.left : node.right;
    }
    score += tree.nodes[static_cast<std::size_t>(node_id)].leaf_value;
  }
  return sigmoid(score);
}

}  // namespace

double GbdtModel::predict_row(const Dataset& rows, std::size_t row) const {
  if (row >= rows.n_rows()) throw Error("row index out of range");
  const PredictContext ctx = prepare_predict(*this, rows);
  return predict_with_context(*this, ctx, row);
}

std::vector<double> GbdtModel::predict(const Dataset& rows) const {
  const PredictContext ctx = prepare_predict(*this, rows);
  std::vector<double> out(rows.n_rows());
  parallel_for(static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t i) {
    out[static_cast<std::size_t>(i)] =
        predict_with_context(*this, ctx, static_cast<std::size_t>(i));
  });
  return out;
}

std::string GbdtModel::to_json() const {
  json j;
  j["version"] = 1;
  j["base_score"] = base_score;
  json schema_json = json::array();
  for (const FeatureSchemaEntry& e : schema) {
    json entry;
    entry["name"] = e.name;
    entry["kind"] = e.kind == FeatureKind::Numeric ? "numeric" : "categorical";
    entry["categories"] = e.categories;
    schema_json.push_back(std::move(entry));
  }
  j["schema"] = std::move(schema_json);
  json params_json;
  params_json["n_estimators"] = params.n_estimators;
  params_json["learning_rate"] = params.learning_rate;
  params_json["max_depth"] = params.max_depth;
  params_json["num_leaves"] = params.num_leaves;
  params_json["min_data_in_leaf"] = params.min_data_in_leaf;
  params_json["l2_lambda"] = params.l2_lambda;
  params_json["feature_fraction"] = params.feature_fraction;
  params_json["bagging_fraction"] = params.bagging_fraction;
  params_json["max_bins"] = params.max_bins;
  params_json["early_stopping_rounds"] = params.early_stopping_rounds;
  params_json["seed"] = params.seed;
  j["params"] = std::move(params_json);
  json trees_json = json::array();
  for (const Tree& tree : trees) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
      json nj;
      if (node.is_leaf) {
        nj["leaf"] = node.leaf_value;
      } else {
        nj["feature"] = node.feature;
        nj["threshold"] = node.threshold;
        nj["missing_left"] = node.missing_left;
        nj["left"] = node.left;
        nj["right"] = node.right;
      }
      nodes.push_back(std::move(nj));
    }
    trees_json.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees_json);
  j["split_gain"] = split_gain;
  return j.dump(2);
}

GbdtModel GbdtModel::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw Error("unsupported model version");
  GbdtModel m;
  m.base_score = j.at("base_score").get<double>();
  for (const json& entry : j.at("schema")) {
    FeatureSchemaEntry e;
    e.name = entry.at("name").get<std::string>();
    e.kind = entry.at("kind").get<std::string>() == "numeric"
                 ? FeatureKind::Numeric
                 : FeatureKind::Categorical;
    e.categories = entry.at("categories").get<std::vector<std::string>>();
    m.schema.push_back(std::move(e));
  }
  m.expanded = expand_schema(m.schema);
  const json& p = j.at("params");
  m.params.n_estimators = p.at("n_estimators").get<int>();
  m.params.learning_rate = p.at("learning_rate").get<double>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.num_leaves = p.at("num_leaves").get<int>();
  m.params.min_data_in_leaf = p.at("min_data_in_leaf").get<int>();
  m.params.l2_lambda = p.at("l2_lambda").get<double>();
  m.params.feature_fraction = p.at("feature_fraction").get<double>();
  m.params.bagging_fraction = p.at("bagging_fraction").get<double>();
  m.params.max_bins = p.at("max_bins").get<int>();
  m.params.early_stopping_rounds = p.at("early_stopping_rounds").get<int>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  for (const json& tree_json : j.at("trees")) {
    Tree tree;
    for (const json& nj : tree_json) {
      TreeNode node;
      if (nj.contains("leaf")) {
        node.is_leaf = true;
        node.leaf_value = nj.at("leaf").get<double>();
      } else {
        node.is_leaf = false;
        node.feature = nj.at("feature").get<int>();
        node.threshold = nj.at("threshold").get<double>();
        node.missing_left = nj.at("missing_left").get<bool>();
        node.left = nj.at("left").get<int>();
        node.right = nj.at("right").get<int>();
      }
      tree.nodes.push_back(node);
    }
    m.trees.push_back(std::move(tree));
  }
  m.split_gain = j.at("split_gain").get<std::vector<double>>();
  return m;
}

void GbdtModel::save(const std::string& path) const {
  io::write_file(path, to_json() + "\n");
}

GbdtModel GbdtModel::load(const std::string& path) {
  return from_json(io::read_file(path));
}

std::map<std::string, double> feature_importance_gain(const GbdtModel& model) {
  std::map<std::string, double> out;
  for (const FeatureSchemaEntry& e : model.schema) out[e.name] = 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < model.expanded.size(); ++e) {
    const std::string& name =
        model.schema[static_cast<std::size_t>(model.expanded[e].source)].name;
    out[name] += model.split_gain[e];
    total += model.split_gain[e];
  }
  if (total > 0.0) {
    for (auto& [name, gain] : out) gain /= total;
  } else {
    const double uniform = 1.0 / static_cast<double>(out.size());
    for (auto& [name, gain] : out) gain = uniform;
  }
  return out;
}

}  // namespace xg::gbdt
