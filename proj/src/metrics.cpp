#include "xg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "xg/types.hpp"

namespace xg {

namespace {

constexpr double kClip = 1e-15;

void check_sizes(std::span<const double> preds, std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw Error("metrics: preds/labels size mismatch");
  if (preds.empty()) throw Error("metrics: empty input");
}

}  // namespace

double log_loss(std::span<const double> preds, std::span<const int> labels) {
  check_sizes(preds, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = std::clamp(preds[i], kClip, 1.0 - kClip);
    sum += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(preds.size());
}

double brier(std::span<const double> preds, std::span<const int> labels) {
  check_sizes(preds, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - static_cast<double>(labels[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double auc(std::span<const double> preds, std::span<const int> labels) {
  check_sizes(preds, labels);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a] < preds[b];
  });

  // integer numerator: 2*(wins over lower-scored negatives) + ties, walked
  // one tie group at a time, so the result matches all-pairs counting exactly
  std::uint64_t numerator2 = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t pos_total = 0;
  std::uint64_t neg_total = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && preds[order[j]] == preds[order[i]]) {
      labels[order[j]] == 1 ? ++pos : ++neg;
      ++j;
    }
    numerator2 += 2 * neg_below * pos + pos * neg;
    neg_below += neg;
    pos_total += pos;
    neg_total += neg;
    i = j;
  }
  if (pos_total == 0 || neg_total == 0)
    throw Error("auc undefined: only one class present");
  return (static_cast<double>(numerator2) / 2.0) /
         (static_cast<double>(pos_total) * static_cast<double>(neg_total));
}

MetricsBundle compute_metrics(std::span<const double> preds,
                              std::span<const int> labels) {
  return MetricsBundle{log_loss(preds, labels), auc(preds, labels),
                       brier(preds, labels)};
}

}  // namespace xg
