#pragma once

#include <span>

namespace xg {

struct MetricsBundle {
  double log_loss = 0.0;
  double auc = 0.0;
  double brier = 0.0;
};

// -mean(y ln p + (1-y) ln(1-p)), p clipped to [1e-15, 1-1e-15].
double log_loss(std::span<const double> preds, std::span<const int> labels);

// mean((p - y)^2)
double brier(std::span<const double> preds, std::span<const int> labels);

// Probability a random positive outranks a random negative, ties counted
// half. Exact (integer-arithmetic numerator). Throws when only one class is
// present.
double auc(std::span<const double> preds, std::span<const int> labels);

MetricsBundle compute_metrics(std::span<const double> preds,
                              std::span<const int> labels);

}  // namespace xg
