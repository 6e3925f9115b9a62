// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "slimsplit/error.hpp"

namespace slimsplit {

double toy_ap(std::span<const float> scores, std::span<const float> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("toy_ap", "element count", labels.size(), scores.size());
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("toy_ap: non-finite score");
    if (labels[i] != 0.0f && labels[i] != 1.0f) throw ArgumentError("toy_ap: labels must be 0 or 1");
    positives += labels[i] == 1.0f;
  }
  if (positives == 0) throw ArgumentError("toy_ap: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const float s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] == 1.0f;
      ++seen;
      ++i;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace slimsplit
