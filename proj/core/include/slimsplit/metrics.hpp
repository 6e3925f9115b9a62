// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <span>

namespace slimsplit {

// Average precision of a pooled ranking: sum over distinct score thresholds
// of (recall_k - recall_{k-1}) * precision_k. Tied scores form a single
// threshold. Throws ArgumentError when there are no positive labels.
double toy_ap(std::span<const float> scores, std::span<const float> labels);

}  // namespace slimsplit
