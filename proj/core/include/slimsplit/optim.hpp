// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <span>

#include "slimsplit/autodiff.hpp"

namespace slimsplit {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
};

// Heavy-ball SGD: v <- momentum * v + g; p <- p - lr * v.
//
// All gradients are validated before any parameter moves, so a non-finite
// gradient aborts the whole step with NumericError and leaves state intact.
// Frozen parameters are skipped.
void sgd_update(std::span<Parameter* const> params, const SgdConfig& cfg);

void zero_grads(std::span<Parameter* const> params);

}  // namespace slimsplit
