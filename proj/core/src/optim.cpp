// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/optim.hpp"

namespace slimsplit {

void sgd_update(std::span<Parameter* const> params, const SgdConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ArgumentError("sgd_update: lr must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw ArgumentError("sgd_update: momentum must be in [0, 1)");
  }
  for (const Parameter* p : params) {
    if (p->trainable && !p->grad.all_finite()) {
      throw NumericError("sgd_update: non-finite gradient in " + p->name);
    }
  }
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    auto& v = p->velocity.storage();
    auto& w = p->value.storage();
    const auto& g = p->grad.storage();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i];
      w[i] -= cfg.lr * v[i];
    }
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace slimsplit
