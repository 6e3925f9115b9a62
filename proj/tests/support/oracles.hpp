// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

// Reference implementations used only by tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "slimsplit/autodiff.hpp"
#include "slimsplit/rng.hpp"
#include "slimsplit/tensor.hpp"

namespace slimsplit::testing {

inline Tensor64 random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor64 t(s);
  for (auto& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor32 random_tensor32(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor32 t(s);
  for (auto& v : t.storage()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Textbook six-loop convolution, zero padding handled by bounds checks.
inline Tensor64 naive_conv(const Tensor64& x, const Tensor64& w, const Tensor64& b,
                           std::size_t stride, std::size_t pad) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const std::size_t k = ws.h;
  const std::size_t oh = (xs.h + 2 * pad - k) / stride + 1;
  const std::size_t ow = (xs.w + 2 * pad - k) / stride + 1;
  Tensor64 out({xs.n, ws.n, oh, ow});
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              for (std::size_t ci = 0; ci < xs.c; ++ci) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(xs.h) ||
                    ix >= static_cast<long>(xs.w)) {
                  continue;
                }
                acc += w.at(co, ci, ky, kx) * x.at(n, ci, static_cast<std::size_t>(iy),
                                                   static_cast<std::size_t>(ix));
              }
            }
          }
          out.at(n, co, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

// Weight prefix [0:c_out, 0:c_in] as a dense tensor.
inline Tensor64 weight_prefix(const Tensor64& w, std::size_t c_out, std::size_t c_in) {
  const Shape s = w.shape();
  Tensor64 out({c_out, c_in, s.h, s.w});
  for (std::size_t co = 0; co < c_out; ++co) {
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) out.at(co, ci, y, x) = w.at(co, ci, y, x);
      }
    }
  }
  return out;
}

inline double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1e-12, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Builds a scalar loss on a fresh train64 graph from the given inputs.
using LossBuilder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

struct GradCheckResult {
  double worst = 0.0;  // max |analytic - fd| / max(1, |fd|)
  std::size_t checked = 0;
};

// Central finite differences over up to `per_tensor` randomly chosen
// elements of each input and each parameter.
inline GradCheckResult grad_check(const LossBuilder& build, std::vector<Tensor64> inputs,
                                  const std::vector<Parameter*>& params, Rng& rng,
                                  double h = 1e-5, std::size_t per_tensor = 24) {
  auto eval = [&](const std::vector<Tensor64>& in) {
    Graph<double> g(Graph<double>::Options{.record = false, .checked = true});
    std::vector<Var> vars;
    for (const auto& t : in) vars.push_back(g.input(t));
    return g.value(build(g, vars))[0];
  };

  for (Parameter* p : params) p->zero_grad();
  Graph<double> g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.input(t, true));
  g.backward(build(g, vars));
  std::vector<Tensor64> input_grads;
  for (Var v : vars) input_grads.push_back(g.grad(v));

  GradCheckResult r;
  auto pick = [&](std::size_t size) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    for (std::size_t i = size; i > 1; --i) {
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    }
    idx.resize(std::min(size, per_tensor));
    return idx;
  };
  auto record = [&](double analytic, double fd) {
    r.worst = std::max(r.worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    ++r.checked;
  };

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i : pick(inputs[t].size())) {
      const double orig = inputs[t][i];
      inputs[t][i] = orig + h;
      const double up = eval(inputs);
      inputs[t][i] = orig - h;
      const double down = eval(inputs);
      inputs[t][i] = orig;
      const double analytic = input_grads[t].empty() ? 0.0 : input_grads[t][i];
      record(analytic, (up - down) / (2 * h));
    }
  }
  for (Parameter* p : params) {
    for (std::size_t i : pick(p->value.size())) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval(inputs);
      p->value[i] = orig - h;
      const double down = eval(inputs);
      p->value[i] = orig;
      record(p->grad[i], (up - down) / (2 * h));
    }
  }
  return r;
}

}  // namespace slimsplit::testing
