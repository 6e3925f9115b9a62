// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <benchmark/benchmark.h>

#include "slimsplit/rng.hpp"
#include "slimsplit/slim_layers.hpp"

namespace slimsplit {
namespace {

// 64 -> 64 channel 3x3 conv on a 16x16 map at the given width (per mille).
void BM_SlimConv(benchmark::State& state) {
  const WidthMultiplier alpha(state.range(0), 1000);
  SlimmableConv layer("bench", 64, 64, 3, {1, 1}, true, true);
  Rng rng(1);
  layer.init_he(rng);
  const ChannelSlice s = layer.active(alpha);
  Tensor32 x({8, s.c_in, 16, 16});
  for (auto& v : x.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto _ : state) {
    Graph<float> g(Graph<float>::Options{.record = false, .checked = false});
    Var y = slim_forward(g, layer, g.input(x), alpha);
    benchmark::DoNotOptimize(g.value(y).data());
  }
  state.counters["mac"] = static_cast<double>(mac_count(layer, alpha, 16, 16) * 8);
}
BENCHMARK(BM_SlimConv)->Arg(250)->Arg(500)->Arg(1000);

void BM_SlimConvBackward(benchmark::State& state) {
  const WidthMultiplier alpha(state.range(0), 1000);
  SlimmableConv layer("bench", 64, 64, 3, {1, 1}, true, true);
  Rng rng(2);
  layer.init_he(rng);
  const ChannelSlice s = layer.active(alpha);
  Tensor64 x({8, s.c_in, 16, 16});
  for (auto& v : x.storage()) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    Graph<double> g;
    Var in = g.input(x, true);
    Var y = slim_forward(g, layer, in, alpha);
    g.backward(g.mse(y, g.scale(y, 0.5)));
    benchmark::DoNotOptimize(g.grad(in).data());
  }
}
BENCHMARK(BM_SlimConvBackward)->Arg(500)->Arg(1000);

}  // namespace
}  // namespace slimsplit
