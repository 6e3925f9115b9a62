// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <benchmark/benchmark.h>

#include "slimsplit/model_zoo.hpp"
#include "slimsplit/rng.hpp"

namespace slimsplit {
namespace {

Tensor32 image() {
  Rng rng(4);
  Tensor32 x({1, kImageChannels, kImageSize, kImageSize});
  for (auto& v : x.storage()) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return x;
}

WidthSet widths_for(const WidthMultiplier& alpha) {
  const WidthMultiplier one(1, 1);
  return alpha == one ? WidthSet({one}) : WidthSet({alpha, one});
}

// Client-side encode of one image; arg 0 selects the mode, arg 1 alpha in per mille.
void BM_StudentEncode(benchmark::State& state) {
  const SplitMode mode = state.range(0) == 0 ? SplitMode::bandwidth_only : SplitMode::full_config;
  const WidthMultiplier alpha(state.range(1), 1000);
  TeacherNet teacher = build_teacher(0);
  SplitStudent s = build_student(teacher, {}, widths_for(alpha), mode);
  const Tensor32 x = image();
  for (auto _ : state) {
    Tensor32 z = encode(s, x, alpha);
    benchmark::DoNotOptimize(z.data());
  }
  const MacReport r = s.mac_report(alpha);
  state.counters["client_mac"] = static_cast<double>(r.client());
}
BENCHMARK(BM_StudentEncode)
    ->Args({0, 250})
    ->Args({0, 1000})
    ->Args({1, 250})
    ->Args({1, 500})
    ->Args({1, 1000});

void BM_StudentDecode(benchmark::State& state) {
  const WidthMultiplier alpha(state.range(0), 1000);
  TeacherNet teacher = build_teacher(0);
  SplitStudent s = build_student(teacher, {}, widths_for(alpha),
                                 SplitMode::bandwidth_only);
  const Tensor32 z = encode(s, image(), alpha);
  for (auto _ : state) {
    Tensor32 y = decode(s, z, alpha);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_StudentDecode)->Arg(250)->Arg(1000);

}  // namespace
}  // namespace slimsplit
