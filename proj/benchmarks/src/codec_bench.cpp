// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <benchmark/benchmark.h>

#include "slimsplit/codec.hpp"
#include "slimsplit/rng.hpp"

namespace slimsplit {
namespace {

Tensor32 bottleneck(std::size_t channels) {
  Rng rng(3);
  Tensor32 t({1, channels, 8, 8});
  for (auto& v : t.storage()) v = static_cast<float>(rng.uniform(0.0, 4.0));
  return t;
}

void BM_EncodePacket(benchmark::State& state) {
  const Tensor32 t = bottleneck(48);
  const int bits = static_cast<int>(state.range(0));
  PacketInfo info;
  info.c_max = 48;
  std::size_t bytes = 0;
  for (auto _ : state) {
    auto p = encode_packet(t, bits, info);
    bytes = p.size();
    benchmark::DoNotOptimize(p.data());
  }
  state.counters["packet_bytes"] = static_cast<double>(bytes);
}
BENCHMARK(BM_EncodePacket)->DenseRange(2, 8, 2);

void BM_DecodePacket(benchmark::State& state) {
  PacketInfo info;
  info.c_max = 48;
  const auto p = encode_packet(bottleneck(48), static_cast<int>(state.range(0)), info);
  for (auto _ : state) {
    DecodedPacket d = decode_packet(p);
    benchmark::DoNotOptimize(d.values.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * p.size()));
}
BENCHMARK(BM_DecodePacket)->Arg(4)->Arg(8);

}  // namespace
}  // namespace slimsplit
