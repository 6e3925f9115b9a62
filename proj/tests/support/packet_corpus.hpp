// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

// Malformed feature packets: every case must be rejected by the decoder.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "slimsplit/codec.hpp"

namespace slimsplit::testing {

struct MalformedPacket {
  std::string kind;
  std::vector<std::uint8_t> bytes;
};

// Byte offsets whose every single-bit flip yields an invalid packet: magic,
// version, bits, C_active, H, W, N, reserved, payload_len. Flags are listed
// separately because bit 0 is a legal flag.
inline const std::vector<std::size_t>& structural_offsets() {
  static const std::vector<std::size_t> offs{0, 1, 2, 4, 10, 11, 14, 15, 16, 17, 18, 19,
                                             20, 21, 30, 31, 32, 33};
  return offs;
}

inline std::vector<std::uint8_t> random_packet(Rng& rng) {
  const std::size_t c = static_cast<std::size_t>(rng.uniform_int(2, 48));
  const std::size_t h = static_cast<std::size_t>(rng.uniform_int(2, 8));
  const std::size_t w = static_cast<std::size_t>(rng.uniform_int(2, 8));
  const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 2));
  const int bits = static_cast<int>(rng.uniform_int(kMinQuantBits, kMaxQuantBits));
  Tensor32 t = random_tensor32({n, c, h, w}, rng, -3.0, 3.0);
  PacketInfo info;
  info.alpha = WidthMultiplier(static_cast<std::int64_t>(c), 48);
  info.c_max = 48;
  return encode_packet(t, bits, info);
}

inline std::vector<MalformedPacket> malformed_corpus(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MalformedPacket> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<std::uint8_t> p = random_packet(rng);
    switch (out.size() % 6) {
      case 0: {  // strict prefix
        p.resize(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.size()) - 1)));
        out.push_back({"truncation", std::move(p)});
        break;
      }
      case 1: {  // trailing garbage
        const auto extra = rng.uniform_int(1, 16);
        for (std::int64_t i = 0; i < extra; ++i) p.push_back(static_cast<std::uint8_t>(rng.next_u64()));
        out.push_back({"extension", std::move(p)});
        break;
      }
      case 2: {
        const auto& offs = structural_offsets();
        const std::size_t at = offs[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(offs.size()) - 1))];
        p[at] ^= static_cast<std::uint8_t>(1u << rng.uniform_int(0, 7));
        out.push_back({"header bit flip", std::move(p)});
        break;
      }
      case 3: {
        p[3] ^= static_cast<std::uint8_t>(1u << rng.uniform_int(1, 7));
        out.push_back({"flag bit flip", std::move(p)});
        break;
      }
      case 4: {  // header flip plus truncation
        p[30 + static_cast<std::size_t>(rng.uniform_int(0, 3))] ^= 0x40;
        p.resize(p.size() - static_cast<std::size_t>(rng.uniform_int(1, 8)));
        out.push_back({"length flip and truncation", std::move(p)});
        break;
      }
      default: {  // random bytes behind a valid magic
        std::vector<std::uint8_t> g(static_cast<std::size_t>(rng.uniform_int(0, 80)));
        for (auto& b : g) b = static_cast<std::uint8_t>(rng.next_u64());
        if (g.size() >= 2) {
          g[0] = 0x43;
          g[1] = 0x53;
        }
        if (g.size() >= kPacketHeaderBytes) g[20] = 0xff;  // reserved must be zero
        out.push_back({"garbage", std::move(g)});
        break;
      }
    }
  }
  return out;
}

}  // namespace slimsplit::testing
