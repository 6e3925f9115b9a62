// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "guarded_buffer.hpp"
#include "oracles.hpp"
#include "packet_corpus.hpp"
#include "slimsplit/codec.hpp"

namespace slimsplit {
namespace {

Tensor32 values(std::vector<float> v) {
  const std::size_t n = v.size();
  return Tensor32({1, n, 1, 1}, std::move(v));
}

PacketInfo info_for(std::size_t c_max, WidthMultiplier a = {}) {
  PacketInfo i;
  i.alpha = a;
  i.c_max = c_max;
  return i;
}

CodecError::Kind decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_packet(bytes);
  } catch (const CodecError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "packet unexpectedly accepted";
  return CodecError::Kind::invalid_field;
}

TEST(Quantize, SymmetricRangeAtEightBits) {
  Quantized q = quantize(values({-1, 0, 1}), 8);
  EXPECT_EQ(q.params.min, -1.0f);
  EXPECT_FLOAT_EQ(q.params.scale, 2.0f / 255.0f);
  EXPECT_EQ(q.codes, (std::vector<std::uint8_t>{0, 128, 255}));
}

TEST(Quantize, ConstantTensor) {
  Quantized q = quantize(values({2.5f, 2.5f, 2.5f}), 6);
  EXPECT_EQ(q.codes, (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_EQ(q.params.scale, 1.0f);
  EXPECT_EQ(dequantize(q), values({2.5f, 2.5f, 2.5f}));
}

TEST(Quantize, Contract) {
  EXPECT_THROW(quantize(values({0, 1}), 1), CodecError);
  EXPECT_THROW(quantize(values({0, 1}), 9), CodecError);
  try {
    quantize(values({0, std::numeric_limits<float>::infinity()}), 8);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::non_finite);
  }
}

TEST(Dequantize, EndpointsExact) {
  Tensor32 r = dequantize(quantize(values({-1, 0, 1}), 8));
  EXPECT_EQ(r[0], -1.0f);
  EXPECT_NEAR(r[1], 1.0f / 255.0f, 1e-7);
  EXPECT_NEAR(r[2], 1.0f, 1e-6);
}

TEST(Dequantize, CodeOutOfRange) {
  QuantParams p{4, 0.0f, 1.0f};
  std::vector<std::uint8_t> codes{3, 16};
  try {
    dequantize(codes, p, {1, 2, 1, 1});
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::code_out_of_range);
  }
}

TEST(Dequantize, ErrorBoundAllDepths) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor32 t = testing::random_tensor32({1, 7, 3, 5}, rng, -rng.uniform(0.1, 50), rng.uniform(0.1, 50));
    for (int b = kMinQuantBits; b <= kMaxQuantBits; ++b) {
      Quantized q = quantize(t, b);
      Tensor32 r = dequantize(q);
      for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_LE(std::abs(static_cast<double>(r[i]) - t[i]),
                  static_cast<double>(q.params.scale) / 2 + 1e-7 * std::max(1.0, std::abs(static_cast<double>(t[i]))))
            << "bits " << b;
      }
    }
  }
}

TEST(Dequantize, ScaleRatioBetweenDepths) {
  Rng rng(2);
  Tensor32 t = testing::random_tensor32({1, 4, 4, 4}, rng);
  const float s8 = quantize(t, 8).params.scale;
  const float s4 = quantize(t, 4).params.scale;
  EXPECT_NEAR(s4 / s8, 17.0, 1e-5);
}

TEST(Packet, SizesForDefaultBottleneck) {
  Rng rng(3);
  Tensor32 t = testing::random_tensor32({1, 48, 8, 8}, rng);
  auto p8 = encode_packet(t, 8, info_for(48));
  auto p4 = encode_packet(t, 4, info_for(48));
  EXPECT_EQ(p8.size(), 3106u);
  EXPECT_EQ(p8.size() - kPacketHeaderBytes, 3072u);
  EXPECT_EQ(p4.size() - kPacketHeaderBytes, 1536u);
}

TEST(Packet, HeaderLayout) {
  Tensor32 t = values({-1, 0, 1, 0.5f});
  auto p = encode_packet(t, 8, info_for(8, WidthMultiplier(1, 2)));
  ASSERT_EQ(p.size(), kPacketHeaderBytes + 4);
  EXPECT_EQ(p[0], 0x43);  // magic, little-endian
  EXPECT_EQ(p[1], 0x53);
  EXPECT_EQ(p[2], kPacketVersion);
  EXPECT_EQ(p[3], 0);
  EXPECT_EQ(p[4], 8);
  float alpha;
  std::memcpy(&alpha, p.data() + 6, 4);
  EXPECT_EQ(alpha, 0.5f);
  EXPECT_EQ(p[10] | (p[11] << 8), 4);  // C_active
  EXPECT_EQ(p[12] | (p[13] << 8), 8);  // C_max
  EXPECT_EQ(p[30] | (p[31] << 8) | (p[32] << 16) | (p[33] << 24), 4);  // payload_len
  EXPECT_EQ(p[34], 0);
  EXPECT_EQ(p[36], 255);
  EXPECT_EQ(p[37], 191);
}

TEST(Packet, MsbFirstPacking) {
  // codes 0..3 at 2 bits -> 00 01 10 11
  Tensor32 t = values({0, 1, 2, 3});
  auto p = encode_packet(t, 2, info_for(4));
  ASSERT_EQ(p.size(), kPacketHeaderBytes + 1);
  EXPECT_EQ(p.back(), 0b00011011);
  auto q = encode_packet(values({3, 0, 0}), 3, info_for(3));
  ASSERT_EQ(q.size(), kPacketHeaderBytes + 2);
  EXPECT_EQ(q[kPacketHeaderBytes], 0b11100000);
  EXPECT_EQ(q[kPacketHeaderBytes + 1], 0);
}

TEST(Packet, RoundTripMatchesInMemoryQuantization) {
  Rng rng(4);
  for (int b = kMinQuantBits; b <= kMaxQuantBits; ++b) {
    Tensor32 t = testing::random_tensor32({2, 5, 3, 3}, rng, -2, 3);
    PacketInfo info = info_for(9, WidthMultiplier(5, 9));
    info.extrapolated = true;
    info.variant = CompressorVariant::sru_cru;
    auto bytes = encode_packet(t, b, info);
    DecodedPacket d = decode_packet(bytes);
    Quantized q = quantize(t, b);
    EXPECT_EQ(d.quantized.codes, q.codes);
    EXPECT_EQ(d.values, dequantize(q));
    EXPECT_EQ(d.header.flags, kFlagExtrapolated);
    EXPECT_EQ(d.header.variant, 0);
    EXPECT_EQ(d.header.c_active, 5);
    EXPECT_EQ(d.header.n, 2);
    EXPECT_EQ(encode_packet(d.quantized, info), bytes);
  }
}

TEST(Packet, DistinctErrorsForDistinctFaults) {
  Rng rng(5);
  auto good = encode_packet(testing::random_tensor32({1, 4, 2, 2}, rng), 8, info_for(4));
  auto bad_magic = good;
  bad_magic[0] ^= 1;
  EXPECT_EQ(decode_error(bad_magic), CodecError::Kind::bad_magic);
  auto bad_version = good;
  bad_version[2] = kPacketVersion + 1;
  EXPECT_EQ(decode_error(bad_version), CodecError::Kind::version_mismatch);
  EXPECT_EQ(decode_error(std::span(good.data(), good.size() - 3)), CodecError::Kind::truncated);
  EXPECT_EQ(decode_error(std::span(good.data(), 10)), CodecError::Kind::truncated);
  auto bad_len = good;
  bad_len[30] += 1;
  EXPECT_EQ(decode_error(bad_len), CodecError::Kind::length_mismatch);
  auto longer = good;
  longer.push_back(0);
  EXPECT_EQ(decode_error(longer), CodecError::Kind::length_mismatch);
}

TEST(Packet, NonZeroPaddingRejected) {
  auto p = encode_packet(values({3, 0, 0}), 3, info_for(3));
  p.back() |= 0x01;
  EXPECT_EQ(decode_error(p), CodecError::Kind::invalid_field);
}

TEST(PayloadSize, Examples) {
  EXPECT_EQ(payload_size(12, 8, 8, 1, 8), 802u);
  EXPECT_EQ(payload_size(48, 8, 8, 1, 2), 802u);
  EXPECT_EQ(payload_size(3, 3, 1, 1, 3), 4u + 34u);
  for (std::size_t c = 1; c < 20; ++c) {
    EXPECT_EQ(payload_size(c, 3, 5, 2, 8) - kPacketHeaderBytes, c * 3 * 5 * 2);
    if ((c * 3 * 5 * 2) % 2 == 0) {
      EXPECT_EQ(2 * (payload_size(c, 3, 5, 2, 4) - kPacketHeaderBytes),
                payload_size(c, 3, 5, 2, 8) - kPacketHeaderBytes);
    }
  }
}

TEST(Packet, RandomRoundTrips) {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    auto bytes = testing::random_packet(rng);
    DecodedPacket d = decode_packet(bytes);
    PacketInfo info;
    info.alpha = WidthMultiplier(d.header.c_active, 48);
    info.c_max = d.header.c_max;
    EXPECT_EQ(encode_packet(d.quantized, info), bytes);
  }
}

TEST(Packet, MalformedCorpusRejectedWithinBounds) {
  for (const auto& m : testing::malformed_corpus(600, 7)) {
    for (auto guard : {testing::GuardedBuffer::Guard::after, testing::GuardedBuffer::Guard::before}) {
      testing::GuardedBuffer buf(m.bytes, guard);
      EXPECT_THROW(decode_packet(buf.span()), CodecError) << m.kind;
    }
  }
}

TEST(Packet, ValidPacketDecodesFromGuardedBuffer) {
  Rng rng(8);
  auto bytes = testing::random_packet(rng);
  testing::GuardedBuffer buf(bytes, testing::GuardedBuffer::Guard::after);
  EXPECT_NO_THROW(decode_packet(buf.span()));
}

}  // namespace
}  // namespace slimsplit
