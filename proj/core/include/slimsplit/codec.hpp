// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slimsplit/error.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/tensor.hpp"

namespace slimsplit {

inline constexpr int kMinQuantBits = 2;
inline constexpr int kMaxQuantBits = 8;

// Per-tensor affine quantization: x ~= min + q * scale.
struct QuantParams {
  int bits = 8;
  float min = 0.0f;
  float scale = 1.0f;

  std::uint32_t max_code() const { return (1u << bits) - 1u; }
};

struct Quantized {
  std::vector<std::uint8_t> codes;  // NCHW order
  QuantParams params;
  Shape shape;
};

// q = round((x - min) / (max - min) * (2^b - 1)), ties away from zero.
// A constant tensor maps to scale = 1 and all-zero codes.
Quantized quantize(const Tensor32& t, int bits);

Tensor32 dequantize(std::span<const std::uint8_t> codes, const QuantParams& params,
                    Shape shape);
inline Tensor32 dequantize(const Quantized& q) {
  return dequantize(q.codes, q.params, q.shape);
}

// Wire format, little-endian, 34-byte header followed by MSB-first packed
// codes zero-padded to a byte boundary:
//
//   off size field
//    0   2   magic 0x5343
//    2   1   version
//    3   1   flags (bit0 = width outside the trained set)
//    4   1   bits
//    5   1   compressor variant
//    6   4   alpha (f32)
//   10   2   C_active
//   12   2   C_max
//   14   2   H
//   16   2   W
//   18   2   N
//   20   2   reserved (0)
//   22   4   min (f32)
//   26   4   scale (f32)
//   30   4   payload_len
inline constexpr std::uint16_t kPacketMagic = 0x5343;
inline constexpr std::uint8_t kPacketVersion = 1;
inline constexpr std::size_t kPacketHeaderBytes = 34;
inline constexpr std::uint8_t kFlagExtrapolated = 0x01;

struct PacketHeader {
  std::uint8_t version = kPacketVersion;
  std::uint8_t flags = 0;
  std::uint8_t bits = 8;
  std::uint8_t variant = 0;
  float alpha = 1.0f;
  std::uint16_t c_active = 0;
  std::uint16_t c_max = 0;
  std::uint16_t h = 0;
  std::uint16_t w = 0;
  std::uint16_t n = 0;
  float min = 0.0f;
  float scale = 1.0f;
  std::uint32_t payload_len = 0;

  friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

class CodecError : public Error {
 public:
  enum class Kind {
    bad_magic,
    version_mismatch,
    truncated,
    length_mismatch,
    invalid_field,
    code_out_of_range,
    non_finite,
    unsupported_bits,
  };
  CodecError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct PacketInfo {
  WidthMultiplier alpha;
  CompressorVariant variant = CompressorVariant::last_layer_pair;
  std::size_t c_max = 0;
  bool extrapolated = false;
};

std::vector<std::uint8_t> encode_packet(const Tensor32& t, int bits,
                                        const PacketInfo& info);
// Same, from already-quantized codes.
std::vector<std::uint8_t> encode_packet(const Quantized& q, const PacketInfo& info);

struct DecodedPacket {
  PacketHeader header;
  Quantized quantized;
  Tensor32 values;  // dequantized
};

// Validates every header field and the exact buffer length before reading
// the payload.
DecodedPacket decode_packet(std::span<const std::uint8_t> bytes);

// ceil(N * C * H * W * bits / 8) + header.
std::size_t payload_size(std::size_t c_active, std::size_t h, std::size_t w,
                         std::size_t n, int bits);

}  // namespace slimsplit
