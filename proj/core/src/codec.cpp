// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace slimsplit {
namespace {

void check_bits(int bits) {
  if (bits < kMinQuantBits || bits > kMaxQuantBits) {
    throw CodecError(CodecError::Kind::unsupported_bits,
                     "quantization bits must be in [2, 8], got " + std::to_string(bits));
  }
}

std::size_t packed_bytes(std::size_t count, int bits) {
  return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v & 0xff));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint16_t narrow16(std::size_t v, const char* field) {
  if (v > std::numeric_limits<std::uint16_t>::max()) {
    throw CodecError(CodecError::Kind::invalid_field,
                     std::string("packet field ") + field + " exceeds 16 bits");
  }
  return static_cast<std::uint16_t>(v);
}

}  // namespace

Quantized quantize(const Tensor32& t, int bits) {
  check_bits(bits);
  if (!t.all_finite()) {
    throw CodecError(CodecError::Kind::non_finite, "quantize: tensor has non-finite elements");
  }
  Quantized q;
  q.shape = t.shape();
  q.params.bits = bits;
  q.codes.assign(t.size(), 0);
  if (t.empty()) return q;

  const auto [lo_it, hi_it] = std::minmax_element(t.storage().begin(), t.storage().end());
  const float lo = *lo_it;
  const float hi = *hi_it;
  q.params.min = lo;
  if (!(hi > lo)) {
    q.params.scale = 1.0f;
    return q;
  }
  const double levels = static_cast<double>(q.params.max_code());
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  q.params.scale = static_cast<float>(range / levels);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = (static_cast<double>(t[i]) - lo) / range * levels;
    q.codes[i] = static_cast<std::uint8_t>(std::clamp(std::round(r), 0.0, levels));
  }
  return q;
}

Tensor32 dequantize(std::span<const std::uint8_t> codes, const QuantParams& params,
                    Shape shape) {
  check_bits(params.bits);
  if (codes.size() != shape.numel()) {
    throw ShapeError("dequantize", "code count", shape.numel(), codes.size());
  }
  Tensor32 out(shape);
  const std::uint32_t max_code = params.max_code();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > max_code) {
      throw CodecError(CodecError::Kind::code_out_of_range,
                       "dequantize: code " + std::to_string(codes[i]) + " at index " +
                           std::to_string(i) + " exceeds " + std::to_string(max_code));
    }
    out[i] = static_cast<float>(static_cast<double>(params.min) +
                                codes[i] * static_cast<double>(params.scale));
  }
  return out;
}

std::size_t payload_size(std::size_t c_active, std::size_t h, std::size_t w,
                         std::size_t n, int bits) {
  check_bits(bits);
  return packed_bytes(n * c_active * h * w, bits) + kPacketHeaderBytes;
}

std::vector<std::uint8_t> encode_packet(const Tensor32& t, int bits,
                                        const PacketInfo& info) {
  return encode_packet(quantize(t, bits), info);
}

std::vector<std::uint8_t> encode_packet(const Quantized& q, const PacketInfo& info) {
  check_bits(q.params.bits);
  const Shape& s = q.shape;
  const std::size_t payload = packed_bytes(s.numel(), q.params.bits);
  if (payload > std::numeric_limits<std::uint32_t>::max()) {
    throw CodecError(CodecError::Kind::invalid_field, "packet payload exceeds 32 bits");
  }
  if (info.c_max != 0 && s.c > info.c_max) {
    throw CodecError(CodecError::Kind::invalid_field, "C_active exceeds C_max");
  }

  std::vector<std::uint8_t> out;
  out.reserve(kPacketHeaderBytes + payload);
  ByteWriter w(out);
  w.u16(kPacketMagic);
  w.u8(kPacketVersion);
  w.u8(info.extrapolated ? kFlagExtrapolated : 0);
  w.u8(static_cast<std::uint8_t>(q.params.bits));
  w.u8(static_cast<std::uint8_t>(info.variant));
  w.f32(static_cast<float>(info.alpha.value()));
  w.u16(narrow16(s.c, "C_active"));
  w.u16(narrow16(info.c_max == 0 ? s.c : info.c_max, "C_max"));
  w.u16(narrow16(s.h, "H"));
  w.u16(narrow16(s.w, "W"));
  w.u16(narrow16(s.n, "N"));
  w.u16(0);
  w.f32(q.params.min);
  w.f32(q.params.scale);
  w.u32(static_cast<std::uint32_t>(payload));

  // MSB-first bit packing.
  const std::size_t start = out.size();
  out.resize(start + payload, 0);
  std::size_t bit = 0;
  for (std::uint8_t code : q.codes) {
    for (int b = q.params.bits - 1; b >= 0; --b, ++bit) {
      if ((code >> b) & 1u) {
        out[start + bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
      }
    }
  }
  return out;
}

DecodedPacket decode_packet(std::span<const std::uint8_t> bytes) {
  using K = CodecError::Kind;
  if (bytes.size() < kPacketHeaderBytes) {
    throw CodecError(K::truncated, "packet shorter than its " +
                                       std::to_string(kPacketHeaderBytes) + "-byte header");
  }
  ByteReader r(bytes);
  if (r.u16() != kPacketMagic) throw CodecError(K::bad_magic, "packet magic mismatch");
  DecodedPacket d;
  PacketHeader& h = d.header;
  h.version = r.u8();
  if (h.version != kPacketVersion) {
    throw CodecError(K::version_mismatch,
                     "unsupported packet version " + std::to_string(h.version));
  }
  h.flags = r.u8();
  h.bits = r.u8();
  h.variant = r.u8();
  h.alpha = r.f32();
  h.c_active = r.u16();
  h.c_max = r.u16();
  h.h = r.u16();
  h.w = r.u16();
  h.n = r.u16();
  const std::uint16_t reserved = r.u16();
  h.min = r.f32();
  h.scale = r.f32();
  h.payload_len = r.u32();

  if ((h.flags & ~kFlagExtrapolated) != 0 || reserved != 0) {
    throw CodecError(K::invalid_field, "packet has unknown flag or reserved bits set");
  }
  if (h.bits < kMinQuantBits || h.bits > kMaxQuantBits) {
    throw CodecError(K::unsupported_bits, "packet bits out of range: " + std::to_string(h.bits));
  }
  if (h.variant > static_cast<std::uint8_t>(CompressorVariant::decompressor_only)) {
    throw CodecError(K::invalid_field, "unknown compressor variant code");
  }
  if (!(std::isfinite(h.alpha) && h.alpha > 0.0f && h.alpha <= 1.0f)) {
    throw CodecError(K::invalid_field, "packet alpha outside (0, 1]");
  }
  if (h.c_active == 0 || h.c_active > h.c_max || h.h == 0 || h.w == 0 || h.n == 0) {
    throw CodecError(K::invalid_field, "packet dimensions invalid");
  }
  if (!std::isfinite(h.min) || !std::isfinite(h.scale) || !(h.scale > 0.0f)) {
    throw CodecError(K::invalid_field, "packet min/scale not finite and positive");
  }
  const std::size_t count = static_cast<std::size_t>(h.n) * h.c_active * h.h * h.w;
  const std::size_t expected = packed_bytes(count, h.bits);
  if (h.payload_len != expected) {
    throw CodecError(K::length_mismatch, "payload_len " + std::to_string(h.payload_len) +
                                             " inconsistent with shape (expected " +
                                             std::to_string(expected) + ")");
  }
  const std::size_t available = bytes.size() - kPacketHeaderBytes;
  if (available < expected) {
    throw CodecError(K::truncated, "payload truncated: " + std::to_string(available) +
                                       " of " + std::to_string(expected) + " bytes");
  }
  if (available > expected) {
    throw CodecError(K::length_mismatch, "trailing bytes after payload");
  }

  const std::uint8_t* payload = bytes.data() + kPacketHeaderBytes;
  Quantized& q = d.quantized;
  q.shape = {h.n, h.c_active, h.h, h.w};
  q.params = QuantParams{h.bits, h.min, h.scale};
  q.codes.resize(count);
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint8_t code = 0;
    for (int b = 0; b < h.bits; ++b, ++bit) {
      code = static_cast<std::uint8_t>(
          (code << 1) | ((payload[bit / 8] >> (7 - bit % 8)) & 1u));
    }
    q.codes[i] = code;
  }
  for (; bit < expected * 8; ++bit) {
    if ((payload[bit / 8] >> (7 - bit % 8)) & 1u) {
      throw CodecError(K::invalid_field, "non-zero padding bits in payload");
    }
  }
  d.values = dequantize(q);
  return d;
}

}  // namespace slimsplit
