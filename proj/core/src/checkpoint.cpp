// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

namespace slimsplit {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'O', 'D'};
constexpr std::size_t kPreamble = 12;  // magic + version + count
constexpr double kTeacherTag = 1.0;
constexpr double kStudentTag = 2.0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

template <class T>
CheckpointEntry make_entry(const std::string& name, const BasicTensor<T>& t) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  CheckpointEntry e;
  e.name = name;
  e.dtype = sizeof(T) == 4 ? DType::f32 : DType::f64;
  e.shape = t.shape();
  e.bytes.resize(t.size() * sizeof(T));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Bits b = std::bit_cast<Bits>(t[i]);
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      e.bytes[i * sizeof(T) + k] = static_cast<std::uint8_t>(b >> (8 * k));
    }
  }
  return e;
}

template <class T>
BasicTensor<T> read_entry(const CheckpointEntry& e) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const DType want = sizeof(T) == 4 ? DType::f32 : DType::f64;
  if (e.dtype != want) {
    throw CheckpointError(CheckpointError::Kind::type_mismatch,
                          "checkpoint entry '" + e.name + "' has a different dtype");
  }
  BasicTensor<T> t(e.shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    Bits b = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      b |= static_cast<Bits>(e.bytes[i * sizeof(T) + k]) << (8 * k);
    }
    t[i] = std::bit_cast<T>(b);
  }
  return t;
}

void restore(const Checkpoint& ck, const std::vector<NamedTensor>& tensors) {
  for (const NamedTensor& nt : tensors) {
    Tensor64 t = ck.get64(nt.name);
    if (t.shape() != nt.tensor->shape()) {
      throw CheckpointError(CheckpointError::Kind::malformed,
                            "checkpoint entry '" + nt.name + "' has shape " +
                                t.shape().str() + ", model expects " +
                                nt.tensor->shape().str());
    }
    *nt.tensor = std::move(t);
  }
}

double meta_scalar(const Checkpoint& ck, const std::string& name) {
  const Tensor64 t = ck.get64(name);
  if (t.size() != 1) {
    throw CheckpointError(CheckpointError::Kind::malformed, "meta entry '" + name + "' is not a scalar");
  }
  return t[0];
}

void check_tag(const Checkpoint& ck, double tag, const char* what) {
  if (!ck.contains("meta.model") || meta_scalar(ck, "meta.model") != tag) {
    throw CheckpointError(CheckpointError::Kind::malformed,
                          std::string("checkpoint does not hold a ") + what);
  }
}

}  // namespace

void Checkpoint::put(const std::string& name, const Tensor64& t) {
  if (contains(name)) throw ArgumentError("duplicate checkpoint entry '" + name + "'");
  entries_.push_back(make_entry(name, t));
}

void Checkpoint::put(const std::string& name, const Tensor32& t) {
  if (contains(name)) throw ArgumentError("duplicate checkpoint entry '" + name + "'");
  entries_.push_back(make_entry(name, t));
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const CheckpointEntry& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw CheckpointError(CheckpointError::Kind::missing_entry,
                        "checkpoint has no entry '" + name + "'");
}

Tensor64 Checkpoint::get64(const std::string& name) const {
  return read_entry<double>(entry(name));
}

Tensor32 Checkpoint::get32(const std::string& name) const {
  return read_entry<float>(entry(name));
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    if (e.name.size() > 0xffff) throw ArgumentError("checkpoint entry name too long");
    put_u16(out, static_cast<std::uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(static_cast<std::uint8_t>(e.dtype));
    out.push_back(4);
    for (std::size_t d : {e.shape.n, e.shape.c, e.shape.h, e.shape.w}) {
      if (d > 0xffffffffu) throw ArgumentError("checkpoint dimension exceeds 32 bits");
      put_u32(out, static_cast<std::uint32_t>(d));
    }
    out.insert(out.end(), e.bytes.begin(), e.bytes.end());
  }
  put_u32(out, crc32_of(out.data(), out.size()));
  return out;
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  using K = CheckpointError::Kind;
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw CheckpointError(K::bad_magic, "not a checkpoint file (bad magic)");
  }
  if (bytes.size() < kPreamble + 4) throw CheckpointError(K::truncated, "checkpoint truncated in header");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(K::unsupported_version,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(bytes.data() + 8);
  const std::size_t body_end = bytes.size() - 4;

  // Walk the table structurally first so truncation is reported as such.
  struct Span {
    std::size_t name_at, name_len, data_at;
    DType dtype;
    Shape shape;
  };
  std::vector<Span> spans;
  std::size_t pos = kPreamble;
  auto need = [&](std::size_t n) {
    if (n > body_end - pos) throw CheckpointError(K::truncated, "checkpoint truncated");
  };
  for (std::uint32_t i = 0; i < count; ++i) {
    need(2);
    Span s{};
    s.name_len = bytes[pos] | (bytes[pos + 1] << 8);
    pos += 2;
    need(s.name_len + 2 + 16);
    s.name_at = pos;
    pos += s.name_len;
    const std::uint8_t dtype = bytes[pos];
    const std::uint8_t rank = bytes[pos + 1];
    pos += 2;
    if ((dtype != 1 && dtype != 2) || rank != 4) {
      // Could be corruption of an otherwise complete file; let the checksum
      // decide when it fails.
      if (crc32_of(bytes.data(), body_end) != get_u32(bytes.data() + body_end)) {
        throw CheckpointError(K::checksum_mismatch, "checkpoint checksum mismatch");
      }
      throw CheckpointError(K::malformed, "checkpoint entry has bad dtype or rank");
    }
    s.dtype = static_cast<DType>(dtype);
    std::size_t dims[4];
    for (std::size_t& d : dims) {
      d = get_u32(bytes.data() + pos);
      pos += 4;
    }
    s.shape = {dims[0], dims[1], dims[2], dims[3]};
    const std::size_t len = s.shape.numel() * dtype_size(s.dtype);
    need(len);
    s.data_at = pos;
    pos += len;
    spans.push_back(s);
  }
  if (pos != body_end) {
    throw CheckpointError(K::malformed, "checkpoint has trailing bytes after its table");
  }
  if (crc32_of(bytes.data(), body_end) != get_u32(bytes.data() + body_end)) {
    throw CheckpointError(K::checksum_mismatch, "checkpoint checksum mismatch");
  }

  Checkpoint ck;
  for (const Span& s : spans) {
    CheckpointEntry e;
    e.name.assign(reinterpret_cast<const char*>(bytes.data() + s.name_at), s.name_len);
    e.dtype = s.dtype;
    e.shape = s.shape;
    e.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(s.data_at),
                   bytes.begin() + static_cast<std::ptrdiff_t>(
                                       s.data_at + s.shape.numel() * dtype_size(s.dtype)));
    ck.entries_.push_back(std::move(e));
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path, "cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path, "write failed");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void save_teacher(TeacherNet& teacher, const std::string& path) {
  Checkpoint ck;
  ck.put("meta.model", Tensor64(vector_shape(1), kTeacherTag));
  for (const NamedTensor& nt : teacher.tensors()) ck.put(nt.name, *nt.tensor);
  ck.save(path);
}

TeacherNet load_teacher(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  check_tag(ck, kTeacherTag, "teacher");
  TeacherNet t = build_teacher(0);
  restore(ck, t.tensors());
  t.freeze();
  return t;
}

void save_student(SplitStudent& student, const std::string& path) {
  Checkpoint ck;
  ck.put("meta.model", Tensor64(vector_shape(1), kStudentTag));
  ck.put("meta.spec", Tensor64(vector_shape(4),
                               std::vector<double>{
                                   static_cast<double>(student.spec.channels),
                                   static_cast<double>(student.spec.variant),
                                   static_cast<double>(student.mode),
                                   student.allow_extrapolation ? 1.0 : 0.0}));
  std::vector<double> widths;
  for (const WidthMultiplier& a : student.widths) {
    widths.push_back(static_cast<double>(a.num()));
    widths.push_back(static_cast<double>(a.den()));
  }
  ck.put("meta.widths", Tensor64(vector_shape(widths.size()), widths));
  for (const NamedTensor& nt : student.tensors()) ck.put(nt.name, *nt.tensor);
  ck.save(path);
}

SplitStudent load_student(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  check_tag(ck, kStudentTag, "student");
  const Tensor64 spec = ck.get64("meta.spec");
  const Tensor64 w = ck.get64("meta.widths");
  if (spec.size() != 4 || w.size() == 0 || w.size() % 2 != 0 || spec[1] < 0 ||
      spec[1] > 2 || spec[2] < 0 || spec[2] > 1 || spec[0] < 1) {
    throw CheckpointError(CheckpointError::Kind::malformed, "student metadata is malformed");
  }
  BottleneckSpec bs;
  bs.channels = static_cast<std::size_t>(spec[0]);
  bs.variant = static_cast<CompressorVariant>(static_cast<int>(spec[1]));
  std::vector<WidthMultiplier> widths;
  for (std::size_t i = 0; i < w.size(); i += 2) {
    widths.emplace_back(static_cast<std::int64_t>(w[i]), static_cast<std::int64_t>(w[i + 1]));
  }
  StudentOptions opts;
  opts.pretrained_encoder = false;
  opts.allow_extrapolation = spec[3] != 0.0;
  const TeacherNet shell = build_teacher(0);
  SplitStudent s = build_student(shell, bs, WidthSet(std::move(widths)),
                                 static_cast<SplitMode>(static_cast<int>(spec[2])), opts);
  restore(ck, s.tensors());
  return s;
}

void save_tensor(const Tensor32& t, const std::string& path) {
  Checkpoint ck;
  ck.put("tensor", t);
  ck.save(path);
}

Tensor32 load_tensor(const std::string& path) {
  return Checkpoint::load(path).get32("tensor");
}

}  // namespace slimsplit
