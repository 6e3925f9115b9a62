// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slimsplit/error.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/tensor.hpp"

namespace slimsplit {

// Named tensor table file.
//
//   "SCOD"  u32 version  u32 entry_count
//   entry_count x { u16 name_len, name, u8 dtype, u8 rank(=4), rank x u32 dim,
//                   little-endian elements }
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

class CheckpointError : public Error {
 public:
  enum class Kind {
    bad_magic,
    unsupported_version,
    truncated,
    checksum_mismatch,
    malformed,
    missing_entry,
    type_mismatch,
  };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::f64;
  Shape shape;
  std::vector<std::uint8_t> bytes;  // little-endian elements
};

class Checkpoint {
 public:
  void put(const std::string& name, const Tensor64& t);
  void put(const std::string& name, const Tensor32& t);

  bool contains(const std::string& name) const;
  const CheckpointEntry& entry(const std::string& name) const;
  Tensor64 get64(const std::string& name) const;
  Tensor32 get32(const std::string& name) const;
  const std::vector<CheckpointEntry>& entries() const { return entries_; }

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::vector<CheckpointEntry> entries_;
};

void save_teacher(TeacherNet& teacher, const std::string& path);
TeacherNet load_teacher(const std::string& path);

// Stores every tensor plus the bottleneck spec, mode and width set.
void save_student(SplitStudent& student, const std::string& path);
SplitStudent load_student(const std::string& path);

// Single-tensor files used by the command-line codec tools.
void save_tensor(const Tensor32& t, const std::string& path);
Tensor32 load_tensor(const std::string& path);

}  // namespace slimsplit
