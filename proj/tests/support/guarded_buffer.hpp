// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

// Byte buffer flush against a PROT_NONE page, so a read one byte outside the
// data faults instead of silently succeeding.

#pragma once

#include <sys/mman.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace slimsplit::testing {

class GuardedBuffer {
 public:
  enum class Guard { after, before };

  GuardedBuffer(std::span<const std::uint8_t> bytes, Guard guard) {
    page_ = static_cast<std::size_t>(::sysconf(_SC_PAGESIZE));
    const std::size_t data_pages = (bytes.size() + page_ - 1) / page_ + 1;
    len_ = (data_pages + 1) * page_;
    void* p = ::mmap(nullptr, len_, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (p == MAP_FAILED) throw std::runtime_error("mmap failed");
    base_ = static_cast<std::uint8_t*>(p);
    std::uint8_t* data = nullptr;
    if (guard == Guard::after) {
      std::uint8_t* fence = base_ + data_pages * page_;
      ::mprotect(fence, page_, PROT_NONE);
      data = fence - bytes.size();
    } else {
      ::mprotect(base_, page_, PROT_NONE);
      data = base_ + page_;
    }
    if (!bytes.empty()) std::memcpy(data, bytes.data(), bytes.size());
    view_ = std::span<const std::uint8_t>(data, bytes.size());
  }
  ~GuardedBuffer() { ::munmap(base_, len_); }
  GuardedBuffer(const GuardedBuffer&) = delete;
  GuardedBuffer& operator=(const GuardedBuffer&) = delete;

  std::span<const std::uint8_t> span() const { return view_; }

 private:
  std::size_t page_ = 0;
  std::size_t len_ = 0;
  std::uint8_t* base_ = nullptr;
  std::span<const std::uint8_t> view_;
};

}  // namespace slimsplit::testing
