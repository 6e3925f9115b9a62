// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace slimsplit {

// Counts multiply-accumulates actually executed by the convolution kernels,
// keyed by layer label. Installed per thread with ScopedMacTally.
class MacTally {
 public:
  void add(std::string_view layer, std::uint64_t macs);
  std::uint64_t total() const;
  std::uint64_t at(std::string_view layer) const;
  const std::map<std::string, std::uint64_t, std::less<>>& by_layer() const {
    return counts_;
  }
  void clear() { counts_.clear(); }

 private:
  std::map<std::string, std::uint64_t, std::less<>> counts_;
};

class ScopedMacTally {
 public:
  explicit ScopedMacTally(MacTally& tally);
  ~ScopedMacTally();
  ScopedMacTally(const ScopedMacTally&) = delete;
  ScopedMacTally& operator=(const ScopedMacTally&) = delete;

 private:
  MacTally* previous_;
};

// Null when no tally is installed on this thread.
MacTally* current_mac_tally();

}  // namespace slimsplit
