// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/mac.hpp"

namespace slimsplit {
namespace {
thread_local MacTally* g_tally = nullptr;
}

void MacTally::add(std::string_view layer, std::uint64_t macs) {
  auto it = counts_.find(layer);
  if (it == counts_.end()) {
    counts_.emplace(std::string(layer), macs);
  } else {
    it->second += macs;
  }
}

std::uint64_t MacTally::total() const {
  std::uint64_t sum = 0;
  for (const auto& [_, n] : counts_) sum += n;
  return sum;
}

std::uint64_t MacTally::at(std::string_view layer) const {
  auto it = counts_.find(layer);
  return it == counts_.end() ? 0 : it->second;
}

ScopedMacTally::ScopedMacTally(MacTally& tally) : previous_(g_tally) {
  g_tally = &tally;
}

ScopedMacTally::~ScopedMacTally() { g_tally = previous_; }

MacTally* current_mac_tally() { return g_tally; }

}  // namespace slimsplit
