// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "slimsplit/rng.hpp"

namespace slimsplit {

// Fraction of active channels, held as an exact reduced rational in (0, 1]
// so that channel rounding never depends on binary floating point.
class WidthMultiplier {
 public:
  WidthMultiplier() = default;
  WidthMultiplier(std::int64_t num, std::int64_t den);

  // Parses a decimal literal such as "0.33" or "1" exactly.
  static WidthMultiplier parse(std::string_view text);
  // Nearest decimal with up to 6 fractional digits.
  static WidthMultiplier from_double(double value);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend bool operator==(const WidthMultiplier& a, const WidthMultiplier& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const WidthMultiplier& a,
                                          const WidthMultiplier& b) {
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

// ceil(alpha * c_max) clamped to [1, c_max].
std::size_t resolve_width(const WidthMultiplier& alpha, std::size_t c_max);

// Sorted, duplicate-free set of trained widths.
class WidthSet {
 public:
  WidthSet() = default;
  explicit WidthSet(std::vector<WidthMultiplier> widths);

  // "0.25,0.33,0.5,0.66,1.0"
  static WidthSet parse(std::string_view csv);
  static WidthSet default_set();

  const std::vector<WidthMultiplier>& widths() const { return widths_; }
  std::size_t size() const { return widths_.size(); }
  bool empty() const { return widths_.empty(); }
  const WidthMultiplier& min() const { return widths_.front(); }
  const WidthMultiplier& max() const { return widths_.back(); }
  bool contains(const WidthMultiplier& a) const;
  std::string str() const;

  auto begin() const { return widths_.begin(); }
  auto end() const { return widths_.end(); }

 private:
  std::vector<WidthMultiplier> widths_;
};

// Sandwich rule: the smallest and largest widths plus n - 2 distinct interior
// widths drawn uniformly without replacement. Result is ascending.
std::vector<WidthMultiplier> sandwich_sample(const WidthSet& set,
                                             std::size_t n, Rng& rng);

}  // namespace slimsplit
