// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/width.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slimsplit/error.hpp"

namespace slimsplit {

WidthMultiplier::WidthMultiplier(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num <= 0 || num > den) {
    throw ArgumentError("width multiplier must lie in (0, 1], got " +
                        std::to_string(num) + "/" + std::to_string(den));
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

WidthMultiplier WidthMultiplier::parse(std::string_view text) {
  auto bad = [&] { return ArgumentError("invalid width multiplier '" + std::string(text) + "'"); };
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw bad();
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char ch : text) {
    if (ch == '.') {
      if (seen_dot) throw bad();
      seen_dot = true;
    } else if (ch >= '0' && ch <= '9') {
      if (den >= 1'000'000'000'000LL) throw bad();
      num = num * 10 + (ch - '0');
      if (seen_dot) den *= 10;
      seen_digit = true;
    } else {
      throw bad();
    }
  }
  if (!seen_digit) throw bad();
  return WidthMultiplier(num, den);
}

WidthMultiplier WidthMultiplier::from_double(double value) {
  const auto num = static_cast<std::int64_t>(std::llround(value * 1'000'000.0));
  return WidthMultiplier(num, 1'000'000);
}

std::string WidthMultiplier::str() const {
  // Exact when the denominator divides a power of ten, which holds for
  // everything built by parse()/from_double().
  std::int64_t den = 1;
  int digits = 0;
  while (den % den_ != 0 && digits < 12) {
    den *= 10;
    ++digits;
  }
  if (den % den_ != 0) return std::to_string(num_) + "/" + std::to_string(den_);
  const std::int64_t scaled = num_ * (den / den_);
  if (digits == 0) return std::to_string(scaled);
  std::string frac = std::to_string(scaled % den);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return std::to_string(scaled / den) + "." + frac;
}

std::size_t resolve_width(const WidthMultiplier& alpha, std::size_t c_max) {
  if (c_max < 1) throw ArgumentError("resolve_width: c_max must be >= 1");
  const std::int64_t prod = alpha.num() * static_cast<std::int64_t>(c_max);
  const std::int64_t ceil = (prod + alpha.den() - 1) / alpha.den();
  return std::clamp<std::size_t>(static_cast<std::size_t>(ceil), 1, c_max);
}

WidthSet::WidthSet(std::vector<WidthMultiplier> widths) : widths_(std::move(widths)) {
  if (widths_.empty()) throw ArgumentError("width set must not be empty");
  std::sort(widths_.begin(), widths_.end());
  if (std::adjacent_find(widths_.begin(), widths_.end()) != widths_.end()) {
    throw ArgumentError("width set contains duplicate widths");
  }
}

WidthSet WidthSet::parse(std::string_view csv) {
  std::vector<WidthMultiplier> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? csv.size() : comma;
    out.push_back(WidthMultiplier::parse(csv.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return WidthSet(std::move(out));
}

WidthSet WidthSet::default_set() { return parse("0.25,0.33,0.5,0.66,1.0"); }

bool WidthSet::contains(const WidthMultiplier& a) const {
  return std::binary_search(widths_.begin(), widths_.end(), a);
}

std::string WidthSet::str() const {
  std::string out;
  for (const auto& w : widths_) {
    if (!out.empty()) out += ",";
    out += w.str();
  }
  return out;
}

std::vector<WidthMultiplier> sandwich_sample(const WidthSet& set, std::size_t n,
                                             Rng& rng) {
  if (n < 2) throw ArgumentError("sandwich_sample: n must be >= 2");
  if (n > set.size()) {
    throw ArgumentError("sandwich_sample: n = " + std::to_string(n) +
                        " exceeds width set size " + std::to_string(set.size()));
  }
  const auto& w = set.widths();
  // Partial Fisher-Yates over interior indices.
  std::vector<std::size_t> interior(w.size() - 2);
  std::iota(interior.begin(), interior.end(), std::size_t{1});
  const std::size_t picks = n - 2;
  for (std::size_t i = 0; i < picks; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i),
                        static_cast<std::int64_t>(interior.size() - 1)));
    std::swap(interior[i], interior[j]);
  }
  std::vector<std::size_t> chosen(interior.begin(), interior.begin() + static_cast<std::ptrdiff_t>(picks));
  chosen.push_back(0);
  chosen.push_back(w.size() - 1);
  std::sort(chosen.begin(), chosen.end());
  std::vector<WidthMultiplier> out;
  out.reserve(n);
  for (std::size_t idx : chosen) out.push_back(w[idx]);
  return out;
}

}  // namespace slimsplit
