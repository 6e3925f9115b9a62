// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "oracles.hpp"
#include "slimsplit/mac.hpp"
#include "slimsplit/slim_layers.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit {
namespace {

using testing::random_tensor;

WidthMultiplier W(std::string_view s) { return WidthMultiplier::parse(s); }

TEST(WidthMultiplier, ParsesDecimalsExactly) {
  EXPECT_EQ(W("0.33"), WidthMultiplier(33, 100));
  EXPECT_EQ(W("0.5"), WidthMultiplier(1, 2));
  EXPECT_EQ(W("1"), WidthMultiplier(1, 1));
  EXPECT_EQ(W("1.0").str(), "1");
  EXPECT_EQ(W("0.66").str(), "0.66");
}

TEST(WidthMultiplier, RejectsOutOfRange) {
  EXPECT_THROW(W("0"), ArgumentError);
  EXPECT_THROW(W("1.5"), ArgumentError);
  EXPECT_THROW(W("abc"), ArgumentError);
  EXPECT_THROW(W(""), ArgumentError);
  EXPECT_THROW(WidthMultiplier::from_double(-0.5), ArgumentError);
}

TEST(ResolveWidth, Examples) {
  EXPECT_EQ(resolve_width(W("1.0"), 64), 64u);
  EXPECT_EQ(resolve_width(W("0.25"), 64), 16u);
  EXPECT_EQ(resolve_width(W("0.33"), 48), 16u);
}

TEST(ResolveWidth, CeilingAndClamp) {
  for (std::size_t c = 1; c <= 80; ++c) {
    std::size_t prev = 0;
    for (int pct = 1; pct <= 100; ++pct) {
      const WidthMultiplier a(pct, 100);
      const std::size_t r = resolve_width(a, c);
      EXPECT_EQ(r, std::max<std::size_t>(1, (pct * c + 99) / 100));
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(WidthSet, SortsAndRejectsDuplicates) {
  WidthSet s = WidthSet::parse("1.0,0.25,0.5");
  EXPECT_EQ(s.min(), W("0.25"));
  EXPECT_EQ(s.max(), W("1"));
  EXPECT_THROW(WidthSet::parse("0.5,0.50"), ArgumentError);
  EXPECT_THROW(WidthSet(std::vector<WidthMultiplier>{}), ArgumentError);
}

TEST(WidthSet, DefaultSet) {
  EXPECT_EQ(WidthSet::default_set().str(), "0.25,0.33,0.5,0.66,1");
}

SlimmableConv random_layer(std::size_t ci, std::size_t co, std::size_t k, ConvGeometry geom,
                           bool slim_in, bool slim_out, Rng& rng) {
  SlimmableConv l("layer", ci, co, k, geom, slim_in, slim_out);
  l.weight.value = random_tensor(l.weight.value.shape(), rng);
  l.bias.value = random_tensor(l.bias.value.shape(), rng);
  return l;
}

// Dense oracle: a standalone conv built from the prefix slices.
Tensor64 dense_reference(const SlimmableConv& l, const Tensor64& x, const WidthMultiplier& a) {
  const ChannelSlice s = l.active(a);
  Tensor64 b({s.c_out, 1, 1, 1});
  for (std::size_t i = 0; i < s.c_out; ++i) b[i] = l.bias.value[i];
  return testing::naive_conv(x, testing::weight_prefix(l.weight.value, s.c_out, s.c_in), b,
                             l.geom.stride, l.geom.pad);
}

TEST(SlimForward, FullWidthEqualsPlainConv) {
  Rng rng(1);
  SlimmableConv l = random_layer(8, 8, 3, {1, 1}, true, true, rng);
  Tensor64 x = random_tensor({2, 8, 6, 6}, rng);
  Graph<double> g1, g2;
  Var a = slim_forward(g1, l, g1.input(x), W("1"));
  Var b = g2.conv2d(g2.input(x), l.weight, l.bias, l.geom);
  EXPECT_EQ(g1.value(a), g2.value(b));
}

TEST(SlimForward, HalfWidthEqualsDenseSlice) {
  Rng rng(2);
  SlimmableConv l = random_layer(8, 8, 3, {1, 1}, true, true, rng);
  Tensor64 x = random_tensor({2, 4, 6, 6}, rng);
  Graph<double> g;
  Var y = slim_forward(g, l, g.input(x), W("0.5"));
  Tensor64 ref = dense_reference(l, x, W("0.5"));
  ASSERT_EQ(g.value(y).shape(), (Shape{2, 4, 6, 6}));
  EXPECT_LT(testing::max_rel_diff(g.value(y).span(), ref.span()), 1e-6);
}

TEST(SlimForward, BoundaryLayerKeepsImageChannels) {
  Rng rng(3);
  SlimmableConv l = random_layer(3, 64, 3, {2, 1}, false, true, rng);
  Graph<double> g;
  Var y = slim_forward(g, l, g.input(random_tensor({1, 3, 8, 8}, rng)), W("0.5"));
  EXPECT_EQ(g.value(y).shape().c, 32u);
}

TEST(SlimForward, ChannelMismatch) {
  Rng rng(4);
  SlimmableConv l = random_layer(8, 8, 3, {1, 1}, true, true, rng);
  Graph<double> g;
  EXPECT_THROW(slim_forward(g, l, g.input(random_tensor({1, 8, 4, 4}, rng)), W("0.5")),
               ShapeError);
}

TEST(SlimForward, PrefixSliceEquivalenceRandomDraws) {
  Rng rng(5);
  for (int draw = 0; draw < 20; ++draw) {
    SlimmableConv l = random_layer(12, 10, 3, {static_cast<std::size_t>(1 + draw % 2), 1}, true, true, rng);
    for (const auto& a : WidthSet::default_set()) {
      const ChannelSlice s = l.active(a);
      Tensor64 x = random_tensor({1, s.c_in, 7, 7}, rng);
      Graph<double> g(Graph<double>::Options{.record = false});
      Var y = slim_forward(g, l, g.input(x), a);
      Tensor64 ref = dense_reference(l, x, a);
      EXPECT_LT(testing::max_rel_diff(g.value(y).span(), ref.span()), 1e-6);
    }
  }
}

TEST(MacCount, Examples) {
  SlimmableConv interior("l", 64, 64, 3, {1, 1}, true, true);
  EXPECT_EQ(mac_count(interior, W("1"), 1, 1), 36864u);
  EXPECT_EQ(mac_count(interior, W("0.5"), 1, 1), 9216u);
  SlimmableConv first("l", 3, 64, 3, {1, 1}, false, true);
  EXPECT_EQ(mac_count(first, W("0.5"), 1, 1), 864u);
}

TEST(MacCount, QuadraticForInteriorLinearForBoundary) {
  SlimmableConv interior("l", 64, 48, 3, {1, 1}, true, true);
  SlimmableConv boundary("b", 3, 48, 3, {1, 1}, false, true);
  for (const char* s : {"0.25", "0.5", "0.75", "1"}) {
    const WidthMultiplier a = W(s);
    const std::uint64_t full = mac_count(interior, W("1"), 8, 8);
    const std::uint64_t slim = mac_count(interior, a, 8, 8);
    // alpha = p/q: slim * q^2 == full * p^2 exactly
    EXPECT_EQ(slim * static_cast<std::uint64_t>(a.den() * a.den()),
              full * static_cast<std::uint64_t>(a.num() * a.num()));
    const std::uint64_t bfull = mac_count(boundary, W("1"), 8, 8);
    const std::uint64_t bslim = mac_count(boundary, a, 8, 8);
    EXPECT_EQ(bslim * static_cast<std::uint64_t>(a.den()),
              bfull * static_cast<std::uint64_t>(a.num()));
  }
}

TEST(MacCount, InstrumentedForwardMatchesFormula) {
  Rng rng(6);
  for (auto [slim_in, slim_out] : {std::pair{true, true}, {false, true}, {true, false}}) {
    SlimmableConv l = random_layer(9, 7, 3, {2, 1}, slim_in, slim_out, rng);
    for (const auto& a : WidthSet::default_set()) {
      const ChannelSlice s = l.active(a);
      MacTally tally;
      Graph<float> g(Graph<float>::Options{.record = false});
      Var y;
      {
        ScopedMacTally scope(tally);
        y = slim_forward(g, l, g.input(testing::random_tensor32({1, s.c_in, 11, 11}, rng)), a);
      }
      const Shape os = g.value(y).shape();
      EXPECT_EQ(tally.at("layer"), mac_count(l, a, os.h, os.w));
      EXPECT_EQ(tally.total(), tally.at("layer"));
    }
  }
}

TEST(MacReport, TotalsAreSumsOfParts) {
  MacReport r;
  r.layers = {{"a", Section::encoder, 10}, {"b", Section::compressor, 5},
              {"c", Section::decompressor, 7}, {"d", Section::decoder, 3}};
  EXPECT_EQ(r.total(), 25u);
  EXPECT_EQ(r.total(Section::encoder), 10u);
  EXPECT_EQ(r.client(), 15u);
  const std::string csv = mac_report_csv({r});
  EXPECT_NE(csv.find("a,encoder,"), std::string::npos);
}

TEST(Sandwich, NoInterior) {
  Rng rng(1);
  auto s = sandwich_sample(WidthSet::parse("0.25,1.0"), 2, rng);
  EXPECT_EQ(s, (std::vector<WidthMultiplier>{W("0.25"), W("1")}));
}

TEST(Sandwich, OneInteriorPick) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto s = sandwich_sample(WidthSet::parse("0.25,0.5,0.75,1.0"), 3, rng);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.front(), W("0.25"));
    EXPECT_EQ(s.back(), W("1"));
    EXPECT_TRUE(s[1] == W("0.5") || s[1] == W("0.75"));
  }
}

TEST(Sandwich, SeededReplay) {
  Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(sandwich_sample(WidthSet::default_set(), 4, a),
              sandwich_sample(WidthSet::default_set(), 4, b));
  }
}

TEST(Sandwich, GuaranteeHoldsForAnySizeAndSeed) {
  const WidthSet set = WidthSet::default_set();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    for (std::size_t n = 2; n <= set.size(); ++n) {
      auto s = sandwich_sample(set, n, rng);
      ASSERT_EQ(s.size(), n);
      EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
      EXPECT_EQ(std::set<WidthMultiplier>(s.begin(), s.end()).size(), n);
      EXPECT_EQ(s.front(), set.min());
      EXPECT_EQ(s.back(), set.max());
    }
  }
}

TEST(Sandwich, InteriorDrawIsRoughlyUniform) {
  const WidthSet set = WidthSet::default_set();
  Rng rng(17);
  std::map<std::string, int> hits;
  const int trials = 6000;
  for (int i = 0; i < trials; ++i) hits[sandwich_sample(set, 3, rng)[1].str()]++;
  for (const char* w : {"0.33", "0.5", "0.66"}) {
    // expected 2000 each, sd ~36.5
    EXPECT_NEAR(hits[w], trials / 3, 150) << w;
  }
}

TEST(Sandwich, TooManyWidthsRejected) {
  Rng rng(1);
  EXPECT_THROW(sandwich_sample(WidthSet::parse("1.0"), 2, rng), ArgumentError);
  EXPECT_THROW(sandwich_sample(WidthSet::default_set(), 6, rng), ArgumentError);
}

}  // namespace
}  // namespace slimsplit
