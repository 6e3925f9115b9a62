// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/dataset.hpp"

#include <algorithm>

#include "slimsplit/checkpoint.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/rng.hpp"

namespace slimsplit {
namespace {

constexpr std::uint64_t kDataStream = 404;

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

Rng image_rng(std::uint64_t seed, SplitKind split, std::size_t index) {
  return Rng(mix_seed(seed, kDataStream + static_cast<std::uint64_t>(split), index));
}

std::vector<Rect> draw_rects(const SyntheticDatasetSpec& spec, Rng& rng) {
  const auto count = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(spec.rect_min), static_cast<std::int64_t>(spec.rect_max)));
  std::vector<Rect> rects(count);
  const auto side = [&] {
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(spec.side_min),
                                                    static_cast<std::int64_t>(spec.side_max)));
  };
  for (Rect& r : rects) {
    r.w = side();
    r.h = side();
    r.x0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kImageSize - r.w)));
    r.y0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kImageSize - r.h)));
  }
  return rects;
}

}  // namespace

void SyntheticDatasetSpec::validate() const {
  if (train_size < 1 || val_size < 1) throw ArgumentError("dataset sizes must be >= 1");
  if (rect_min < 1 || rect_min > rect_max) throw ArgumentError("need 1 <= rect_min <= rect_max");
  if (side_min < 1 || side_min > side_max || side_max > kImageSize) {
    throw ArgumentError("need 1 <= side_min <= side_max <= 64");
  }
  if (!(color_min >= 0.0 && color_min <= color_max)) throw ArgumentError("bad colour range");
  if (!(noise_sd >= 0.0)) throw ArgumentError("noise_sd must be >= 0");
}

std::size_t Rect::cell_x() const { return (2 * x0 + w) / (2 * (kImageSize / kGridSize)); }
std::size_t Rect::cell_y() const { return (2 * y0 + h) / (2 * (kImageSize / kGridSize)); }

std::vector<Rect> sample_rects(const SyntheticDatasetSpec& spec, std::uint64_t seed,
                               SplitKind split, std::size_t index) {
  Rng rng = image_rng(seed, split, index);
  return draw_rects(spec, rng);
}

void render_image(const SyntheticDatasetSpec& spec, std::uint64_t seed, SplitKind split,
                  std::size_t index, DatasetSplit& out, std::size_t slot) {
  Rng rng = image_rng(seed, split, index);
  const std::vector<Rect> rects = draw_rects(spec, rng);

  const std::size_t plane = kImageSize * kImageSize;
  float* img = out.images.data() + slot * kImageChannels * plane;
  for (std::size_t i = 0; i < kImageChannels * plane; ++i) {
    img[i] = static_cast<float>(rng.normal(0.0, spec.noise_sd));
  }
  float* label = out.labels.data() + slot * kGridSize * kGridSize;
  std::fill(label, label + kGridSize * kGridSize, 0.0f);
  for (const Rect& r : rects) {
    for (std::size_t c = 0; c < kImageChannels; ++c) {
      const double colour = rng.uniform(spec.color_min, spec.color_max);
      for (std::size_t y = r.y0; y < r.y0 + r.h; ++y) {
        for (std::size_t x = r.x0; x < r.x0 + r.w; ++x) {
          img[c * plane + y * kImageSize + x] += static_cast<float>(colour);
        }
      }
    }
    label[r.cell_y() * kGridSize + r.cell_x()] = 1.0f;
  }
}

DatasetSplit gen_split(const SyntheticDatasetSpec& spec, std::uint64_t seed, SplitKind split,
                       std::size_t count) {
  DatasetSplit s;
  s.images = Tensor32({count, kImageChannels, kImageSize, kImageSize});
  s.labels = Tensor32({count, 1, kGridSize, kGridSize});
  for (std::size_t i = 0; i < count; ++i) render_image(spec, seed, split, i, s, i);
  return s;
}

Dataset gen_dataset(const SyntheticDatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset d;
  d.spec = spec;
  d.seed = seed;
  d.train = gen_split(spec, seed, SplitKind::train, spec.train_size);
  d.val = gen_split(spec, seed, SplitKind::val, spec.val_size);
  return d;
}

std::uint64_t split_hash(const DatasetSplit& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv(h, s.images.data(), s.images.size() * sizeof(float));
  fnv(h, s.labels.data(), s.labels.size() * sizeof(float));
  return h;
}

std::uint64_t dataset_hash(const Dataset& d) {
  std::uint64_t h = split_hash(d.train);
  const std::uint64_t v = split_hash(d.val);
  fnv(h, &v, sizeof v);
  return h;
}

DatasetSplit batch_of(const DatasetSplit& s, std::size_t first, std::size_t count) {
  return {batch_slice(s.images, first, count), batch_slice(s.labels, first, count)};
}

DatasetSplit gather(const DatasetSplit& s, const std::vector<std::size_t>& rows) {
  const Shape is = s.images.shape();
  const Shape ls = s.labels.shape();
  DatasetSplit out{Tensor32({rows.size(), is.c, is.h, is.w}),
                   Tensor32({rows.size(), ls.c, ls.h, ls.w})};
  const std::size_t ip = is.c * is.plane();
  const std::size_t lp = ls.c * ls.plane();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= is.n) throw ShapeError("gather", "row index", is.n, rows[i]);
    std::copy_n(s.images.data() + rows[i] * ip, ip, out.images.data() + i * ip);
    std::copy_n(s.labels.data() + rows[i] * lp, lp, out.labels.data() + i * lp);
  }
  return out;
}

void save_dataset(const Dataset& d, const std::string& path) {
  Checkpoint ck;
  const SyntheticDatasetSpec& s = d.spec;
  ck.put("meta.dataset",
         Tensor64(vector_shape(11),
                  std::vector<double>{static_cast<double>(s.train_size),
                                      static_cast<double>(s.val_size),
                                      static_cast<double>(s.rect_min),
                                      static_cast<double>(s.rect_max),
                                      static_cast<double>(s.side_min),
                                      static_cast<double>(s.side_max), s.color_min,
                                      s.color_max, s.noise_sd,
                                      static_cast<double>(d.seed >> 32),
                                      static_cast<double>(d.seed & 0xffffffffu)}));
  ck.put("train.images", d.train.images);
  ck.put("train.labels", d.train.labels);
  ck.put("val.images", d.val.images);
  ck.put("val.labels", d.val.labels);
  ck.save(path);
}

Dataset load_dataset(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  const Tensor64 m = ck.get64("meta.dataset");
  if (m.size() != 11) {
    throw CheckpointError(CheckpointError::Kind::malformed, "dataset metadata is malformed");
  }
  Dataset d;
  SyntheticDatasetSpec& s = d.spec;
  s.train_size = static_cast<std::size_t>(m[0]);
  s.val_size = static_cast<std::size_t>(m[1]);
  s.rect_min = static_cast<std::size_t>(m[2]);
  s.rect_max = static_cast<std::size_t>(m[3]);
  s.side_min = static_cast<std::size_t>(m[4]);
  s.side_max = static_cast<std::size_t>(m[5]);
  s.color_min = m[6];
  s.color_max = m[7];
  s.noise_sd = m[8];
  d.seed = (static_cast<std::uint64_t>(m[9]) << 32) | static_cast<std::uint64_t>(m[10]);
  d.train = {ck.get32("train.images"), ck.get32("train.labels")};
  d.val = {ck.get32("val.images"), ck.get32("val.labels")};
  const Shape want{s.train_size, kImageChannels, kImageSize, kImageSize};
  if (d.train.images.shape() != want || d.train.labels.shape().n != s.train_size ||
      d.val.images.shape().n != s.val_size || d.val.labels.shape().n != s.val_size) {
    throw CheckpointError(CheckpointError::Kind::malformed, "dataset tensors disagree with metadata");
  }
  return d;
}

}  // namespace slimsplit
