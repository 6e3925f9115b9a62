// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "slimsplit/tensor.hpp"

namespace slimsplit {

// Rectangles on Gaussian noise. Each image gets rect_min..rect_max
// axis-aligned rectangles with integer sides in [side_min, side_max] and a
// per-channel colour in [color_min, color_max]; a grid cell is positive when
// a rectangle centre falls inside it.
struct SyntheticDatasetSpec {
  std::size_t train_size = 2000;
  std::size_t val_size = 500;
  std::size_t rect_min = 1;
  std::size_t rect_max = 4;
  std::size_t side_min = 6;
  std::size_t side_max = 24;
  double color_min = 0.25;
  double color_max = 1.0;
  double noise_sd = 0.1;

  void validate() const;
};

struct Rect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  // Grid cell holding the centre (x0 + w/2, y0 + h/2).
  std::size_t cell_x() const;
  std::size_t cell_y() const;
};

struct DatasetSplit {
  Tensor32 images;  // (N, 3, 64, 64)
  Tensor32 labels;  // (N, 1, 8, 8), 0 or 1

  std::size_t size() const { return images.shape().n; }
};

struct Dataset {
  SyntheticDatasetSpec spec;
  std::uint64_t seed = 0;
  DatasetSplit train;
  DatasetSplit val;
};

enum class SplitKind : std::uint8_t { train = 0, val = 1 };

// Geometry of image `index`; a pure function of its arguments.
std::vector<Rect> sample_rects(const SyntheticDatasetSpec& spec, std::uint64_t seed,
                               SplitKind split, std::size_t index);

// Writes image `index` into slot `slot` of `out`.
void render_image(const SyntheticDatasetSpec& spec, std::uint64_t seed,
                  SplitKind split, std::size_t index, DatasetSplit& out,
                  std::size_t slot);

Dataset gen_dataset(const SyntheticDatasetSpec& spec, std::uint64_t seed);
DatasetSplit gen_split(const SyntheticDatasetSpec& spec, std::uint64_t seed,
                       SplitKind split, std::size_t count);

std::uint64_t dataset_hash(const Dataset& d);
std::uint64_t split_hash(const DatasetSplit& s);

// Batch [first, first + count) of a split.
DatasetSplit batch_of(const DatasetSplit& s, std::size_t first, std::size_t count);
// Rows selected by index, in the given order.
DatasetSplit gather(const DatasetSplit& s, const std::vector<std::size_t>& rows);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace slimsplit
