// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slimsplit/dataset.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit {

struct TrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 8;
  std::size_t n_sandwich = 3;
  WidthSet widths = WidthSet::default_set();
  double lr0 = 0.02;
  std::size_t halving_period = 3;
  double momentum = 0.9;
  bool post_bn_recalibrate = false;
  std::uint64_t seed = 0;
  // Weights of the (decompressor, decoder block) taps in the loss.
  std::vector<double> tap_weights{1.0, 1.0};
  // Graph precision for training steps; train64 is for tight checks.
  Precision precision = Precision::infer32;

  void validate() const;
  // lr0 * 0.5^floor(epoch / halving_period)
  double lr_at(std::size_t epoch) const;
};

// Defaults with the halving period matched to the mode (3 / 2 epochs).
TrainConfig default_train_config(SplitMode mode);

// Non-finite loss or activation during training.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::size_t step, std::size_t batch,
                  std::optional<WidthMultiplier> alpha)
      : NumericError(what), step_(step), batch_(batch), alpha_(alpha) {}
  std::size_t step() const { return step_; }
  std::size_t batch() const { return batch_; }
  const std::optional<WidthMultiplier>& alpha() const { return alpha_; }

 private:
  std::size_t step_;
  std::size_t batch_;
  std::optional<WidthMultiplier> alpha_;
};

// Shuffled sample order of one epoch.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     std::size_t epoch);

struct TeacherReport {
  double initial_loss = 0.0;             // loss of the very first batch, before any update
  std::vector<double> epoch_mean_loss;   // mean batch loss of each epoch
  double val_toy_ap = 0.0;
};

// Minimizes per-cell binary cross-entropy on the objectness grid, then
// freezes the teacher. Epoch records go to `log` as JSON lines.
TeacherReport train_teacher(TeacherNet& teacher, const Dataset& data,
                            const TrainConfig& config, std::ostream* log = nullptr);

// Teacher mean BCE over a split, inference mode.
double teacher_loss(TeacherNet& teacher, const DatasetSplit& split);
double teacher_toy_ap(TeacherNet& teacher, const DatasetSplit& split);

// Sum over taps of weight_i * mse(student_i, teacher_i), recorded on g.
template <class T>
Var distill_loss(Graph<T>& g, const std::vector<Var>& student,
                 const std::vector<Var>& teacher,
                 const std::vector<double>& weights = {});
// Convenience form over plain tensors (unit weights).
double distill_loss(const std::vector<Tensor64>& student,
                    const std::vector<Tensor64>& teacher);

// Full-width teacher features at the two taps (block 3 and block 4 outputs).
struct TeacherFeatures {
  Tensor64 block3;
  Tensor64 block4;
};
TeacherFeatures teacher_features(TeacherNet& teacher, const Tensor32& images);

// Runs each width in order on one batch and accumulates gradients into the
// student's parameters without zeroing them. Returns the loss per width.
std::vector<double> accumulate_distill_grads(SplitStudent& student,
                                             const TeacherFeatures& targets,
                                             const Tensor32& images,
                                             const std::vector<WidthMultiplier>& widths,
                                             const TrainConfig& config);

struct WidthLoss {
  WidthMultiplier alpha;
  double mean_loss = 0.0;
  std::size_t samples = 0;  // batches that drew this width
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::size_t batches = 0;
  std::vector<std::vector<WidthMultiplier>> batch_widths;
  std::vector<WidthLoss> loss_per_width;  // ascending alpha
  double wall_time_s = 0.0;

  std::optional<double> loss_at(const WidthMultiplier& alpha) const;
};

// One sandwich-rule distillation epoch: per batch, sample widths, accumulate
// the gradients of every width, then take one SGD step.
EpochStats distill_epoch(SplitStudent& student, TeacherNet& teacher,
                         const DatasetSplit& train, const TrainConfig& config,
                         std::size_t epoch_index, std::ostream* log = nullptr);

// All epochs; runs post_bn_recalibrate per width at the end when enabled.
std::vector<EpochStats> distill(SplitStudent& student, TeacherNet& teacher,
                                const Dataset& data, const TrainConfig& config,
                                std::ostream* log = nullptr);

// Recomputes the running statistics of the slimmable blocks at width alpha
// as the plain average of per-batch statistics over the split, in order.
// Weights are not touched.
void post_bn_recalibrate(SplitStudent& student, const DatasetSplit& data,
                         const WidthMultiplier& alpha, std::size_t batch_size = 8);

struct EvalResult {
  WidthMultiplier alpha;
  std::optional<int> bits;
  double toy_ap = 0.0;
  // Sum over taps of the mean squared error against the teacher, and the sum
  // over taps of the teacher feature variance. NaN without a teacher.
  double feature_mse = 0.0;
  double teacher_variance = 0.0;
  bool extrapolated = false;
};

// With quant_bits, each image's bottleneck is quantized and dequantized
// before decoding.
EvalResult evaluate(SplitStudent& student, TeacherNet* teacher,
                    const DatasetSplit& data, const WidthMultiplier& alpha,
                    std::optional<int> quant_bits = std::nullopt,
                    std::size_t batch_size = 50);

}  // namespace slimsplit
