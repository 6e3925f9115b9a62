// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "slimsplit/codec.hpp"
#include "slimsplit/metrics.hpp"
#include "slimsplit/optim.hpp"

namespace slimsplit {
namespace {

constexpr std::uint64_t kShuffleStream = 303;
constexpr std::uint64_t kSandwichStream = 505;
constexpr std::size_t kEvalBatch = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class T>
using GraphOpts = typename Graph<T>::Options;

template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> teacher_taps(TeacherNet& teacher,
                                                       const Tensor32& images) {
  Graph<T> g(GraphOpts<T>{.record = false, .checked = true});
  auto out = teacher.forward(g, g.input(images.template cast<T>()), false);
  return {g.value(out.blocks[2]), g.value(out.blocks[3])};
}

template <class T>
double teacher_step(TeacherNet& teacher, const DatasetSplit& batch,
                    std::span<Parameter* const> params, const SgdConfig& sgd) {
  Graph<T> g;
  auto out = teacher.forward(g, g.input(batch.images.template cast<T>()), true);
  Var loss = g.bce_with_logits(out.logits, g.input(batch.labels.template cast<T>()));
  const double value = static_cast<double>(g.value(loss)[0]);
  g.backward(loss);
  sgd_update(params, sgd);
  return value;
}

template <class T>
std::vector<double> accumulate_impl(SplitStudent& student, const TeacherFeatures& targets,
                                    const Tensor32& images,
                                    const std::vector<WidthMultiplier>& widths,
                                    const std::vector<double>& weights) {
  const BasicTensor<T> x = images.template cast<T>();
  const BasicTensor<T> t3 = targets.block3.template cast<T>();
  const BasicTensor<T> t4 = targets.block4.template cast<T>();
  std::vector<double> losses;
  for (const WidthMultiplier& alpha : widths) {
    Graph<T> g;
    Var z = student.encode(g, g.input(x), alpha, true);
    auto taps = student.decode(g, z, alpha, true);
    Var loss = distill_loss(g, {taps.decompressed, taps.decoder_block},
                            {g.input(t3), g.input(t4)}, weights);
    losses.push_back(static_cast<double>(g.value(loss)[0]));
    if (!std::isfinite(losses.back())) throw NumericError("non-finite distillation loss");
    g.backward(loss);
  }
  return losses;
}

void write_json_line(std::ostream* log, const nlohmann::json& j) {
  if (log) *log << j.dump() << '\n' << std::flush;
}

std::vector<BatchNormState*> slim_bn_states(SplitStudent& s) {
  std::vector<BatchNormState*> out;
  for (auto* section : {&s.encoder, &s.compressor, &s.decompressor}) {
    for (ConvBlock& b : *section) {
      if (b.bn) out.push_back(&*b.bn);
    }
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || n_sandwich < 1 || halving_period < 1) {
    throw ArgumentError("train config: epochs, batch size, N and halving period must be >= 1");
  }
  if (halving_period > epochs) throw ArgumentError("train config: halving period exceeds epochs");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ArgumentError("train config: lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("train config: momentum must be in [0, 1)");
  if (widths.empty()) throw ArgumentError("train config: width set is empty");
  if (n_sandwich > widths.size() || (widths.size() > 1 && n_sandwich < 2)) {
    throw ArgumentError("train config: N=" + std::to_string(n_sandwich) +
                        " incompatible with a width set of size " +
                        std::to_string(widths.size()));
  }
  if (tap_weights.size() != 2) throw ArgumentError("train config: need exactly two tap weights");
  for (double w : tap_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("train config: tap weights must be >= 0");
  }
}

double TrainConfig::lr_at(std::size_t epoch) const {
  return lr0 * std::ldexp(1.0, -static_cast<int>(epoch / halving_period));
}

TrainConfig default_train_config(SplitMode mode) {
  TrainConfig c;
  c.halving_period = mode == SplitMode::full_config ? 2 : 3;
  return c;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, kShuffleStream, epoch));
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Teacher

TeacherReport train_teacher(TeacherNet& teacher, const Dataset& data,
                            const TrainConfig& config, std::ostream* log) {
  config.validate();
  const std::size_t n = data.train.size();
  if (n == 0) throw ArgumentError("train_teacher: empty training split");
  for (Parameter* p : teacher.parameters()) p->trainable = true;
  auto params = teacher.parameters();
  zero_grads(params);

  TeacherReport report;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const SgdConfig sgd{config.lr_at(epoch), config.momentum};
    const auto order = epoch_order(n, config.seed, epoch);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < n; first += config.batch_size, ++step, ++batches) {
      const std::size_t count = std::min(config.batch_size, n - first);
      const DatasetSplit batch = gather(
          data.train, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(first),
                                               order.begin() + static_cast<std::ptrdiff_t>(first + count)));
      double loss = 0.0;
      try {
        zero_grads(params);
        loss = config.precision == Precision::train64
                   ? teacher_step<double>(teacher, batch, params, sgd)
                   : teacher_step<float>(teacher, batch, params, sgd);
      } catch (const NumericError& e) {
        throw DivergenceError("teacher training diverged at step " + std::to_string(step) +
                                  ": " + e.what(),
                              step, batches, std::nullopt);
      }
      if (!std::isfinite(loss)) {
        throw DivergenceError("teacher loss is non-finite at step " + std::to_string(step),
                              step, batches, std::nullopt);
      }
      if (step == 0) report.initial_loss = loss;
      sum += loss;
    }
    report.epoch_mean_loss.push_back(sum / static_cast<double>(batches));
    write_json_line(log, {{"phase", "teacher"},
                          {"epoch", epoch},
                          {"lr", sgd.lr},
                          {"batches", batches},
                          {"mean_loss", report.epoch_mean_loss.back()},
                          {"wall_time_s", seconds_since(t0)}});
  }
  zero_grads(params);
  teacher.freeze();
  report.val_toy_ap = teacher_toy_ap(teacher, data.val);
  return report;
}

double teacher_loss(TeacherNet& teacher, const DatasetSplit& split) {
  double sum = 0.0;
  for (std::size_t first = 0; first < split.size(); first += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, split.size() - first);
    const DatasetSplit b = batch_of(split, first, count);
    Graph<double> g(GraphOpts<double>{.record = false, .checked = true});
    auto out = teacher.forward(g, g.input(b.images.cast<double>()), false);
    Var loss = g.bce_with_logits(out.logits, g.input(b.labels.cast<double>()));
    sum += g.value(loss)[0] * static_cast<double>(count);
  }
  return sum / static_cast<double>(split.size());
}

double teacher_toy_ap(TeacherNet& teacher, const DatasetSplit& split) {
  std::vector<float> scores;
  scores.reserve(split.labels.size());
  for (std::size_t first = 0; first < split.size(); first += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, split.size() - first);
    Graph<float> g(GraphOpts<float>{.record = false, .checked = true});
    auto out = teacher.forward(g, g.input(batch_slice(split.images, first, count)), false);
    const Tensor32& p = g.value(out.probs);
    scores.insert(scores.end(), p.storage().begin(), p.storage().end());
  }
  return toy_ap(scores, split.labels.span());
}

// ---------------------------------------------------------------------------
// Distillation

template <class T>
Var distill_loss(Graph<T>& g, const std::vector<Var>& student,
                 const std::vector<Var>& teacher, const std::vector<double>& weights) {
  if (student.size() != teacher.size()) {
    throw ShapeError("distill_loss", "tap count", teacher.size(), student.size());
  }
  if (student.empty()) throw ArgumentError("distill_loss: no taps");
  if (!weights.empty() && weights.size() != student.size()) {
    throw ShapeError("distill_loss", "tap weight count", student.size(), weights.size());
  }
  Var total;
  for (std::size_t i = 0; i < student.size(); ++i) {
    const Shape a = g.value(student[i]).shape();
    const Shape b = g.value(teacher[i]).shape();
    const std::string where = "distill_loss tap " + std::to_string(i);
    if (a.n != b.n) throw ShapeError(where, "batch", b.n, a.n);
    if (a.c != b.c) throw ShapeError(where, "channels", b.c, a.c);
    if (a.h != b.h) throw ShapeError(where, "height", b.h, a.h);
    if (a.w != b.w) throw ShapeError(where, "width", b.w, a.w);
    Var term = g.mse(student[i], teacher[i]);
    if (!weights.empty() && weights[i] != 1.0) term = g.scale(term, weights[i]);
    total = total.valid() ? g.add(total, term) : term;
  }
  return total;
}

template Var distill_loss<float>(Graph<float>&, const std::vector<Var>&,
                                 const std::vector<Var>&, const std::vector<double>&);
template Var distill_loss<double>(Graph<double>&, const std::vector<Var>&,
                                  const std::vector<Var>&, const std::vector<double>&);

double distill_loss(const std::vector<Tensor64>& student, const std::vector<Tensor64>& teacher) {
  Graph<double> g(GraphOpts<double>{.record = false, .checked = true});
  std::vector<Var> s;
  std::vector<Var> t;
  for (const auto& x : student) s.push_back(g.input(x));
  for (const auto& x : teacher) t.push_back(g.input(x));
  return g.value(distill_loss(g, s, t))[0];
}

TeacherFeatures teacher_features(TeacherNet& teacher, const Tensor32& images) {
  auto [b3, b4] = teacher_taps<float>(teacher, images);
  return {b3.cast<double>(), b4.cast<double>()};
}

std::vector<double> accumulate_distill_grads(SplitStudent& student,
                                             const TeacherFeatures& targets,
                                             const Tensor32& images,
                                             const std::vector<WidthMultiplier>& widths,
                                             const TrainConfig& config) {
  return config.precision == Precision::train64
             ? accumulate_impl<double>(student, targets, images, widths, config.tap_weights)
             : accumulate_impl<float>(student, targets, images, widths, config.tap_weights);
}

std::optional<double> EpochStats::loss_at(const WidthMultiplier& alpha) const {
  for (const auto& w : loss_per_width) {
    if (w.alpha == alpha && w.samples > 0) return w.mean_loss;
  }
  return std::nullopt;
}

EpochStats distill_epoch(SplitStudent& student, TeacherNet& teacher,
                         const DatasetSplit& train, const TrainConfig& config,
                         std::size_t epoch_index, std::ostream* log) {
  config.validate();
  const std::size_t n = train.size();
  if (n == 0) throw ArgumentError("distill_epoch: empty training split");
  for (Parameter* p : teacher.parameters()) {
    if (p->trainable) throw ArgumentError("distill_epoch: teacher must be frozen");
  }

  const auto t0 = Clock::now();
  EpochStats stats;
  stats.epoch = epoch_index;
  stats.lr = config.lr_at(epoch_index);
  const SgdConfig sgd{stats.lr, config.momentum};
  auto params = student.trainable_parameters();
  const auto order = epoch_order(n, config.seed, epoch_index);
  Rng sampler(mix_seed(config.seed, kSandwichStream, epoch_index));

  const auto& all = config.widths.widths();
  std::vector<double> sums(all.size(), 0.0);
  std::vector<std::size_t> counts(all.size(), 0);

  for (std::size_t first = 0, batch = 0; first < n; first += config.batch_size, ++batch) {
    const std::size_t count = std::min(config.batch_size, n - first);
    const DatasetSplit b = gather(
        train, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(first),
                                        order.begin() + static_cast<std::ptrdiff_t>(first + count)));
    const auto widths = config.widths.size() == 1
                            ? std::vector<WidthMultiplier>{config.widths.min()}
                            : sandwich_sample(config.widths, config.n_sandwich, sampler);
    stats.batch_widths.push_back(widths);

    const TeacherFeatures targets = teacher_features(teacher, b.images);
    zero_grads(params);
    std::vector<double> losses;
    try {
      losses = accumulate_distill_grads(student, targets, b.images, widths, config);
    } catch (const NumericError& e) {
      const WidthMultiplier at = widths[std::min(losses.size(), widths.size() - 1)];
      throw DivergenceError("distillation diverged at epoch " + std::to_string(epoch_index) +
                                ", batch " + std::to_string(batch) + ", alpha " + at.str() +
                                ": " + e.what(),
                            epoch_index, batch, at);
    }
    try {
      sgd_update(params, sgd);
    } catch (const NumericError& e) {
      throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch_index) +
                                ", batch " + std::to_string(batch) + ": " + e.what(),
                            epoch_index, batch, std::nullopt);
    }
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const auto it = std::find(all.begin(), all.end(), widths[i]);
      const auto k = static_cast<std::size_t>(it - all.begin());
      sums[k] += losses[i];
      ++counts[k];
    }
    ++stats.batches;
  }
  zero_grads(params);

  nlohmann::json per_width = nlohmann::json::object();
  for (std::size_t k = 0; k < all.size(); ++k) {
    WidthLoss wl{all[k], counts[k] ? sums[k] / static_cast<double>(counts[k]) : 0.0, counts[k]};
    stats.loss_per_width.push_back(wl);
    if (counts[k]) per_width[all[k].str()] = wl.mean_loss;
  }
  stats.wall_time_s = seconds_since(t0);
  write_json_line(log, {{"phase", "distill"},
                        {"epoch", epoch_index},
                        {"lr", stats.lr},
                        {"batches", stats.batches},
                        {"mean_loss", per_width},
                        {"wall_time_s", stats.wall_time_s}});
  return stats;
}

std::vector<EpochStats> distill(SplitStudent& student, TeacherNet& teacher,
                                const Dataset& data, const TrainConfig& config,
                                std::ostream* log) {
  config.validate();
  std::vector<EpochStats> out;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    out.push_back(distill_epoch(student, teacher, data.train, config, e, log));
  }
  if (config.post_bn_recalibrate) {
    post_bn_recalibrate(student, data.train, config.widths.max(), config.batch_size);
  }
  return out;
}

void post_bn_recalibrate(SplitStudent& student, const DatasetSplit& data,
                         const WidthMultiplier& alpha, std::size_t batch_size) {
  if (data.size() == 0) throw ArgumentError("post_bn_recalibrate: empty dataset");
  if (batch_size < 1) throw ArgumentError("post_bn_recalibrate: batch size must be >= 1");
  student.check_width(alpha);
  auto states = slim_bn_states(student);
  std::vector<double> saved;
  for (BatchNormState* bn : states) saved.push_back(bn->momentum);

  std::size_t k = 0;
  try {
    for (std::size_t first = 0; first < data.size(); first += batch_size, ++k) {
      // Momentum 1/(k+1) turns the running update into a plain mean.
      for (BatchNormState* bn : states) bn->momentum = 1.0 / static_cast<double>(k + 1);
      const std::size_t count = std::min(batch_size, data.size() - first);
      Graph<float> g(GraphOpts<float>{.record = false, .checked = true});
      Var z = student.encode(g, g.input(batch_slice(data.images, first, count)), alpha, true);
      for (ConvBlock& b : student.decompressor) z = block_forward(g, b, z, alpha, true);
    }
  } catch (...) {
    for (std::size_t i = 0; i < states.size(); ++i) states[i]->momentum = saved[i];
    throw;
  }
  for (std::size_t i = 0; i < states.size(); ++i) states[i]->momentum = saved[i];
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(SplitStudent& student, TeacherNet* teacher, const DatasetSplit& data,
                    const WidthMultiplier& alpha, std::optional<int> quant_bits,
                    std::size_t batch_size) {
  if (data.size() == 0) throw ArgumentError("evaluate: empty dataset");
  if (batch_size < 1) throw ArgumentError("evaluate: batch size must be >= 1");
  student.check_width(alpha);

  EvalResult r;
  r.alpha = alpha;
  r.bits = quant_bits;
  r.extrapolated = student.is_extrapolated(alpha);

  std::vector<float> scores;
  scores.reserve(data.labels.size());
  // Per tap: squared error sum, teacher sum, teacher square sum, element count.
  double se[2] = {0, 0}, ts[2] = {0, 0}, tss[2] = {0, 0};
  std::size_t elems[2] = {0, 0};

  for (std::size_t first = 0; first < data.size(); first += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - first);
    const Tensor32 images = batch_slice(data.images, first, count);

    Tensor32 z;
    {
      Graph<float> g(GraphOpts<float>{.record = false, .checked = true});
      z = g.value(student.encode(g, g.input(images), alpha, false));
    }
    if (quant_bits) {
      for (std::size_t i = 0; i < count; ++i) {
        const Tensor32 one = batch_slice(z, i, 1);
        const Tensor32 back = dequantize(quantize(one, *quant_bits));
        std::copy(back.storage().begin(), back.storage().end(),
                  z.data() + i * one.size());
      }
    }
    Graph<float> g(GraphOpts<float>{.record = false, .checked = true});
    auto taps = student.decode(g, g.input(std::move(z)), alpha, false);
    const Tensor32& p = g.value(taps.probs);
    scores.insert(scores.end(), p.storage().begin(), p.storage().end());

    if (teacher) {
      auto [t3, t4] = teacher_taps<float>(*teacher, images);
      const Tensor32* s[2] = {&g.value(taps.decompressed), &g.value(taps.decoder_block)};
      const Tensor32* t[2] = {&t3, &t4};
      for (int k = 0; k < 2; ++k) {
        if (s[k]->shape() != t[k]->shape()) {
          throw ShapeError("evaluate tap " + std::to_string(k), "elements", t[k]->size(), s[k]->size());
        }
        for (std::size_t i = 0; i < s[k]->size(); ++i) {
          const double tv = (*t[k])[i];
          const double d = static_cast<double>((*s[k])[i]) - tv;
          se[k] += d * d;
          ts[k] += tv;
          tss[k] += tv * tv;
        }
        elems[k] += s[k]->size();
      }
    }
  }

  r.toy_ap = toy_ap(scores, data.labels.span());
  if (teacher) {
    r.feature_mse = 0.0;
    r.teacher_variance = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double n = static_cast<double>(elems[k]);
      const double mean = ts[k] / n;
      r.feature_mse += se[k] / n;
      r.teacher_variance += std::max(0.0, tss[k] / n - mean * mean);
    }
  } else {
    r.feature_mse = std::numeric_limits<double>::quiet_NaN();
    r.teacher_variance = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace slimsplit
