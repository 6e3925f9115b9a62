// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/autodiff.hpp"

#include <cmath>
#include <memory>

#include "conv_kernels.hpp"
#include "slimsplit/mac.hpp"

namespace slimsplit {

BatchNormState::BatchNormState(const std::string& name, std::size_t channels)
    : gamma(name + ".gamma", vector_shape(channels)),
      beta(name + ".beta", vector_shape(channels)),
      running_mean(vector_shape(channels), 0.0),
      running_var(vector_shape(channels), 1.0) {
  gamma.value.fill(1.0);
}

namespace {

void check_same_shape(std::string_view where, const Shape& a, const Shape& b) {
  const std::string w(where);
  if (a.n != b.n) throw ShapeError(w, "batch", a.n, b.n);
  if (a.c != b.c) throw ShapeError(w, "channels", a.c, b.c);
  if (a.h != b.h) throw ShapeError(w, "height", a.h, b.h);
  if (a.w != b.w) throw ShapeError(w, "width", a.w, b.w);
}

template <class T>
T sigmoid_scalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

template <class T>
Var Graph<T>::push(BasicTensor<T> value, bool needs_grad, std::string_view op) {
  if (opts_.checked && !value.all_finite()) {
    throw NumericError(std::string(op) + " produced non-finite values");
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad && opts_.record;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <class T>
BasicTensor<T>& Graph<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty() && node.value.size() != 0) {
    node.grad = BasicTensor<T>(node.value.shape());
  }
  return node.grad;
}

template <class T>
Var Graph<T>::input(BasicTensor<T> value, bool requires_grad) {
  return push(std::move(value), requires_grad, "input");
}

template <class T>
Var Graph<T>::conv2d(Var x, Parameter& weight, Parameter& bias,
                     ConvGeometry geom, std::string_view label) {
  const Shape& ws = weight.value.shape();
  return conv2d(x, weight, bias, ChannelSlice{ws.c, ws.n}, geom, label);
}

template <class T>
Var Graph<T>::conv2d(Var x, Parameter& weight, Parameter& bias,
                     ChannelSlice slice, ConvGeometry geom,
                     std::string_view label) {
  const std::string where = "conv2d[" + std::string(label) + "]";
  const Shape xs = value(x).shape();
  const Shape ws = weight.value.shape();
  const std::size_t k = ws.h;
  if (ws.h != ws.w) throw ShapeError(where, "kernel width", ws.h, ws.w);
  if (k < 1) throw ArgumentError(where + ": kernel size must be >= 1");
  if (geom.stride < 1) throw ArgumentError(where + ": stride must be >= 1");
  if (slice.c_in < 1 || slice.c_in > ws.c) throw ShapeError(where, "active input channels", ws.c, slice.c_in);
  if (slice.c_out < 1 || slice.c_out > ws.n) throw ShapeError(where, "active output channels", ws.n, slice.c_out);
  if (xs.c != slice.c_in) throw ShapeError(where, "input channels", slice.c_in, xs.c);
  if (bias.value.size() != ws.n) throw ShapeError(where, "bias length", ws.n, bias.value.size());
  if (xs.h + 2 * geom.pad < k) throw ShapeError(where, "padded height", k, xs.h + 2 * geom.pad);
  if (xs.w + 2 * geom.pad < k) throw ShapeError(where, "padded width", k, xs.w + 2 * geom.pad);

  detail::ConvDims d;
  d.n = xs.n;
  d.c_in = slice.c_in;
  d.h = xs.h;
  d.w = xs.w;
  d.c_out = slice.c_out;
  d.k = k;
  d.stride = geom.stride;
  d.pad = geom.pad;
  d.oh = conv_out_extent(xs.h, k, geom.stride, geom.pad);
  d.ow = conv_out_extent(xs.w, k, geom.stride, geom.pad);
  const std::size_t rows = d.rows();
  const std::size_t cols = d.cols();
  const std::size_t kk = k * k;
  const std::size_t q_per = d.oh * d.ow;

  // Active prefix in graph precision, as wt[r][co] (reduction-major).
  std::vector<T> wt(rows * d.c_out);
  for (std::size_t co = 0; co < d.c_out; ++co) {
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      for (std::size_t t = 0; t < kk; ++t) {
        wt[(t * d.c_in + ci) * d.c_out + co] =
            static_cast<T>(weight.value[(co * ws.c + ci) * kk + t]);
      }
    }
  }

  std::vector<T> col(rows * cols);
  detail::im2col(value(x).data(), d, col.data());
  std::vector<T> acc(d.c_out * cols);
  for (std::size_t co = 0; co < d.c_out; ++co) {
    std::fill_n(acc.data() + co * cols, cols, static_cast<T>(bias.value[co]));
  }
  detail::gemm_tn(d.c_out, rows, cols, wt.data(), col.data(), acc.data());

  BasicTensor<T> out({xs.n, d.c_out, d.oh, d.ow});
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t co = 0; co < d.c_out; ++co) {
      std::copy_n(acc.data() + co * cols + n * q_per, q_per,
                  out.data() + (n * d.c_out + co) * q_per);
    }
  }
  if (MacTally* tally = current_mac_tally()) tally->add(label, d.macs());

  const bool params_learn = opts_.record && (weight.trainable || bias.trainable);
  const bool x_needs = needs(x);
  Var y = push(std::move(out), params_learn || x_needs, where);
  if (!nodes_[y.id].needs_grad) return y;

  nodes_[y.id].back = [x, y, &weight, &bias, d, ws, x_needs, wt = std::move(wt),
                       col = std::move(col)](Graph& g) {
    const BasicTensor<T>& gout = g.nodes_[y.id].grad;
    const std::size_t rows = d.rows();
    const std::size_t cols = d.cols();
    const std::size_t kk = d.k * d.k;
    const std::size_t q_per = d.oh * d.ow;
    // Output gradient as [co][q].
    std::vector<T> gq(d.c_out * cols);
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t co = 0; co < d.c_out; ++co) {
        std::copy_n(gout.data() + (n * d.c_out + co) * q_per, q_per,
                    gq.data() + co * cols + n * q_per);
      }
    }
    if (weight.trainable) {
      for (std::size_t co = 0; co < d.c_out; ++co) {
        const T* grow = gq.data() + co * cols;
        for (std::size_t ci = 0; ci < d.c_in; ++ci) {
          for (std::size_t t = 0; t < kk; ++t) {
            const T* crow = col.data() + (t * d.c_in + ci) * cols;
            weight.grad[(co * ws.c + ci) * kk + t] +=
                static_cast<double>(detail::dot(grow, crow, cols));
          }
        }
      }
    }
    if (bias.trainable) {
      for (std::size_t co = 0; co < d.c_out; ++co) {
        T sum = 0;
        const T* grow = gq.data() + co * cols;
        for (std::size_t q = 0; q < cols; ++q) sum += grow[q];
        bias.grad[co] += static_cast<double>(sum);
      }
    }
    if (x_needs) {
      // gcol[r][q] = sum_co w[co][r] * g[co][q]
      std::vector<T> w_co(d.c_out * rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t co = 0; co < d.c_out; ++co) w_co[co * rows + r] = wt[r * d.c_out + co];
      }
      std::vector<T> gcol(rows * cols, T(0));
      detail::gemm_tn(rows, d.c_out, cols, w_co.data(), gq.data(), gcol.data());
      detail::col2im_add(gcol.data(), d, g.grad_buffer(x.id).data());
    }
  };
  return y;
}

template <class T>
Var Graph<T>::batch_norm(Var x, BatchNormState& bn, bool training) {
  const Shape xs = value(x).shape();
  const std::size_t channels = xs.c;
  if (channels > bn.channels()) {
    throw ShapeError("batch_norm", "channels", bn.channels(), channels);
  }
  if (!(bn.eps > 0.0)) throw ArgumentError("batch_norm: eps must be > 0");
  const std::size_t plane = xs.plane();
  const std::size_t count = xs.n * plane;
  const BasicTensor<T>& xv = value(x);

  std::vector<T> mean(channels), inv_std(channels);
  if (training) {
    for (std::size_t c = 0; c < channels; ++c) {
      T sum = 0;
      for (std::size_t n = 0; n < xs.n; ++n) {
        const T* p = xv.data() + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      const T mu = sum / static_cast<T>(count);
      T sq = 0;
      for (std::size_t n = 0; n < xs.n; ++n) {
        const T* p = xv.data() + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const T var = sq / static_cast<T>(count);
      mean[c] = mu;
      inv_std[c] = T(1) / std::sqrt(var + static_cast<T>(bn.eps));
      bn.running_mean[c] = (1.0 - bn.momentum) * bn.running_mean[c] +
                           bn.momentum * static_cast<double>(mu);
      bn.running_var[c] = (1.0 - bn.momentum) * bn.running_var[c] +
                          bn.momentum * static_cast<double>(var);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = static_cast<T>(bn.running_mean[c]);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(bn.running_var[c] + bn.eps));
    }
  }

  BasicTensor<T> xhat(xs);
  BasicTensor<T> out(xs);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * plane;
      const T gamma = static_cast<T>(bn.gamma.value[c]);
      const T beta = static_cast<T>(bn.beta.value[c]);
      for (std::size_t i = 0; i < plane; ++i) {
        const T h = (xv[base + i] - mean[c]) * inv_std[c];
        xhat[base + i] = h;
        out[base + i] = gamma * h + beta;
      }
    }
  }

  const bool params_learn =
      opts_.record && (bn.gamma.trainable || bn.beta.trainable);
  const bool x_needs = needs(x);
  Var y = push(std::move(out), params_learn || x_needs, "batch_norm");
  if (!nodes_[y.id].needs_grad) return y;

  nodes_[y.id].back = [x, y, &bn, training, xs, x_needs,
                       xhat = std::move(xhat),
                       inv_std = std::move(inv_std)](Graph& g) {
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    const std::size_t channels = xs.c;
    const std::size_t plane = xs.plane();
    const T count = static_cast<T>(xs.n * plane);
    BasicTensor<T>* gx = x_needs ? &g.grad_buffer(x.id) : nullptr;
    for (std::size_t c = 0; c < channels; ++c) {
      T sum_dy = 0;
      T sum_dy_xhat = 0;
      for (std::size_t n = 0; n < xs.n; ++n) {
        const std::size_t base = (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += gy[base + i];
          sum_dy_xhat += gy[base + i] * xhat[base + i];
        }
      }
      if (bn.gamma.trainable) bn.gamma.grad[c] += static_cast<double>(sum_dy_xhat);
      if (bn.beta.trainable) bn.beta.grad[c] += static_cast<double>(sum_dy);
      if (!gx) continue;
      const T gamma = static_cast<T>(bn.gamma.value[c]);
      for (std::size_t n = 0; n < xs.n; ++n) {
        const std::size_t base = (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          if (training) {
            (*gx)[base + i] += gamma * inv_std[c] / count *
                               (count * gy[base + i] - sum_dy -
                                xhat[base + i] * sum_dy_xhat);
          } else {
            (*gx)[base + i] += gamma * inv_std[c] * gy[base + i];
          }
        }
      }
    }
  };
  return y;
}

template <class T>
Var Graph<T>::relu(Var x) {
  const BasicTensor<T>& xv = value(x);
  BasicTensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  Var y = push(std::move(out), needs(x), "relu");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [x, y](Graph& g) {
    const BasicTensor<T>& xv = g.nodes_[x.id].value;
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    BasicTensor<T>& gx = g.grad_buffer(x.id);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > T(0)) gx[i] += gy[i];
    }
  };
  return y;
}

template <class T>
Var Graph<T>::sigmoid(Var x) {
  const BasicTensor<T>& xv = value(x);
  BasicTensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = sigmoid_scalar(xv[i]);
  Var y = push(std::move(out), needs(x), "sigmoid");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [x, y](Graph& g) {
    const BasicTensor<T>& yv = g.nodes_[y.id].value;
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    BasicTensor<T>& gx = g.grad_buffer(x.id);
    for (std::size_t i = 0; i < yv.size(); ++i) {
      gx[i] += gy[i] * yv[i] * (T(1) - yv[i]);
    }
  };
  return y;
}

template <class T>
Var Graph<T>::activate(Var x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return relu(x);
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::none:
      break;
  }
  return x;
}

template <class T>
Var Graph<T>::upsample2x(Var x) {
  const Shape xs = value(x).shape();
  const BasicTensor<T>& xv = value(x);
  BasicTensor<T> out({xs.n, xs.c, xs.h * 2, xs.w * 2});
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      for (std::size_t y = 0; y < xs.h * 2; ++y) {
        for (std::size_t xx = 0; xx < xs.w * 2; ++xx) {
          out.at(n, c, y, xx) = xv.at(n, c, y / 2, xx / 2);
        }
      }
    }
  }
  Var y = push(std::move(out), needs(x), "upsample2x");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [x, y, xs](Graph& g) {
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    BasicTensor<T>& gx = g.grad_buffer(x.id);
    for (std::size_t n = 0; n < xs.n; ++n) {
      for (std::size_t c = 0; c < xs.c; ++c) {
        for (std::size_t yy = 0; yy < xs.h * 2; ++yy) {
          for (std::size_t xx = 0; xx < xs.w * 2; ++xx) {
            gx.at(n, c, yy / 2, xx / 2) += gy.at(n, c, yy, xx);
          }
        }
      }
    }
  };
  return y;
}

template <class T>
Var Graph<T>::add(Var a, Var b) {
  check_same_shape("add", value(a).shape(), value(b).shape());
  BasicTensor<T> out = value(a);
  const BasicTensor<T>& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  Var y = push(std::move(out), needs(a) || needs(b), "add");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [a, b, y](Graph& g) {
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    for (Var v : {a, b}) {
      if (!g.needs(v)) continue;
      BasicTensor<T>& gv = g.grad_buffer(v.id);
      for (std::size_t i = 0; i < gy.size(); ++i) gv[i] += gy[i];
    }
  };
  return y;
}

template <class T>
Var Graph<T>::scale(Var a, double factor) {
  BasicTensor<T> out = value(a);
  const T f = static_cast<T>(factor);
  for (auto& v : out.storage()) v *= f;
  Var y = push(std::move(out), needs(a), "scale");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [a, y, f](Graph& g) {
    const BasicTensor<T>& gy = g.nodes_[y.id].grad;
    BasicTensor<T>& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += f * gy[i];
  };
  return y;
}

template <class T>
Var Graph<T>::mse(Var a, Var b) {
  check_same_shape("mse", value(a).shape(), value(b).shape());
  const BasicTensor<T>& av = value(a);
  const BasicTensor<T>& bv = value(b);
  T sum = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const T d = av[i] - bv[i];
    sum += d * d;
  }
  const T count = static_cast<T>(av.size());
  Var y = push(BasicTensor<T>({1, 1, 1, 1}, sum / count), needs(a) || needs(b), "mse");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [a, b, y, count](Graph& g) {
    const T gy = g.nodes_[y.id].grad[0];
    const BasicTensor<T>& av = g.nodes_[a.id].value;
    const BasicTensor<T>& bv = g.nodes_[b.id].value;
    const T f = T(2) * gy / count;
    if (g.needs(a)) {
      BasicTensor<T>& ga = g.grad_buffer(a.id);
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += f * (av[i] - bv[i]);
    }
    if (g.needs(b)) {
      BasicTensor<T>& gb = g.grad_buffer(b.id);
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] -= f * (av[i] - bv[i]);
    }
  };
  return y;
}

template <class T>
Var Graph<T>::bce_with_logits(Var logits, Var targets) {
  check_same_shape("bce_with_logits", value(logits).shape(), value(targets).shape());
  const BasicTensor<T>& z = value(logits);
  const BasicTensor<T>& t = value(targets);
  T sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    sum += std::max(z[i], T(0)) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  const T count = static_cast<T>(z.size());
  Var y = push(BasicTensor<T>({1, 1, 1, 1}, sum / count), needs(logits),
               "bce_with_logits");
  if (!nodes_[y.id].needs_grad) return y;
  nodes_[y.id].back = [logits, targets, y, count](Graph& g) {
    const T gy = g.nodes_[y.id].grad[0];
    const BasicTensor<T>& z = g.nodes_[logits.id].value;
    const BasicTensor<T>& t = g.nodes_[targets.id].value;
    BasicTensor<T>& gz = g.grad_buffer(logits.id);
    for (std::size_t i = 0; i < z.size(); ++i) {
      gz[i] += gy * (sigmoid_scalar(z[i]) - t[i]) / count;
    }
  };
  return y;
}

template <class T>
void Graph<T>::backward(Var loss) {
  if (!opts_.record) throw GraphStateError("backward on a graph built without a tape");
  if (consumed_) throw GraphStateError("backward called twice on the same forward graph");
  if (!loss.valid() || loss.id >= nodes_.size()) throw GraphStateError("backward: unknown loss node");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward", "loss element count", 1, nodes_[loss.id].value.size());
  }
  consumed_ = true;
  if (!nodes_[loss.id].needs_grad) return;
  grad_buffer(loss.id)[0] = T(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || !node.back || node.grad.empty()) continue;
    node.back(*this);
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace slimsplit
