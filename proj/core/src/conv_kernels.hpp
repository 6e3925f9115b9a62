// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

// Direct-convolution kernels shared by the autodiff ops.
//
// A batch is unrolled into a column matrix col[r][q] with reduction index
// r = (ky * k + kx) * c_in + ci and output position q = (n * oh + oy) * ow + ox.
// Padding is materialized as zeros, so every multiply-accumulate of the
// textbook definition is executed. For each output element the accumulation
// order is: bias, then r ascending, i.e. kernel row, kernel column, input
// channel.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace slimsplit::detail {

struct ConvDims {
  std::size_t n = 0;
  std::size_t c_in = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c_out = 0;
  std::size_t k = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t oh = 0;
  std::size_t ow = 0;

  std::size_t rows() const { return k * k * c_in; }
  std::size_t cols() const { return n * oh * ow; }
  std::uint64_t macs() const {
    return static_cast<std::uint64_t>(rows()) * cols() * c_out;
  }
};

// x is NCHW with c_in channels; col is rows() x cols().
template <class T>
void im2col(const T* x, const ConvDims& d, T* col) {
  const std::size_t q_per = d.oh * d.ow;
  const std::size_t ld = d.cols();
  for (std::size_t ky = 0; ky < d.k; ++ky) {
    for (std::size_t kx = 0; kx < d.k; ++kx) {
      for (std::size_t ci = 0; ci < d.c_in; ++ci) {
        T* row = col + ((ky * d.k + kx) * d.c_in + ci) * ld;
        for (std::size_t n = 0; n < d.n; ++n) {
          const T* src = x + (n * d.c_in + ci) * d.h * d.w;
          T* dst = row + n * q_per;
          for (std::size_t oy = 0; oy < d.oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            T* drow = dst + oy * d.ow;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
              std::fill(drow, drow + d.ow, T(0));
              continue;
            }
            const T* srow = src + static_cast<std::size_t>(iy) * d.w;
            for (std::size_t ox = 0; ox < d.ow; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              drow[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w))
                             ? T(0)
                             : srow[static_cast<std::size_t>(ix)];
            }
          }
        }
      }
    }
  }
}

// Adds a column-matrix gradient back into NCHW gx.
template <class T>
void col2im_add(const T* col, const ConvDims& d, T* gx) {
  const std::size_t q_per = d.oh * d.ow;
  const std::size_t ld = d.cols();
  for (std::size_t ky = 0; ky < d.k; ++ky) {
    for (std::size_t kx = 0; kx < d.k; ++kx) {
      for (std::size_t ci = 0; ci < d.c_in; ++ci) {
        const T* row = col + ((ky * d.k + kx) * d.c_in + ci) * ld;
        for (std::size_t n = 0; n < d.n; ++n) {
          T* dst = gx + (n * d.c_in + ci) * d.h * d.w;
          const T* src = row + n * q_per;
          for (std::size_t oy = 0; oy < d.oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                      static_cast<std::ptrdiff_t>(d.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
            T* drow = dst + static_cast<std::size_t>(iy) * d.w;
            const T* srow = src + oy * d.ow;
            for (std::size_t ox = 0; ox < d.ow; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                        static_cast<std::ptrdiff_t>(d.pad);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(d.w)) {
                drow[static_cast<std::size_t>(ix)] += srow[ox];
              }
            }
          }
        }
      }
    }
  }
}

// C[i][q] += sum_j A[j][i] * B[j][q] for rows i0..i0+IB, j ascending.
template <class T, std::size_t IB>
void gemm_rows(std::size_t ni, std::size_t nj, std::size_t nq, const T* a,
               const T* b, T* c, std::size_t i0) {
  constexpr std::size_t QB = 128 / sizeof(T);  // two 512-bit lanes
  std::size_t q = 0;
  for (; q + QB <= nq; q += QB) {
    T acc[IB][QB];
    for (std::size_t i = 0; i < IB; ++i) {
      for (std::size_t l = 0; l < QB; ++l) acc[i][l] = c[(i0 + i) * nq + q + l];
    }
    for (std::size_t j = 0; j < nj; ++j) {
      const T* brow = b + j * nq + q;
      const T* arow = a + j * ni + i0;
      for (std::size_t i = 0; i < IB; ++i) {
        const T av = arow[i];
        for (std::size_t l = 0; l < QB; ++l) acc[i][l] += av * brow[l];
      }
    }
    for (std::size_t i = 0; i < IB; ++i) {
      for (std::size_t l = 0; l < QB; ++l) c[(i0 + i) * nq + q + l] = acc[i][l];
    }
  }
  for (; q < nq; ++q) {
    for (std::size_t i = 0; i < IB; ++i) {
      T acc = c[(i0 + i) * nq + q];
      for (std::size_t j = 0; j < nj; ++j) acc += a[j * ni + i0 + i] * b[j * nq + q];
      c[(i0 + i) * nq + q] = acc;
    }
  }
}

// C (ni x nq) += A^T B with A (nj x ni) and B (nj x nq), all row-major.
template <class T>
void gemm_tn(std::size_t ni, std::size_t nj, std::size_t nq, const T* a, const T* b,
             T* c) {
  std::size_t i = 0;
  for (; i + 4 <= ni; i += 4) gemm_rows<T, 4>(ni, nj, nq, a, b, c, i);
  for (; i < ni; ++i) gemm_rows<T, 1>(ni, nj, nq, a, b, c, i);
}

// out[i] = sum_q x[q] * y[q], lane-split so the loop vectorizes.
template <class T>
T dot(const T* x, const T* y, std::size_t len) {
  constexpr std::size_t L = 64 / sizeof(T);
  T lanes[L] = {};
  std::size_t q = 0;
  for (; q + L <= len; q += L) {
    for (std::size_t l = 0; l < L; ++l) lanes[l] += x[q + l] * y[q + l];
  }
  T s = 0;
  for (std::size_t l = 0; l < L; ++l) s += lanes[l];
  for (; q < len; ++q) s += x[q] * y[q];
  return s;
}

}  // namespace slimsplit::detail
