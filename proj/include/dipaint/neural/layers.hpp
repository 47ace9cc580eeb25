#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dipaint/image.hpp"
#include "dipaint/neural/tensor.hpp"

namespace dipaint::nn {

namespace detail {

// Copies each channel of `in` into an (H+2) x (W+2) buffer with one pixel
// of reflection on every side.
inline std::vector<double> reflect_pad(const Tensor& in) {
  const int C = in.channels();
  const int H = in.height();
  const int W = in.width();
  const int PW = W + 2;
  const std::size_t pplane = static_cast<std::size_t>(H + 2) * PW;
  std::vector<double> out(C * pplane);
  for (int c = 0; c < C; ++c) {
    const double* src = in.values.data() + c * in.plane();
    double* dst = out.data() + c * pplane;
    for (int r = -1; r <= H; ++r) {
      const double* row = src + static_cast<std::size_t>(reflect_index(r, H)) * W;
      double* drow = dst + static_cast<std::size_t>(r + 1) * PW;
      drow[0] = row[1];
      std::copy(row, row + W, drow + 1);
      drow[W + 1] = row[W - 2];
    }
  }
  return out;
}

inline void check_conv(const Tensor& in, const Tensor& kernel,
                       const Tensor& bias, int stride) {
  if (in.shape.size() != 3 || kernel.shape.size() != 4 ||
      kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw InvalidArgument("conv2d expects a CxHxW input and an out x in x 3 x 3 "
                          "kernel");
  }
  if (kernel.dim(1) != in.channels()) {
    throw InvalidArgument("conv2d channel mismatch: kernel takes " +
                          std::to_string(kernel.dim(1)) + ", input has " +
                          std::to_string(in.channels()));
  }
  if (bias.numel() != static_cast<std::size_t>(kernel.dim(0))) {
    throw InvalidArgument("conv2d bias length does not match output channels");
  }
  if (in.height() < 2 || in.width() < 2) {
    throw InvalidArgument("conv2d input must be at least 2x2, got " +
                          shape_string(in));
  }
  if (stride != 1 && stride != 2) throw InvalidArgument("stride must be 1 or 2");
}

}  // namespace detail

// 3x3 convolution (cross-correlation) with reflection padding of 1.
// Stride 2 yields ceil(H/2) x ceil(W/2).
inline Tensor conv2d(const Tensor& in, const Tensor& kernel, const Tensor& bias,
                     int stride) {
  detail::check_conv(in, kernel, bias, stride);
  const int O = kernel.dim(0);
  const int I = kernel.dim(1);
  const int OH = (in.height() + stride - 1) / stride;
  const int OW = (in.width() + stride - 1) / stride;
  const int PW = in.width() + 2;
  const std::size_t pplane = static_cast<std::size_t>(in.height() + 2) * PW;
  const auto padded = detail::reflect_pad(in);
  Tensor out({O, OH, OW});
  const std::size_t oplane = out.plane();
  for (int o = 0; o < O; ++o) {
    double* dst = out.values.data() + o * oplane;
    std::fill(dst, dst + oplane, bias.values[o]);
    for (int i = 0; i < I; ++i) {
      const double* src = padded.data() + i * pplane;
      const double* k = kernel.values.data() + (static_cast<std::size_t>(o) * I + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double w = k[ky * 3 + kx];
          for (int y = 0; y < OH; ++y) {
            const double* prow = src + static_cast<std::size_t>(stride * y + ky) * PW + kx;
            double* orow = dst + static_cast<std::size_t>(y) * OW;
            if (stride == 1) {
              for (int x = 0; x < OW; ++x) orow[x] += w * prow[x];
            } else {
              for (int x = 0; x < OW; ++x) orow[x] += w * prow[2 * x];
            }
          }
        }
      }
    }
  }
  return out;
}

// Adjoint of conv2d. Accumulates into kernel.grad, bias.grad and, when it
// is allocated, in.grad.
inline void conv2d_backward(Tensor& in, Tensor& kernel, Tensor& bias, int stride,
                            const Tensor& out) {
  const int O = kernel.dim(0);
  const int I = kernel.dim(1);
  const int H = in.height();
  const int W = in.width();
  const int OH = out.height();
  const int OW = out.width();
  const int PW = W + 2;
  const std::size_t pplane = static_cast<std::size_t>(H + 2) * PW;
  const std::size_t oplane = out.plane();
  const auto padded = detail::reflect_pad(in);
  const bool want_input = !in.grad.empty();
  std::vector<double> gpad(want_input ? I * pplane : 0, 0.0);

  for (int o = 0; o < O; ++o) {
    const double* go = out.grad.data() + o * oplane;
    double bsum = 0.0;
    for (std::size_t p = 0; p < oplane; ++p) bsum += go[p];
    bias.grad[o] += bsum;
    for (int i = 0; i < I; ++i) {
      const double* src = padded.data() + i * pplane;
      const std::size_t kbase = (static_cast<std::size_t>(o) * I + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double w = kernel.values[kbase + ky * 3 + kx];
          double acc = 0.0;
          for (int y = 0; y < OH; ++y) {
            const double* prow = src + static_cast<std::size_t>(stride * y + ky) * PW + kx;
            const double* grow = go + static_cast<std::size_t>(y) * OW;
            double* gprow = want_input
                                ? gpad.data() + i * pplane +
                                      static_cast<std::size_t>(stride * y + ky) * PW + kx
                                : nullptr;
            for (int x = 0; x < OW; ++x) {
              acc += grow[x] * prow[stride * x];
              if (want_input) gprow[stride * x] += w * grow[x];
            }
          }
          kernel.grad[kbase + ky * 3 + kx] += acc;
        }
      }
    }
  }
  if (!want_input) return;
  // Fold the padded gradient back through the reflection.
  for (int i = 0; i < I; ++i) {
    const double* gp = gpad.data() + i * pplane;
    double* gi = in.grad.data() + i * in.plane();
    for (int r = 0; r < H + 2; ++r) {
      const int sr = reflect_index(r - 1, H);
      for (int c = 0; c < PW; ++c) {
        const int sc = reflect_index(c - 1, W);
        gi[static_cast<std::size_t>(sr) * W + sc] += gp[static_cast<std::size_t>(r) * PW + c];
      }
    }
  }
}

inline Tensor leaky_relu(const Tensor& in, double slope) {
  Tensor out(in.shape);
  for (std::size_t k = 0; k < in.values.size(); ++k) {
    const double v = in.values[k];
    out.values[k] = v >= 0.0 ? v : slope * v;
  }
  return out;
}

inline void leaky_relu_backward(Tensor& in, const Tensor& out, double slope) {
  for (std::size_t k = 0; k < in.values.size(); ++k) {
    in.grad[k] += in.values[k] >= 0.0 ? out.grad[k] : slope * out.grad[k];
  }
}

inline Tensor sigmoid(const Tensor& in) {
  Tensor out(in.shape);
  for (std::size_t k = 0; k < in.values.size(); ++k) {
    out.values[k] = 1.0 / (1.0 + std::exp(-in.values[k]));
  }
  return out;
}

inline void sigmoid_backward(Tensor& in, const Tensor& out) {
  for (std::size_t k = 0; k < in.values.size(); ++k) {
    const double s = out.values[k];
    in.grad[k] += out.grad[k] * s * (1.0 - s);
  }
}

// Factor-2 bilinear upsampling, half-pixel aligned, edge-clamped.
inline Tensor upsample_bilinear2x(const Tensor& in) {
  Tensor out({in.channels(), 2 * in.height(), 2 * in.width()});
  resize_planes(in.values, in.channels(), in.height(), in.width(), out.values,
                out.height(), out.width());
  return out;
}

// Transpose of upsample_bilinear2x.
inline void upsample_bilinear2x_backward(Tensor& in, const Tensor& out) {
  const auto ty = bilinear_taps(in.height(), out.height());
  const auto tx = bilinear_taps(in.width(), out.width());
  const int W = in.width();
  for (int c = 0; c < in.channels(); ++c) {
    const double* go = out.grad.data() + c * out.plane();
    double* gi = in.grad.data() + c * in.plane();
    for (int r = 0; r < out.height(); ++r) {
      const double wy = ty[r].w_hi;
      double* row0 = gi + static_cast<std::size_t>(ty[r].lo) * W;
      double* row1 = gi + static_cast<std::size_t>(ty[r].hi) * W;
      for (int x = 0; x < out.width(); ++x) {
        const double g = go[static_cast<std::size_t>(r) * out.width() + x];
        const double wx = tx[x].w_hi;
        row0[tx[x].lo] += g * (1.0 - wy) * (1.0 - wx);
        row0[tx[x].hi] += g * (1.0 - wy) * wx;
        row1[tx[x].lo] += g * wy * (1.0 - wx);
        row1[tx[x].hi] += g * wy * wx;
      }
    }
  }
}

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidArgument("concat of tensors with different spatial sizes");
  }
  Tensor out({a.channels() + b.channels(), a.height(), a.width()});
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(),
            out.values.begin() + static_cast<long>(a.values.size()));
  return out;
}

inline void concat_channels_backward(Tensor& a, Tensor& b, const Tensor& out) {
  for (std::size_t k = 0; k < a.grad.size(); ++k) a.grad[k] += out.grad[k];
  const std::size_t off = a.grad.size();
  for (std::size_t k = 0; k < b.grad.size(); ++k) b.grad[k] += out.grad[off + k];
}

}  // namespace dipaint::nn
