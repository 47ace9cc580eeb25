#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipaint/error.hpp"

namespace dipaint {

// Planar raster of intensities. Channel c, row r, column x lives at
// data[(c * height + r) * width + x]. Values are expected in [0,1];
// operations that can leave that range clamp on the way out.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0) {
      throw InvalidArgument("image dimensions must be positive, got " +
                            std::to_string(c) + "x" + std::to_string(h) + "x" +
                            std::to_string(w));
    }
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
  }

  std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::size_t index(int c, int r, int x) const {
    return (static_cast<std::size_t>(c) * height + r) * width + x;
  }
  double& at(int c, int r, int x) { return data[index(c, r, x)]; }
  double at(int c, int r, int x) const { return data[index(c, r, x)]; }

  std::span<double> plane(int c) {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  bool operator==(const Image&) const = default;
};

// Binary per-pixel indicator: true marks a reliable pixel, false a pixel
// inside the damaged region.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int h, int w, bool reliable = true) : height(h), width(w) {
    if (h <= 0 || w <= 0) {
      throw InvalidArgument("mask dimensions must be positive");
    }
    bits.assign(static_cast<std::size_t>(h) * w, reliable ? 1 : 0);
  }

  std::size_t size() const { return bits.size(); }
  bool reliable(int r, int x) const {
    return bits[static_cast<std::size_t>(r) * width + x] != 0;
  }
  bool occluded(int r, int x) const { return !reliable(r, x); }
  void set_reliable(int r, int x, bool v) {
    bits[static_cast<std::size_t>(r) * width + x] = v ? 1 : 0;
  }

  std::size_t occluded_count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 0));
  }

  bool matches(const Image& img) const {
    return height == img.height && width == img.width;
  }
  bool operator==(const Mask&) const = default;
};

inline std::string shape_string(int h, int w) {
  return std::to_string(h) + "x" + std::to_string(w);
}
inline std::string shape_string(const Image& img) {
  return std::to_string(img.channels) + "x" + shape_string(img.height, img.width);
}

inline void require_same_size(const Image& img, const Mask& mask,
                              const char* what) {
  if (!mask.matches(img)) {
    throw InvalidArgument(std::string(what) + ": mask " +
                          shape_string(mask.height, mask.width) +
                          " does not match image " +
                          shape_string(img.height, img.width));
  }
}

inline void clamp01(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

// Mirror an out-of-range index back into [0, n) without repeating the edge
// sample (-1 -> 1, n -> n - 2).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Sampling weights for one axis of a half-pixel-aligned bilinear resize.
struct AxisTap {
  int lo;
  int hi;
  double w_hi;  // weight of `hi`; `lo` gets 1 - w_hi
};

inline std::vector<AxisTap> bilinear_taps(int in_size, int out_size) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int d = 0; d < out_size; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_size - 1);
    taps[d] = {lo, hi, src - lo};
  }
  return taps;
}

// Resamples each plane of a C x H x W buffer. Does not clamp, so it can be
// reused on signed data.
inline void resize_planes(std::span<const double> in, int channels, int in_h,
                          int in_w, std::span<double> out, int out_h,
                          int out_w) {
  const auto ty = bilinear_taps(in_h, out_h);
  const auto tx = bilinear_taps(in_w, out_w);
  const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    const double* src = in.data() + c * in_plane;
    double* dst = out.data() + c * out_plane;
    for (int r = 0; r < out_h; ++r) {
      const double* row0 = src + static_cast<std::size_t>(ty[r].lo) * in_w;
      const double* row1 = src + static_cast<std::size_t>(ty[r].hi) * in_w;
      const double wy = ty[r].w_hi;
      for (int x = 0; x < out_w; ++x) {
        const double wx = tx[x].w_hi;
        const double top = row0[tx[x].lo] * (1.0 - wx) + row0[tx[x].hi] * wx;
        const double bot = row1[tx[x].lo] * (1.0 - wx) + row1[tx[x].hi] * wx;
        dst[static_cast<std::size_t>(r) * out_w + x] =
            top * (1.0 - wy) + bot * wy;
      }
    }
  }
}

inline Image resize_bilinear(const Image& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw InvalidArgument("resize target must be at least 1x1, got " +
                          shape_string(out_h, out_w));
  }
  if (out_h == image.height && out_w == image.width) return image;
  Image out(image.channels, out_h, out_w);
  resize_planes(image.data, image.channels, image.height, image.width,
                out.data, out_h, out_w);
  clamp01(out);
  return out;
}

inline Image to_gray(const Image& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) {
    throw InvalidArgument("to_gray expects 1 or 3 channels, got " +
                          std::to_string(image.channels));
  }
  Image out(1, image.height, image.width);
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = std::clamp(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i],
                             0.0, 1.0);
  }
  return out;
}

// IR-GB composite: the infrared capture replaces the red channel.
inline Image compose_irgb(const Image& ir, const Image& rgb) {
  if (ir.channels != 1 || rgb.channels != 3) {
    throw InvalidArgument("compose_irgb expects a 1-channel IR and a "
                          "3-channel RGB image");
  }
  if (ir.height != rgb.height || ir.width != rgb.width) {
    throw InvalidArgument("compose_irgb: IR " +
                          shape_string(ir.height, ir.width) +
                          " does not match RGB " +
                          shape_string(rgb.height, rgb.width));
  }
  Image out = rgb;
  std::copy(ir.data.begin(), ir.data.end(), out.plane(0).begin());
  return out;
}

inline Image extract_channel(const Image& image, int c) {
  if (c < 0 || c >= image.channels) {
    throw InvalidArgument("channel " + std::to_string(c) + " out of range");
  }
  Image out(1, image.height, image.width);
  const auto src = image.plane(c);
  std::copy(src.begin(), src.end(), out.data.begin());
  return out;
}

// Occluded pixels are replaced by `fill` in every channel.
inline Image apply_mask(const Image& image, const Mask& mask,
                        double fill = 0.0) {
  require_same_size(image, mask, "apply_mask");
  Image out = image;
  for (int c = 0; c < image.channels; ++c) {
    auto p = out.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!mask.bits[i]) p[i] = fill;
    }
  }
  return out;
}

}  // namespace dipaint
