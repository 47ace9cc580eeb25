#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/png_io.hpp"

namespace dipaint {

struct SeedPoint {
  int row = 0;
  int col = 0;
  bool operator==(const SeedPoint&) const = default;
};

inline std::string to_string(const SeedPoint& s) {
  return "(" + std::to_string(s.row) + ", " + std::to_string(s.col) + ")";
}

struct ToleranceSpec {
  std::vector<double> reference_color;
  double tolerance = 0.0;
};

enum class MaskOp { kUnion, kIntersect, kInvertA };

// Composite colour distance: mean over channels of the absolute difference.
inline double color_distance(const Image& img, std::size_t pixel,
                             std::span<const double> color) {
  const std::size_t plane = img.plane_size();
  double acc = 0.0;
  for (int c = 0; c < img.channels; ++c) {
    acc += std::abs(img.data[c * plane + pixel] - color[c]);
  }
  return acc / img.channels;
}

inline Mask mask_by_color(const Image& image, const ToleranceSpec& spec) {
  if (static_cast<int>(spec.reference_color.size()) != image.channels) {
    throw InvalidArgument("reference colour has " +
                          std::to_string(spec.reference_color.size()) +
                          " channels, image has " +
                          std::to_string(image.channels));
  }
  if (spec.tolerance < 0.0) throw InvalidArgument("tolerance must be >= 0");
  Mask mask(image.height, image.width, true);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (color_distance(image, p, spec.reference_color) <= spec.tolerance) {
      mask.bits[p] = 0;
    }
  }
  return mask;
}

// Union of the 4-connected components grown from each seed. A pixel joins
// when its distance to the seed's own colour is within `tolerance`.
inline Mask region_grow(const Image& image, std::span<const SeedPoint> seeds,
                        double tolerance) {
  if (seeds.empty()) throw InvalidArgument("region_grow needs at least one seed");
  if (tolerance < 0.0) throw InvalidArgument("tolerance must be >= 0");
  for (const auto& s : seeds) {
    if (s.row < 0 || s.row >= image.height || s.col < 0 ||
        s.col >= image.width) {
      throw InvalidArgument("seed " + to_string(s) + " outside image " +
                            shape_string(image.height, image.width));
    }
  }
  const int H = image.height;
  const int W = image.width;
  Mask mask(H, W, true);
  std::vector<std::uint8_t> visited(mask.size());
  std::vector<double> color(static_cast<std::size_t>(image.channels));
  std::deque<int> queue;
  for (const auto& s : seeds) {
    const std::size_t sp = static_cast<std::size_t>(s.row) * W + s.col;
    for (int c = 0; c < image.channels; ++c) {
      color[c] = image.data[c * image.plane_size() + sp];
    }
    std::fill(visited.begin(), visited.end(), 0);
    visited[sp] = 1;
    queue.assign(1, static_cast<int>(sp));
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      mask.bits[p] = 0;
      const int r = p / W;
      const int x = p % W;
      const int nbr[4][2] = {{r - 1, x}, {r + 1, x}, {r, x - 1}, {r, x + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= H || n[1] < 0 || n[1] >= W) continue;
        const int q = n[0] * W + n[1];
        if (visited[q]) continue;
        visited[q] = 1;
        if (color_distance(image, q, color) <= tolerance) queue.push_back(q);
      }
    }
  }
  return mask;
}

// Grows the occluded region by a Chebyshev ball (square) of `radius`.
inline Mask dilate(const Mask& mask, int radius) {
  if (radius < 0) throw InvalidArgument("dilation radius must be >= 0");
  if (radius == 0) return mask;
  const int H = mask.height;
  const int W = mask.width;
  // Separable max filter over the occluded indicator.
  std::vector<std::uint8_t> rows(mask.size(), 0);
  for (int r = 0; r < H; ++r) {
    for (int x = 0; x < W; ++x) {
      if (!mask.occluded(r, x)) continue;
      const int lo = std::max(0, x - radius);
      const int hi = std::min(W - 1, x + radius);
      for (int k = lo; k <= hi; ++k) rows[static_cast<std::size_t>(r) * W + k] = 1;
    }
  }
  Mask out(H, W, true);
  for (int r = 0; r < H; ++r) {
    for (int x = 0; x < W; ++x) {
      if (!rows[static_cast<std::size_t>(r) * W + x]) continue;
      const int lo = std::max(0, r - radius);
      const int hi = std::min(H - 1, r + radius);
      for (int k = lo; k <= hi; ++k) out.set_reliable(k, x, false);
    }
  }
  return out;
}

// Boolean algebra on the occluded sets of `a` and `b`.
inline Mask combine(const Mask& a, const Mask& b, MaskOp op) {
  if (op == MaskOp::kInvertA) {
    Mask out = a;
    for (auto& bit : out.bits) bit = bit ? 0 : 1;
    return out;
  }
  if (a.height != b.height || a.width != b.width) {
    throw InvalidArgument("cannot combine masks " +
                          shape_string(a.height, a.width) + " and " +
                          shape_string(b.height, b.width));
  }
  Mask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool occ_a = !a.bits[i];
    const bool occ_b = !b.bits[i];
    const bool occ = op == MaskOp::kUnion ? (occ_a || occ_b) : (occ_a && occ_b);
    out.bits[i] = occ ? 0 : 1;
  }
  return out;
}

// Mask files: 8-bit gray PNG, 0 = occluded, 255 = reliable.
inline std::vector<std::uint8_t> encode_mask_png(const Mask& mask) {
  Image img(1, mask.height, mask.width);
  for (std::size_t i = 0; i < mask.size(); ++i) img.data[i] = mask.bits[i] ? 1.0 : 0.0;
  return encode_png(img);
}

// Intensities below byte 128 are occluded.
inline Mask decode_mask_png(std::span<const std::uint8_t> bytes,
                            const std::string& source = "<memory>") {
  const Image img = decode_png(bytes, source);
  if (img.channels != 1) {
    throw IoError("mask " + source + " must be a grayscale PNG, found " +
                  std::to_string(img.channels) + " channels");
  }
  Mask mask(img.height, img.width, true);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask.bits[i] = img.data[i] * 255.0 < 127.5 ? 0 : 1;
  }
  return mask;
}

inline void save_mask(const Mask& mask, const std::filesystem::path& path) {
  png_detail::write_file(path, encode_mask_png(mask));
}

inline Mask load_mask(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  return decode_mask_png(png_detail::read_file(path), path.string());
}

// Nearest-style resampling for masks: bilinear on the indicator, occluded
// where the result falls below one half.
inline Mask resize_mask(const Mask& mask, int out_h, int out_w) {
  if (out_h == mask.height && out_w == mask.width) return mask;
  Image ind(1, mask.height, mask.width);
  for (std::size_t i = 0; i < mask.size(); ++i) ind.data[i] = mask.bits[i];
  const Image r = resize_bilinear(ind, out_h, out_w);
  Mask out(out_h, out_w, true);
  for (std::size_t i = 0; i < out.size(); ++i) out.bits[i] = r.data[i] < 0.5 ? 0 : 1;
  return out;
}

}  // namespace dipaint
