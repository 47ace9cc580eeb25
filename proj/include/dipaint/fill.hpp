#pragma once

#include <cstdint>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"

namespace dipaint {

// Deterministic, parameter-free starting point for the occluded region.
// Layers of the hole are peeled from the outside in, each pixel taking the
// mean of its already-known 4-neighbours; then `sweeps` Jacobi passes of
// 4-neighbour averaging smooth the result. Reliable pixels are untouched.
inline Image fill_inward(const Image& observed, const Mask& mask,
                         int sweeps = 50) {
  require_same_size(observed, mask, "fill_inward");
  if (mask.occluded_count() == mask.size()) {
    throw SolverError("mask marks every pixel as occluded");
  }
  const int H = observed.height;
  const int W = observed.width;
  const std::size_t plane = observed.plane_size();
  Image out = observed;
  std::vector<std::uint8_t> known(mask.bits.begin(), mask.bits.end());
  std::vector<int> frontier;
  std::size_t remaining = mask.occluded_count();

  auto neighbours = [&](int p, auto&& fn) {
    const int r = p / W;
    const int x = p % W;
    if (r > 0) fn(p - W);
    if (r + 1 < H) fn(p + W);
    if (x > 0) fn(p - 1);
    if (x + 1 < W) fn(p + 1);
  };

  while (remaining > 0) {
    frontier.clear();
    for (int p = 0; p < static_cast<int>(plane); ++p) {
      if (known[p]) continue;
      bool touches = false;
      neighbours(p, [&](int q) { touches = touches || known[q]; });
      if (touches) frontier.push_back(p);
    }
    for (int p : frontier) {
      for (int c = 0; c < observed.channels; ++c) {
        double acc = 0.0;
        int n = 0;
        neighbours(p, [&](int q) {
          if (known[q]) {
            acc += out.data[c * plane + q];
            ++n;
          }
        });
        out.data[c * plane + p] = acc / n;
      }
    }
    for (int p : frontier) known[p] = 1;
    remaining -= frontier.size();
  }

  std::vector<double> next(out.data);
  for (int s = 0; s < sweeps; ++s) {
    for (int c = 0; c < observed.channels; ++c) {
      for (int p = 0; p < static_cast<int>(plane); ++p) {
        if (mask.bits[p]) continue;
        double acc = 0.0;
        int n = 0;
        neighbours(p, [&](int q) {
          acc += out.data[c * plane + q];
          ++n;
        });
        next[c * plane + p] = acc / n;
      }
    }
    out.data.swap(next);
  }
  return out;
}

}  // namespace dipaint
