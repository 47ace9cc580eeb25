// Independent reference implementations shared by the unit tests and the
// acceptance harness. Each one is deliberately naive.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dipaint/image.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/rng.hpp"

namespace testing_support {

using dipaint::Image;
using dipaint::Mask;
using dipaint::SeedPoint;

// Coarsely quantised random image so that components are non-trivial.
inline Image blotchy(int c, int h, int w, std::uint64_t seed, int levels) {
  dipaint::SplitMix64 rng(seed);
  Image img(c, h, w);
  for (double& v : img.data) v = static_cast<double>(rng.below(levels)) / (levels - 1);
  return img;
}

// Recursive depth-first flood fill, one seed at a time.
inline Mask flood_oracle(const Image& img, const std::vector<SeedPoint>& seeds, double tol) {
  Mask out(img.height, img.width, true);
  for (const auto& s : seeds) {
    std::vector<double> ref;
    for (int c = 0; c < img.channels; ++c) ref.push_back(img.at(c, s.row, s.col));
    std::vector<std::vector<bool>> seen(img.height, std::vector<bool>(img.width, false));
    std::function<void(int, int)> visit = [&](int r, int x) {
      if (r < 0 || x < 0 || r >= img.height || x >= img.width || seen[r][x]) return;
      seen[r][x] = true;
      double d = 0.0;
      for (int c = 0; c < img.channels; ++c) d += std::fabs(img.at(c, r, x) - ref[c]);
      d /= img.channels;
      if (d > tol && !(r == s.row && x == s.col)) return;
      out.set_reliable(r, x, false);
      visit(r + 1, x);
      visit(r - 1, x);
      visit(r, x + 1);
      visit(r, x - 1);
    };
    visit(s.row, s.col);
  }
  return out;
}

// Direct transcription of the discrete TV sum, term by term.
inline double tv_direct(const Image& u, double eps) {
  double s = 0.0;
  for (int c = 0; c < u.channels; ++c) {
    for (int i = 0; i < u.height - 1; ++i) {
      for (int j = 0; j < u.width - 1; ++j) {
        const double a = u.at(c, i + 1, j) - u.at(c, i, j);
        const double b = u.at(c, i, j + 1) - u.at(c, i, j);
        s += std::sqrt(a * a + b * b + eps * eps);
      }
    }
  }
  return s;
}

inline Image horizontal_ramp(int h, int w) {
  Image img(1, h, w);
  for (int r = 0; r < h; ++r) {
    for (int x = 0; x < w; ++x) img.at(0, r, x) = static_cast<double>(x) / (w - 1);
  }
  return img;
}

// Brute force NNF: every target against every admissible source, with the
// target patch clipped to the image.
struct Exhaustive {
  std::vector<int> targets;
  std::vector<double> best;
};

inline Exhaustive exhaustive_nnf(const Image& img, const Mask& mask, int ps) {
  const int h = ps / 2;
  Exhaustive ex;
  auto touches_hole = [&](int r, int x) {
    for (int dy = -h; dy <= h; ++dy) {
      for (int dx = -h; dx <= h; ++dx) {
        const int rr = r + dy;
        const int xx = x + dx;
        if (rr >= 0 && xx >= 0 && rr < img.height && xx < img.width && mask.occluded(rr, xx)) {
          return true;
        }
      }
    }
    return false;
  };
  for (int r = 0; r < img.height; ++r) {
    for (int x = 0; x < img.width; ++x) {
      if (!touches_hole(r, x)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int sr = h; sr + h < img.height; ++sr) {
        for (int sx = h; sx + h < img.width; ++sx) {
          if (touches_hole(sr, sx)) continue;
          double d = 0.0;
          for (int c = 0; c < img.channels; ++c) {
            for (int dy = -h; dy <= h; ++dy) {
              for (int dx = -h; dx <= h; ++dx) {
                const int tr = r + dy;
                const int tx = x + dx;
                if (tr < 0 || tx < 0 || tr >= img.height || tx >= img.width) continue;
                const double diff = img.at(c, tr, tx) - img.at(c, sr + dy, sx + dx);
                d += diff * diff;
              }
            }
          }
          best = std::min(best, d);
        }
      }
      ex.targets.push_back(r * img.width + x);
      ex.best.push_back(best);
    }
  }
  return ex;
}

}  // namespace testing_support
