#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/fill.hpp"
#include "dipaint/image.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/rng.hpp"

namespace dipaint {

struct PatchParams {
  int patch_size = 5;
  int pm_iterations = 5;
  int em_iterations = 4;
  int pyramid_levels = 0;  // 0: pick so the coarsest side is >= 4 * patch_size
  std::uint64_t rng_seed = 0x5eed;
};

struct PixelPos {
  int row = 0;
  int col = 0;
  bool operator==(const PixelPos&) const = default;
};

// Nearest-neighbour field over the target set: every pixel whose patch
// touches the occluded region. Source centres are stored as offsets from
// the target centre.
struct NNField {
  int height = 0;
  int width = 0;
  int patch_size = 0;
  std::vector<int> targets;  // flat pixel indices, scan order
  std::vector<int> drow;     // per target
  std::vector<int> dcol;
  std::vector<double> distance;

  PixelPos source_of(std::size_t t) const {
    return {targets[t] / width + drow[t], targets[t] % width + dcol[t]};
  }
  double mean_distance() const {
    if (distance.empty()) return 0.0;
    double acc = 0.0;
    for (double d : distance) acc += d;
    return acc / static_cast<double>(distance.size());
  }
};

struct NnfSearchResult {
  NNField field;
  double initial_mean_distance = 0.0;
  std::vector<double> pass_mean_distance;  // after each propagation+search pass
};

inline void validate(const PatchParams& p) {
  if (p.patch_size != 3 && p.patch_size != 5 && p.patch_size != 7) {
    throw InvalidArgument("patch size must be odd in {3,5,7}, got " +
                          std::to_string(p.patch_size));
  }
  if (p.pm_iterations < 1 || p.em_iterations < 1 || p.pyramid_levels < 0) {
    throw InvalidArgument("PatchMatch iteration counts must be >= 1");
  }
}

// Sum of squared differences between two fully in-bounds patches, over all
// channels.
inline double patch_distance(const Image& image, PixelPos a, PixelPos b,
                             int patch_size) {
  const int h = patch_size / 2;
  auto inside = [&](PixelPos p) {
    return p.row - h >= 0 && p.col - h >= 0 && p.row + h < image.height &&
           p.col + h < image.width;
  };
  if (patch_size < 1 || patch_size % 2 == 0) {
    throw InvalidArgument("patch size must be odd");
  }
  if (!inside(a) || !inside(b)) {
    throw InvalidArgument("patch leaves the image bounds");
  }
  double acc = 0.0;
  for (int c = 0; c < image.channels; ++c) {
    for (int dy = -h; dy <= h; ++dy) {
      for (int dx = -h; dx <= h; ++dx) {
        const double d =
            image.at(c, a.row + dy, a.col + dx) - image.at(c, b.row + dy, b.col + dx);
        acc += d * d;
      }
    }
  }
  return acc;
}

namespace pm_detail {

// Source centres: patch fully inside the image and free of occluded pixels.
inline std::vector<std::uint8_t> valid_sources(const Mask& mask, int patch_size) {
  const int h = patch_size / 2;
  const Mask grown = dilate(mask, h);
  std::vector<std::uint8_t> valid(mask.size(), 0);
  for (int r = h; r + h < mask.height; ++r) {
    for (int x = h; x + h < mask.width; ++x) {
      valid[static_cast<std::size_t>(r) * mask.width + x] = grown.reliable(r, x);
    }
  }
  return valid;
}

// SSD over the in-bounds part of the target patch. Source patches are
// always fully inside, so for interior targets this equals patch_distance.
// Stops early once `bound` is exceeded.
inline double clipped_distance(const Image& img, int tr, int tc, int sr, int sc,
                               int h, double bound) {
  const int H = img.height;
  const int W = img.width;
  const std::size_t plane = img.plane_size();
  const int y0 = std::max(-h, -tr);
  const int y1 = std::min(h, H - 1 - tr);
  const int x0 = std::max(-h, -tc);
  const int x1 = std::min(h, W - 1 - tc);
  double acc = 0.0;
  for (int c = 0; c < img.channels; ++c) {
    const double* base = img.data.data() + c * plane;
    for (int dy = y0; dy <= y1; ++dy) {
      const double* trow = base + static_cast<std::size_t>(tr + dy) * W + tc;
      const double* srow = base + static_cast<std::size_t>(sr + dy) * W + sc;
      for (int dx = x0; dx <= x1; ++dx) {
        const double d = trow[dx] - srow[dx];
        acc += d * d;
      }
    }
    if (acc > bound) return acc;
  }
  return acc;
}

inline std::vector<int> target_set(const Mask& mask, int patch_size) {
  const Mask grown = dilate(mask, patch_size / 2);
  std::vector<int> targets;
  for (int p = 0; p < static_cast<int>(grown.size()); ++p) {
    if (!grown.bits[p]) targets.push_back(p);
  }
  return targets;
}

class Searcher {
 public:
  Searcher(const Image& image, const Mask& mask, int patch_size,
           SplitMix64& rng)
      : image_(image),
        h_(patch_size / 2),
        valid_(valid_sources(mask, patch_size)),
        rng_(rng) {
    for (int p = 0; p < static_cast<int>(valid_.size()); ++p) {
      if (valid_[p]) valid_list_.push_back(p);
    }
    if (valid_list_.empty()) {
      throw SolverError("no valid source patch of size " +
                        std::to_string(patch_size) +
                        " lies entirely in the reliable region");
    }
  }

  bool valid(int r, int c) const {
    return r >= 0 && c >= 0 && r < image_.height && c < image_.width &&
           valid_[static_cast<std::size_t>(r) * image_.width + c];
  }

  double distance(int target, int sr, int sc, double bound) const {
    const int W = image_.width;
    return clipped_distance(image_, target / W, target % W, sr, sc, h_, bound);
  }

  int random_source() {
    return valid_list_[rng_.below(valid_list_.size())];
  }

  void randomize(NNField& f, std::size_t t) {
    const int W = image_.width;
    const int s = random_source();
    f.drow[t] = s / W - f.targets[t] / W;
    f.dcol[t] = s % W - f.targets[t] % W;
    f.distance[t] = distance(f.targets[t], s / W, s % W,
                             std::numeric_limits<double>::infinity());
  }

  // Re-scores an existing field; entries pointing at invalid sources are
  // redrawn.
  void rescore(NNField& f) {
    for (std::size_t t = 0; t < f.targets.size(); ++t) {
      const PixelPos s = f.source_of(t);
      if (!valid(s.row, s.col)) {
        randomize(f, t);
      } else {
        f.distance[t] = distance(f.targets[t], s.row, s.col,
                                 std::numeric_limits<double>::infinity());
      }
    }
  }

  bool try_candidate(NNField& f, std::size_t t, int sr, int sc) {
    if (!valid(sr, sc)) return false;
    const int W = image_.width;
    const int tr = f.targets[t] / W;
    const int tc = f.targets[t] % W;
    if (sr - tr == f.drow[t] && sc - tc == f.dcol[t]) return false;
    const double d = distance(f.targets[t], sr, sc, f.distance[t]);
    if (d < f.distance[t]) {
      f.drow[t] = sr - tr;
      f.dcol[t] = sc - tc;
      f.distance[t] = d;
      return true;
    }
    return false;
  }

  // One PatchMatch pass; even passes scan forward and borrow from the
  // left/up neighbours, odd passes scan backward using right/down.
  void pass(NNField& f, const std::vector<int>& slot, bool forward) {
    const int W = image_.width;
    const int n = static_cast<int>(f.targets.size());
    const int step = forward ? -1 : 1;
    for (int k = 0; k < n; ++k) {
      const std::size_t t = static_cast<std::size_t>(forward ? k : n - 1 - k);
      const int tp = f.targets[t];
      const int tr = tp / W;
      const int tc = tp % W;
      const int nbr_c = tc + step;
      if (nbr_c >= 0 && nbr_c < W) {
        const int s = slot[tp + step];
        if (s >= 0) try_candidate(f, t, tr + f.drow[s], tc + f.dcol[s]);
      }
      const int nbr_r = tr + step;
      if (nbr_r >= 0 && nbr_r < image_.height) {
        const int s = slot[tp + step * W];
        if (s >= 0) try_candidate(f, t, tr + f.drow[s], tc + f.dcol[s]);
      }
      // Random search around the current best, window clipped to the
      // source-centre range. Draws landing on inadmissible centres are
      // redrawn a bounded number of times.
      for (int radius = std::max(image_.height, image_.width); radius >= 1;
           radius /= 2) {
        const PixelPos best = f.source_of(t);
        const int r0 = std::max(h_, best.row - radius);
        const int r1 = std::min(image_.height - 1 - h_, best.row + radius);
        const int c0 = std::max(h_, best.col - radius);
        const int c1 = std::min(image_.width - 1 - h_, best.col + radius);
        for (int draw = 0; draw < kMaxDraws; ++draw) {
          const int sr = rng_.between(r0, r1);
          const int sc = rng_.between(c0, c1);
          if (!valid(sr, sc)) continue;
          try_candidate(f, t, sr, sc);
          break;
        }
      }
    }
  }

 private:
  static constexpr int kMaxDraws = 8;

  const Image& image_;
  int h_;
  std::vector<std::uint8_t> valid_;
  std::vector<int> valid_list_;
  SplitMix64& rng_;
};

inline NNField empty_field(const Image& image, const Mask& mask, int patch_size) {
  NNField f;
  f.height = image.height;
  f.width = image.width;
  f.patch_size = patch_size;
  f.targets = target_set(mask, patch_size);
  f.drow.assign(f.targets.size(), 0);
  f.dcol.assign(f.targets.size(), 0);
  f.distance.assign(f.targets.size(), 0.0);
  return f;
}

inline std::vector<int> slot_map(const NNField& f) {
  std::vector<int> slot(static_cast<std::size_t>(f.height) * f.width, -1);
  for (std::size_t t = 0; t < f.targets.size(); ++t) {
    slot[f.targets[t]] = static_cast<int>(t);
  }
  return slot;
}

inline NnfSearchResult search(const Image& image, const Mask& mask,
                              const PatchParams& params, const NNField* init,
                              SplitMix64& rng) {
  require_same_size(image, mask, "nnf_search");
  Searcher searcher(image, mask, params.patch_size, rng);
  NnfSearchResult res;
  NNField& f = res.field;
  f = empty_field(image, mask, params.patch_size);
  if (init && init->targets == f.targets && init->width == f.width) {
    f.drow = init->drow;
    f.dcol = init->dcol;
    searcher.rescore(f);
  } else {
    for (std::size_t t = 0; t < f.targets.size(); ++t) searcher.randomize(f, t);
  }
  res.initial_mean_distance = f.mean_distance();
  const auto slot = slot_map(f);
  for (int it = 0; it < params.pm_iterations; ++it) {
    searcher.pass(f, slot, it % 2 == 0);
    res.pass_mean_distance.push_back(f.mean_distance());
  }
  return res;
}

}  // namespace pm_detail

// Approximate nearest-neighbour field by PatchMatch: random (or supplied)
// initialisation, then alternating propagation and random search.
inline NnfSearchResult nnf_search(const Image& image, const Mask& mask,
                                  const PatchParams& params,
                                  const NNField* init = nullptr) {
  validate(params);
  SplitMix64 rng(params.rng_seed);
  return pm_detail::search(image, mask, params, init, rng);
}

namespace pm_detail {

// Every occluded pixel becomes the weighted mean of the values proposed by
// all target patches covering it; weight exp(-d / (2 sigma^2)) with sigma
// the 75th percentile of current patch distances.
inline void vote(Image& image, const Mask& mask, const NNField& f) {
  const int W = image.width;
  const int H = image.height;
  const int h = f.patch_size / 2;
  const std::size_t plane = image.plane_size();

  double sigma = 0.0;
  if (!f.distance.empty()) {
    std::vector<double> sorted = f.distance;
    const std::size_t k = (sorted.size() - 1) * 3 / 4;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k),
                     sorted.end());
    sigma = sorted[k];
  }
  std::vector<double> weight(f.targets.size(), 1.0);
  if (sigma > 0.0) {
    for (std::size_t t = 0; t < weight.size(); ++t) {
      weight[t] = std::exp(-f.distance[t] / (2.0 * sigma * sigma));
    }
  }
  const auto slot = slot_map(f);
  const Image src = image;
  std::vector<double> acc(static_cast<std::size_t>(image.channels));
  std::vector<double> plain(static_cast<std::size_t>(image.channels));
  for (int p = 0; p < static_cast<int>(mask.size()); ++p) {
    if (mask.bits[p]) continue;
    const int r = p / W;
    const int x = p % W;
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(plain.begin(), plain.end(), 0.0);
    double wsum = 0.0;
    int count = 0;
    for (int dy = -h; dy <= h; ++dy) {
      const int tr = r - dy;
      if (tr < 0 || tr >= H) continue;
      for (int dx = -h; dx <= h; ++dx) {
        const int tc = x - dx;
        if (tc < 0 || tc >= W) continue;
        const int t = slot[static_cast<std::size_t>(tr) * W + tc];
        if (t < 0) continue;
        const int sr = tr + f.drow[t] + dy;
        const int sc = tc + f.dcol[t] + dx;
        const std::size_t sp = static_cast<std::size_t>(sr) * W + sc;
        for (int c = 0; c < image.channels; ++c) {
          const double v = src.data[c * plane + sp];
          acc[c] += weight[t] * v;
          plain[c] += v;
        }
        wsum += weight[t];
        ++count;
      }
    }
    if (count == 0) continue;
    for (int c = 0; c < image.channels; ++c) {
      image.data[c * plane + p] =
          wsum > 0.0 ? acc[c] / wsum : plain[c] / count;
    }
  }
}

inline double field_energy(const Image& image, const NNField& f) {
  double e = 0.0;
  const int h = f.patch_size / 2;
  for (std::size_t t = 0; t < f.targets.size(); ++t) {
    const PixelPos s = f.source_of(t);
    e += clipped_distance(image, f.targets[t] / f.width, f.targets[t] % f.width,
                          s.row, s.col, h,
                          std::numeric_limits<double>::infinity());
  }
  return e;
}

struct Level {
  Image image;
  Mask mask;
};

inline int default_levels(int height, int width, int patch_size) {
  int levels = 1;
  int side = std::min(height, width);
  while (side / 2 >= 4 * patch_size) {
    side /= 2;
    ++levels;
  }
  return levels;
}

inline Level downsample(const Level& fine) {
  const int h = (fine.image.height + 1) / 2;
  const int w = (fine.image.width + 1) / 2;
  Level out;
  out.image = resize_bilinear(fine.image, h, w);
  Image ind(1, fine.mask.height, fine.mask.width);
  for (std::size_t i = 0; i < fine.mask.size(); ++i) ind.data[i] = fine.mask.bits[i];
  const Image small = resize_bilinear(ind, h, w);
  out.mask = Mask(h, w, true);
  // Any contribution from the hole keeps the coarse pixel occluded.
  for (std::size_t i = 0; i < out.mask.size(); ++i) {
    out.mask.bits[i] = small.data[i] >= 1.0 - 1e-12 ? 1 : 0;
  }
  return out;
}

// Carries a coarse field to the next finer level: offsets double, targets
// inherit from their coarse parent.
inline NNField upsample_field(const NNField& coarse, const Image& fine_image,
                              const Mask& fine_mask) {
  NNField f = empty_field(fine_image, fine_mask, coarse.patch_size);
  const auto slot = slot_map(coarse);
  for (std::size_t t = 0; t < f.targets.size(); ++t) {
    const int r = f.targets[t] / f.width;
    const int c = f.targets[t] % f.width;
    const int cr = std::min(r / 2, coarse.height - 1);
    const int cc = std::min(c / 2, coarse.width - 1);
    const int s = slot[static_cast<std::size_t>(cr) * coarse.width + cc];
    if (s >= 0) {
      f.drow[t] = 2 * coarse.drow[s];
      f.dcol[t] = 2 * coarse.dcol[s];
    } else {
      f.drow[t] = -r;  // points at (0,0): invalid for any patch > 1, redrawn
      f.dcol[t] = -c;
    }
  }
  return f;
}

}  // namespace pm_detail

struct PatchTrace {
  Image image;
  // Sum of field distances after each voting step on the finest level.
  std::vector<double> finest_energy;
  // Same on the coarsest level.
  std::vector<double> coarsest_energy;
};

// Multiscale exemplar inpainting: coarse-to-fine, alternating PatchMatch
// search and weighted patch voting.
inline PatchTrace patch_inpaint_traced(const Image& observed, const Mask& mask,
                                       const PatchParams& params) {
  require_same_size(observed, mask, "patch_inpaint");
  validate(params);
  if (mask.occluded_count() == mask.size()) {
    throw SolverError("mask marks every pixel as occluded");
  }
  const int levels = params.pyramid_levels > 0
                         ? params.pyramid_levels
                         : pm_detail::default_levels(observed.height,
                                                     observed.width,
                                                     params.patch_size);
  std::vector<pm_detail::Level> pyramid(1);
  pyramid[0].image = fill_inward(observed, mask, 50);
  pyramid[0].mask = mask;
  for (int l = 1; l < levels; ++l) {
    pm_detail::Level next = pm_detail::downsample(pyramid.back());
    if (next.image.height < params.patch_size ||
        next.image.width < params.patch_size ||
        next.mask.occluded_count() == next.mask.size()) {
      break;
    }
    pyramid.push_back(std::move(next));
  }

  SplitMix64 rng(params.rng_seed);
  PatchTrace trace;
  NNField field;
  bool have_field = false;
  Image current;
  for (int l = static_cast<int>(pyramid.size()) - 1; l >= 0; --l) {
    const auto& level = pyramid[static_cast<std::size_t>(l)];
    if (l == static_cast<int>(pyramid.size()) - 1) {
      current = fill_inward(level.image, level.mask, 50);
    } else {
      Image up = resize_bilinear(current, level.image.height, level.image.width);
      current = level.image;
      const std::size_t plane = current.plane_size();
      for (int c = 0; c < current.channels; ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
          if (!level.mask.bits[p]) current.data[c * plane + p] = up.data[c * plane + p];
        }
      }
      field = pm_detail::upsample_field(field, current, level.mask);
    }
    for (int em = 0; em < params.em_iterations; ++em) {
      auto res = pm_detail::search(current, level.mask, params,
                                   have_field ? &field : nullptr, rng);
      field = std::move(res.field);
      have_field = true;
      pm_detail::vote(current, level.mask, field);
      const std::size_t plane = current.plane_size();
      for (int c = 0; c < current.channels; ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
          if (level.mask.bits[p]) {
            current.data[c * plane + p] = level.image.data[c * plane + p];
          }
        }
      }
      const double e = pm_detail::field_energy(current, field);
      if (l == 0) trace.finest_energy.push_back(e);
      if (l == static_cast<int>(pyramid.size()) - 1) {
        trace.coarsest_energy.push_back(e);
      }
    }
  }
  // Reliable pixels come straight from the input.
  const std::size_t plane = current.plane_size();
  for (int c = 0; c < current.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (mask.bits[p]) current.data[c * plane + p] = observed.data[c * plane + p];
    }
  }
  trace.image = std::move(current);
  return trace;
}

inline Image patch_inpaint(const Image& observed, const Mask& mask,
                           const PatchParams& params) {
  return patch_inpaint_traced(observed, mask, params).image;
}

}  // namespace dipaint
