#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"

namespace dipaint {

// One row of a quality report. psnr is +infinity when mse == 0.
struct MetricRow {
  std::string label;
  double ssim = 0.0;
  double nrmse = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
};

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(what) + ": image " + shape_string(a) +
                          " does not match " + shape_string(b));
  }
}

// Mean of (L * (ref - test))^2 over every channel and pixel.
inline double mse(const Image& reference, const Image& test, double range = 255.0) {
  require_same_shape(reference, test, "mse");
  double acc = 0.0;
  for (std::size_t k = 0; k < reference.data.size(); ++k) {
    const double d = range * (reference.data[k] - test.data[k]);
    acc += d * d;
  }
  return acc / static_cast<double>(reference.data.size());
}

inline double psnr_from_mse(double mse_value, double range) {
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse_value);
}

inline double psnr(const Image& reference, const Image& test, double range = 255.0) {
  return psnr_from_mse(mse(reference, test, range), range);
}

// sqrt(mean (ref - test)^2) / sqrt(mean ref^2); independent of the range.
inline double nrmse(const Image& reference, const Image& test) {
  require_same_shape(reference, test, "nrmse");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < reference.data.size(); ++k) {
    const double d = reference.data[k] - test.data[k];
    num += d * d;
    den += reference.data[k] * reference.data[k];
  }
  if (den == 0.0) throw InvalidArgument("nrmse: reference image is identically zero");
  return std::sqrt(num / den);
}

namespace ssim_detail {

inline std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const int half = window / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian blur of one plane with reflection at the borders.
inline std::vector<double> blur(const std::vector<double>& src, int H, int W,
                                const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size()) / 2;
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int r = 0; r < H; ++r) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += taps[k + half] * src[static_cast<std::size_t>(r) * W + reflect_index(x + k, W)];
      }
      tmp[static_cast<std::size_t>(r) * W + x] = acc;
    }
  }
  for (int r = 0; r < H; ++r) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += taps[k + half] * tmp[static_cast<std::size_t>(reflect_index(r + k, H)) * W + x];
      }
      out[static_cast<std::size_t>(r) * W + x] = acc;
    }
  }
  return out;
}

}  // namespace ssim_detail

inline void validate(const SsimConfig& cfg, const Image& img) {
  if (cfg.window < 1 || cfg.window % 2 == 0) {
    throw InvalidArgument("SSIM window must be odd");
  }
  if (cfg.window > img.height || cfg.window > img.width) {
    throw InvalidArgument("SSIM window " + std::to_string(cfg.window) +
                          " larger than image " +
                          shape_string(img.height, img.width));
  }
  if (!(cfg.sigma > 0.0)) throw InvalidArgument("SSIM sigma must be positive");
}

// Per-pixel SSIM for every channel, laid out like image.data.
inline std::vector<double> ssim_map(const Image& reference, const Image& test,
                                    const SsimConfig& cfg = {}) {
  require_same_shape(reference, test, "ssim");
  validate(cfg, reference);
  const double L = cfg.dynamic_range;
  const double c1 = (cfg.k1 * L) * (cfg.k1 * L);
  const double c2 = (cfg.k2 * L) * (cfg.k2 * L);
  const auto taps = ssim_detail::gaussian_taps(cfg.window, cfg.sigma);
  const int H = reference.height;
  const int W = reference.width;
  const std::size_t plane = reference.plane_size();
  std::vector<double> out(reference.data.size());
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (int c = 0; c < reference.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      x[p] = L * reference.data[c * plane + p];
      y[p] = L * test.data[c * plane + p];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = ssim_detail::blur(x, H, W, taps);
    const auto my = ssim_detail::blur(y, H, W, taps);
    const auto mxx = ssim_detail::blur(xx, H, W, taps);
    const auto myy = ssim_detail::blur(yy, H, W, taps);
    const auto mxy = ssim_detail::blur(xy, H, W, taps);
    for (std::size_t p = 0; p < plane; ++p) {
      const double vx = mxx[p] - mx[p] * mx[p];
      const double vy = myy[p] - my[p] * my[p];
      const double cov = mxy[p] - mx[p] * my[p];
      out[c * plane + p] = ((2.0 * mx[p] * my[p] + c1) * (2.0 * cov + c2)) /
                           ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
    }
  }
  return out;
}

// Channel-averaged mean SSIM.
inline double ssim(const Image& reference, const Image& test,
                   const SsimConfig& cfg = {}) {
  const auto map = ssim_map(reference, test, cfg);
  const std::size_t plane = reference.plane_size();
  double total = 0.0;
  for (int c = 0; c < reference.channels; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) acc += map[c * plane + p];
    total += acc / static_cast<double>(plane);
  }
  return total / reference.channels;
}

// SSIM window shrunk to fit small images (11 on anything at least 11x11).
inline SsimConfig ssim_config_for(const Image& img, double range) {
  SsimConfig cfg;
  cfg.dynamic_range = range;
  const int side = std::min(img.height, img.width);
  if (cfg.window > side) cfg.window = side % 2 == 1 ? side : side - 1;
  return cfg;
}

inline MetricRow evaluate(const Image& reference, const Image& test,
                          const std::string& label, double range = 255.0) {
  require_same_shape(reference, test, "evaluate");
  MetricRow row;
  row.label = label;
  row.ssim = ssim(reference, test, ssim_config_for(reference, range));
  row.nrmse = nrmse(reference, test);
  row.mse = mse(reference, test, range);
  row.psnr = psnr_from_mse(row.mse, range);
  return row;
}

}  // namespace dipaint
