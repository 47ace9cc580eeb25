#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/fill.hpp"
#include "dipaint/image.hpp"

namespace dipaint {

struct TvSolveParams {
  double lambda = 10.0;
  double step = 1e-3;
  int iterations = 2000;
  double epsilon = 1e-3;
};

struct NsSolveParams {
  int transport_steps = 300;
  int diffusion_interval = 15;
  int diffusion_steps = 2;
  double dt = 0.1;
};

// Isotropic TV with forward differences. The last row and column only
// appear as the "+1" neighbour of a term, never as a term of their own.
// With epsilon > 0 each term becomes sqrt(a^2 + b^2 + epsilon^2).
// When `grad` is non-empty the derivative is accumulated into it.
inline double tv_accumulate(std::span<const double> x, int channels, int height,
                            int width, double epsilon, std::span<double> grad) {
  const double eps2 = epsilon * epsilon;
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  const bool want_grad = !grad.empty();
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    const double* px = x.data() + c * plane;
    double* g = want_grad ? grad.data() + c * plane : nullptr;
    for (int i = 0; i + 1 < height; ++i) {
      for (int j = 0; j + 1 < width; ++j) {
        const std::size_t p = static_cast<std::size_t>(i) * width + j;
        const double down = px[p + width] - px[p];
        const double right = px[p + 1] - px[p];
        const double s = std::sqrt(down * down + right * right + eps2);
        total += s;
        if (want_grad && s > 0.0) {
          g[p] -= (down + right) / s;
          g[p + width] += down / s;
          g[p + 1] += right / s;
        }
      }
    }
  }
  return total;
}

inline void require_tv_dims(const Image& image) {
  if (image.height < 2 || image.width < 2) {
    throw InvalidArgument("total variation needs at least 2x2 pixels, got " +
                          shape_string(image.height, image.width));
  }
}

inline double tv_value(const Image& image) {
  require_tv_dims(image);
  return tv_accumulate(image.data, image.channels, image.height, image.width,
                       0.0, {});
}

inline double tv_value_smoothed(const Image& image, double epsilon) {
  require_tv_dims(image);
  return tv_accumulate(image.data, image.channels, image.height, image.width,
                       epsilon, {});
}

// Gradient of the epsilon-smoothed TV, laid out like image.data.
inline std::vector<double> tv_gradient(const Image& image, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("TV epsilon must be positive");
  require_tv_dims(image);
  std::vector<double> grad(image.data.size(), 0.0);
  tv_accumulate(image.data, image.channels, image.height, image.width, epsilon,
                grad);
  return grad;
}

inline void validate(const TvSolveParams& p) {
  if (!(p.lambda > 0.0) || !(p.step > 0.0) || !(p.epsilon > 0.0) ||
      p.iterations < 1) {
    throw InvalidArgument("TV parameters must be positive with iterations >= 1");
  }
}

inline void validate(const NsSolveParams& p) {
  if (p.transport_steps < 1 || p.diffusion_interval < 1 ||
      p.diffusion_steps < 1 || !(p.dt > 0.0)) {
    throw InvalidArgument("Navier-Stokes step counts must be >= 1 and dt > 0");
  }
}

namespace detail {

inline void require_anchor(const Mask& mask) {
  if (mask.occluded_count() == mask.size()) {
    throw SolverError("mask marks every pixel as occluded; nothing to anchor "
                      "the data term");
  }
}

}  // namespace detail

// lambda * ||m (x - observed)||^2 + TV_eps(x)
inline double tv_energy(const Image& x, const Image& observed, const Mask& mask,
                        double lambda, double epsilon) {
  const std::size_t plane = x.plane_size();
  double data = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (!mask.bits[p]) continue;
      const double d = x.data[c * plane + p] - observed.data[c * plane + p];
      data += d * d;
    }
  }
  return lambda * data + tv_value_smoothed(x, epsilon);
}

struct TvTrace {
  Image image;
  // Energy of the starting point followed by the energy after every
  // accepted iteration.
  std::vector<double> energy;
};

// Gradient descent on the TV inpainting energy. `params.step` is the largest
// step tried; an iteration that would raise the energy halves the step until
// it does not, and the next iteration retries twice the accepted step.
inline TvTrace tv_inpaint_traced(const Image& observed, const Mask& mask,
                                 const TvSolveParams& params) {
  require_same_size(observed, mask, "tv_inpaint");
  require_tv_dims(observed);
  validate(params);
  detail::require_anchor(mask);

  const std::size_t plane = observed.plane_size();
  Image x = observed;
  for (int c = 0; c < x.channels; ++c) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < plane; ++p) {
      if (mask.bits[p]) {
        acc += observed.data[c * plane + p];
        ++n;
      }
    }
    const double mean = acc / static_cast<double>(n);
    for (std::size_t p = 0; p < plane; ++p) {
      if (!mask.bits[p]) x.data[c * plane + p] = mean;
    }
  }

  TvTrace trace;
  trace.energy.reserve(static_cast<std::size_t>(params.iterations) + 1);
  double energy = tv_energy(x, observed, mask, params.lambda, params.epsilon);
  trace.energy.push_back(energy);

  std::vector<double> grad(x.data.size());
  Image candidate = x;
  double step = params.step;
  for (int it = 0; it < params.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    tv_accumulate(x.data, x.channels, x.height, x.width, params.epsilon, grad);
    for (int c = 0; c < x.channels; ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        if (!mask.bits[p]) continue;
        const std::size_t k = c * plane + p;
        grad[k] += 2.0 * params.lambda * (x.data[k] - observed.data[k]);
      }
    }
    double next_energy = energy;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t k = 0; k < x.data.size(); ++k) {
        candidate.data[k] = x.data[k] - step * grad[k];
      }
      next_energy =
          tv_energy(candidate, observed, mask, params.lambda, params.epsilon);
      if (next_energy <= energy) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stationary to machine precision
    x.data.swap(candidate.data);
    energy = next_energy;
    trace.energy.push_back(energy);
    step = std::min(params.step, 2.0 * step);
  }
  clamp01(x);
  trace.image = std::move(x);
  return trace;
}

inline Image tv_inpaint(const Image& observed, const Mask& mask,
                        const TvSolveParams& params) {
  return tv_inpaint_traced(observed, mask, params).image;
}

namespace detail {

// One explicit transport step: the Laplacian is carried along isophotes,
// dI/dt = grad(Lap I) . perp(grad I) / |grad I| * |grad I|_limited.
inline void ns_transport(std::vector<double>& img, std::vector<double>& next,
                         std::vector<double>& lap, int channels, int H, int W,
                         const std::vector<int>& hole, double dt) {
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int c = 0; c < channels; ++c) {
    const double* I = img.data() + c * plane;
    double* out = next.data() + c * plane;
    auto at = [&](const double* buf, int r, int x) {
      r = std::clamp(r, 0, H - 1);
      x = std::clamp(x, 0, W - 1);
      return buf[static_cast<std::size_t>(r) * W + x];
    };
    for (int r = 0; r < H; ++r) {
      for (int x = 0; x < W; ++x) {
        lap[static_cast<std::size_t>(r) * W + x] =
            at(I, r - 1, x) + at(I, r + 1, x) + at(I, r, x - 1) +
            at(I, r, x + 1) - 4.0 * at(I, r, x);
      }
    }
    for (int p : hole) {
      const int r = p / W;
      const int x = p % W;
      const double dl_r = 0.5 * (at(lap.data(), r + 1, x) - at(lap.data(), r - 1, x));
      const double dl_c = 0.5 * (at(lap.data(), r, x + 1) - at(lap.data(), r, x - 1));
      const double gr = 0.5 * (at(I, r + 1, x) - at(I, r - 1, x));
      const double gc = 0.5 * (at(I, r, x + 1) - at(I, r, x - 1));
      const double norm = std::sqrt(gr * gr + gc * gc);
      double beta = 0.0;
      if (norm > 1e-12) beta = (dl_r * (-gc) + dl_c * gr) / norm;

      const double c0 = I[p];
      const double rb = c0 - at(I, r - 1, x);
      const double rf = at(I, r + 1, x) - c0;
      const double cb = c0 - at(I, r, x - 1);
      const double cf = at(I, r, x + 1) - c0;
      double mag2;
      if (beta > 0.0) {
        mag2 = std::pow(std::min(rb, 0.0), 2) + std::pow(std::max(rf, 0.0), 2) +
               std::pow(std::min(cb, 0.0), 2) + std::pow(std::max(cf, 0.0), 2);
      } else {
        mag2 = std::pow(std::max(rb, 0.0), 2) + std::pow(std::min(rf, 0.0), 2) +
               std::pow(std::max(cb, 0.0), 2) + std::pow(std::min(cf, 0.0), 2);
      }
      out[p] = std::clamp(c0 + dt * beta * std::sqrt(mag2), 0.0, 1.0);
    }
  }
  for (int c = 0; c < channels; ++c) {
    for (int p : hole) img[c * plane + p] = next[c * plane + p];
  }
}

// Perona-Malik diffusion restricted to the hole, g(s) = 1 / (1 + (s/0.1)^2).
inline void ns_diffuse(std::vector<double>& img, std::vector<double>& next,
                       int channels, int H, int W, const std::vector<int>& hole) {
  constexpr double kStep = 0.2;
  constexpr double kContrast = 0.1;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int c = 0; c < channels; ++c) {
    const double* I = img.data() + c * plane;
    double* out = next.data() + c * plane;
    for (int p : hole) {
      const int r = p / W;
      const int x = p % W;
      const double c0 = I[p];
      double flux = 0.0;
      auto add = [&](int q) {
        const double d = I[q] - c0;
        const double s = d / kContrast;
        flux += d / (1.0 + s * s);
      };
      if (r > 0) add(p - W);
      if (r + 1 < H) add(p + W);
      if (x > 0) add(p - 1);
      if (x + 1 < W) add(p + 1);
      out[p] = std::clamp(c0 + kStep * flux, 0.0, 1.0);
    }
  }
  for (int c = 0; c < channels; ++c) {
    for (int p : hole) img[c * plane + p] = next[c * plane + p];
  }
}

}  // namespace detail

// Navier-Stokes-family inpainting: the hole is seeded by inward averaging,
// then smoothness is transported along isophotes with periodic anisotropic
// diffusion. Only occluded pixels are ever written.
inline Image ns_inpaint(const Image& observed, const Mask& mask,
                        const NsSolveParams& params) {
  require_same_size(observed, mask, "ns_inpaint");
  validate(params);
  detail::require_anchor(mask);

  Image x = fill_inward(observed, mask, 50);
  const int H = x.height;
  const int W = x.width;
  std::vector<int> hole;
  for (int p = 0; p < static_cast<int>(mask.size()); ++p) {
    if (!mask.bits[p]) hole.push_back(p);
  }
  std::vector<double> next(x.data);
  std::vector<double> lap(x.plane_size());
  for (int step = 1; step <= params.transport_steps; ++step) {
    detail::ns_transport(x.data, next, lap, x.channels, H, W, hole, params.dt);
    if (step % params.diffusion_interval == 0) {
      for (int d = 0; d < params.diffusion_steps; ++d) {
        detail::ns_diffuse(x.data, next, x.channels, H, W, hole);
      }
    }
  }
  clamp01(x);
  for (int c = 0; c < x.channels; ++c) {
    auto p = x.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask.bits[i]) p[i] = observed.data[c * x.plane_size() + i];
    }
  }
  return x;
}

}  // namespace dipaint
