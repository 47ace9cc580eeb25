#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/metrics.hpp"
#include "dipaint/neural/loss.hpp"
#include "dipaint/neural/network.hpp"
#include "dipaint/neural/rmsprop.hpp"
#include "dipaint/neural/style.hpp"
#include "dipaint/rng.hpp"

namespace dipaint::nn {

struct EarlyStop {
  int window = 200;
  // Relative improvement of the best loss required over `window` iterations.
  double min_improvement = 1e-3;
};

struct DipParams {
  double learning_rate = 0.01;
  int iterations = 3000;
  double lambda = 100.0;
  bool use_tv = false;
  double tv_epsilon = 1e-3;
  double rmsprop_alpha = 0.99;
  double rmsprop_eps = 1e-8;
  std::uint64_t rng_seed = 0xd1b;
  int log_interval = 10;
  double z_scale = 0.1;
  std::optional<EarlyStop> early_stop;
};

struct HistoryEntry {
  int iteration = 0;
  double loss = 0.0;
  std::optional<double> ssim;
};

struct TrainHistory {
  std::vector<HistoryEntry> entries;
};

using ProgressEvent = HistoryEntry;
// Invoked synchronously at every logged iteration; returning false stops
// training (the best-loss snapshot so far is still returned).
using ProgressCallback = std::function<bool(const ProgressEvent&)>;

struct DipResult {
  Image image;
  TrainHistory history;
  NetParams params;
  int iterations_run = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  bool cancelled = false;
  bool stopped_early = false;
};

inline void validate(const DipParams& p) {
  if (!(p.learning_rate > 0.0) || p.iterations < 1) {
    throw InvalidArgument("learning rate must be > 0 and iterations >= 1");
  }
  if (!(p.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (p.log_interval < 1) throw InvalidArgument("log interval must be >= 1");
  if (!(p.rmsprop_alpha >= 0.0 && p.rmsprop_alpha < 1.0)) {
    throw InvalidArgument("RMSProp alpha must lie in [0,1)");
  }
  if (p.early_stop && p.early_stop->window < 1) {
    throw InvalidArgument("early-stop window must be >= 1");
  }
}

// z ~ U[0,1]^(C x H x W), scaled by z_scale. Drawn before the weights from
// the same generator.
inline Tensor draw_noise(int channels, int height, int width, double scale,
                         SplitMix64& rng) {
  Tensor z({channels, height, width});
  for (double& v : z.values) v = scale * rng.uniform01();
  z.grad.clear();
  return z;
}

inline Image tensor_to_image(const Tensor& t) {
  Image img(t.channels(), t.height(), t.width());
  img.data = t.values;
  clamp01(img);
  return img;
}

namespace train_detail {

using LossFn = std::function<LossValue(const Tensor&)>;

inline void check_divisible(const Image& observed, const NetConfig& config) {
  const int f = 1 << config.levels;
  if (observed.height % f != 0 || observed.width % f != 0) {
    throw InvalidArgument("image " + shape_string(observed.height, observed.width) +
                          " must be divisible by 2^levels = " + std::to_string(f) +
                          "; resize it first");
  }
}

inline DipResult run(const Image& observed, const NetConfig& config,
                     const DipParams& params, const Image* reference,
                     const LossFn& loss_fn, const ProgressCallback& progress) {
  validate(params);
  check_divisible(observed, config);
  if (config.out_channels != observed.channels) {
    throw InvalidArgument("network produces " + std::to_string(config.out_channels) +
                          " channels but the image has " +
                          std::to_string(observed.channels));
  }
  if (reference && !reference->same_shape(observed)) {
    throw InvalidArgument("reference image " + shape_string(*reference) +
                          " does not match " + shape_string(observed));
  }
  const Network net(config);
  SplitMix64 rng(params.rng_seed);
  const Tensor z = draw_noise(config.z_channels, observed.height, observed.width,
                              params.z_scale, rng);
  net.check_input(z);

  DipResult result;
  result.params = init_params(config, rng);
  RmsProp optimizer(result.params, params.learning_rate, params.rmsprop_alpha,
                    params.rmsprop_eps);
  ForwardCache cache;
  std::vector<double> best_output;
  std::vector<double> best_trace;  // best loss after each iteration
  best_trace.reserve(static_cast<std::size_t>(params.iterations));
  const SsimConfig ssim_cfg =
      reference ? ssim_config_for(*reference, 1.0) : SsimConfig{};

  for (int it = 1; it <= params.iterations; ++it) {
    net.forward(result.params, z, cache);
    LossValue lv = loss_fn(cache.output);
    if (!std::isfinite(lv.loss)) {
      throw SolverError("loss became non-finite at iteration " +
                        std::to_string(it) + "; the learning rate is likely too "
                        "large");
    }
    if (lv.loss < result.best_loss) {
      result.best_loss = lv.loss;
      best_output = cache.output.values;
    }
    best_trace.push_back(result.best_loss);
    result.iterations_run = it;

    const bool log_now = it % params.log_interval == 0 || it == params.iterations;
    bool keep_going = true;
    if (log_now) {
      HistoryEntry e{it, lv.loss, std::nullopt};
      if (reference) e.ssim = ssim(*reference, tensor_to_image(cache.output), ssim_cfg);
      result.history.entries.push_back(e);
      if (progress) keep_going = progress(e);
    }
    if (!keep_going) {
      result.cancelled = true;
      break;
    }
    if (it == params.iterations) break;

    result.params.zero_grad();
    net.backward(result.params, cache, lv.grad);
    optimizer.step(result.params);

    if (params.early_stop && it > params.early_stop->window) {
      const double before = best_trace[static_cast<std::size_t>(it - 1 - params.early_stop->window)];
      const double now = best_trace.back();
      if (before - now < params.early_stop->min_improvement * std::abs(before)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  Tensor best({observed.channels, observed.height, observed.width});
  best.values = best_output;
  result.image = tensor_to_image(best);
  return result;
}

}  // namespace train_detail

// Fits the generator to the reliable pixels of `observed` from fixed noise.
// Returns the output at the lowest loss seen.
inline DipResult dip_train(const Image& observed, const Mask& mask,
                           const NetConfig& config, const DipParams& params,
                           const Image* reference = nullptr,
                           const ProgressCallback& progress = {}) {
  require_same_size(observed, mask, "dip_train");
  const DipLossSettings settings{params.use_tv, params.lambda, params.tv_epsilon};
  auto loss_fn = [&](const Tensor& out) {
    return dip_loss(out, observed, mask, settings);
  };
  return train_detail::run(observed, config, params, reference, loss_fn, progress);
}

// Masked data term weighted by alpha plus the Gram-matrix style term from a
// fixed feature network. TV settings in `params` are ignored.
inline DipResult dipst_train(const Image& observed, const Mask& mask,
                             const Image& style, const NetConfig& config,
                             const DipParams& params, const StyleParams& st,
                             const Image* reference = nullptr,
                             const ProgressCallback& progress = {}) {
  require_same_size(observed, mask, "dipst_train");
  if (!style.same_shape(observed)) {
    throw InvalidArgument("style image " + shape_string(style) +
                          " must match the observed image " +
                          shape_string(observed));
  }
  if (st.alpha < 0.0 || st.beta < 0.0) {
    throw InvalidArgument("style weights alpha and beta must be non-negative");
  }
  const StyleLoss style_loss(style, st);
  auto loss_fn = [&](const Tensor& out) {
    LossValue lv = masked_mse(out, observed, mask);
    if (st.alpha != 1.0) {
      lv.loss *= st.alpha;
      for (double& g : lv.grad) g *= st.alpha;
    }
    style_loss.accumulate(out, lv.loss, lv.grad);
    return lv;
  };
  return train_detail::run(observed, config, params, reference, loss_fn, progress);
}

}  // namespace dipaint::nn
