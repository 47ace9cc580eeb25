#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/neural/layers.hpp"
#include "dipaint/neural/tensor.hpp"
#include "dipaint/rng.hpp"

namespace dipaint::nn {

// Encoder/decoder ("hourglass") generator. Level l of the encoder halves
// the resolution; the matching decoder level doubles it back and may
// concatenate a skip branch computed from the encoder input at that level.
struct NetConfig {
  int levels = 4;
  std::vector<int> channels_per_level{16, 32, 64, 64};
  std::vector<int> skip_channels_per_level{4, 4, 4, 4};
  double leaky_slope = 0.2;
  bool use_sigmoid_output = true;
  int z_channels = 8;
  int out_channels = 3;

  bool has_skips() const {
    for (int s : skip_channels_per_level) {
      if (s > 0) return true;
    }
    return false;
  }
  bool operator==(const NetConfig&) const = default;
};

inline void validate(const NetConfig& c) {
  if (c.levels < 1) throw InvalidArgument("network needs at least one level");
  if (static_cast<int>(c.channels_per_level.size()) != c.levels ||
      static_cast<int>(c.skip_channels_per_level.size()) != c.levels) {
    throw InvalidArgument("channel lists must have one entry per level (" +
                          std::to_string(c.levels) + ")");
  }
  for (int ch : c.channels_per_level) {
    if (ch < 1) throw InvalidArgument("channel counts must be >= 1");
  }
  for (int s : c.skip_channels_per_level) {
    if (s < 0) throw InvalidArgument("skip channel counts must be >= 0");
  }
  if (!(c.leaky_slope > 0.0 && c.leaky_slope < 1.0)) {
    throw InvalidArgument("LeakyReLU slope must lie in (0,1)");
  }
  if (c.z_channels < 1 || c.out_channels < 1) {
    throw InvalidArgument("z and output channel counts must be >= 1");
  }
}

// Indices of each parameter tensor inside NetParams::tensors. Bias of a
// kernel at index k always sits at k + 1.
struct ParamLayout {
  std::vector<int> down;   // stride-2 conv per encoder level
  std::vector<int> enc;    // second encoder conv
  std::vector<int> skip;   // -1 when the level has no skip branch
  std::vector<int> dec1;   // first decoder conv
  std::vector<int> dec2;   // second decoder conv
  int final = -1;
};

struct NetParams {
  std::vector<Tensor> tensors;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }
  void zero_grad() {
    for (auto& t : tensors) t.zero_grad();
  }
};

inline int encoder_input_channels(const NetConfig& c, int level) {
  return level == 0 ? c.z_channels : c.channels_per_level[level - 1];
}

inline int decoder_input_channels(const NetConfig& c, int level) {
  return level == c.levels - 1 ? c.channels_per_level[c.levels - 1]
                               : c.channels_per_level[level + 1];
}

// Kernel shapes in storage order; each kernel is followed by its bias.
inline std::vector<std::vector<int>> param_shapes(const NetConfig& c,
                                                  ParamLayout* layout = nullptr) {
  validate(c);
  std::vector<std::vector<int>> shapes;
  ParamLayout lay;
  auto conv = [&](int out, int in) {
    const int idx = static_cast<int>(shapes.size());
    shapes.push_back({out, in, 3, 3});
    shapes.push_back({out});
    return idx;
  };
  for (int l = 0; l < c.levels; ++l) {
    const int ch = c.channels_per_level[l];
    lay.down.push_back(conv(ch, encoder_input_channels(c, l)));
    lay.enc.push_back(conv(ch, ch));
  }
  for (int l = 0; l < c.levels; ++l) {
    const int s = c.skip_channels_per_level[l];
    lay.skip.push_back(s > 0 ? conv(s, encoder_input_channels(c, l)) : -1);
  }
  for (int l = 0; l < c.levels; ++l) {
    const int ch = c.channels_per_level[l];
    lay.dec1.push_back(
        conv(ch, decoder_input_channels(c, l) + c.skip_channels_per_level[l]));
    lay.dec2.push_back(conv(ch, ch));
  }
  lay.final = conv(c.out_channels, c.channels_per_level[0]);
  if (layout) *layout = lay;
  return shapes;
}

inline std::size_t parameter_count(const NetConfig& c) {
  std::size_t n = 0;
  for (const auto& s : param_shapes(c)) {
    std::size_t k = 1;
    for (int d : s) k *= static_cast<std::size_t>(d);
    n += k;
  }
  return n;
}

inline NetParams zero_params(const NetConfig& c) {
  NetParams p;
  for (auto& s : param_shapes(c)) p.tensors.emplace_back(std::move(s));
  return p;
}

// Kernels uniform in [-b, b] with b = sqrt(1 / (fan_in * 9)); biases zero.
inline NetParams init_params(const NetConfig& c, SplitMix64& rng) {
  NetParams p = zero_params(c);
  for (auto& t : p.tensors) {
    if (t.shape.size() != 4) continue;
    const double bound = std::sqrt(1.0 / (t.dim(1) * 9.0));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
  }
  return p;
}

// All intermediate activations of one forward pass.
struct ForwardCache {
  std::vector<Tensor> enc_in;    // encoder inputs; enc_in[0] is z
  std::vector<Tensor> down;      // stride-2 conv output
  std::vector<Tensor> enc_pre;   // second conv output
  std::vector<Tensor> skip_pre;  // skip conv output
  std::vector<Tensor> skip;      // after LeakyReLU
  std::vector<Tensor> up;        // upsampled decoder input
  std::vector<Tensor> cat;       // up (+ skip)
  std::vector<Tensor> dec_a;     // first decoder conv
  std::vector<Tensor> dec_pre;   // second decoder conv
  std::vector<Tensor> dec_out;   // after LeakyReLU
  Tensor logits;
  Tensor output;
};

class Network {
 public:
  explicit Network(NetConfig config) : config_(std::move(config)) {
    param_shapes(config_, &layout_);
  }

  const NetConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }

  void check_input(const Tensor& z) const {
    if (z.shape.size() != 3 || z.channels() != config_.z_channels) {
      throw InvalidArgument("network input must have " +
                            std::to_string(config_.z_channels) + " channels");
    }
    const int f = 1 << config_.levels;
    if (z.height() % f != 0 || z.width() % f != 0) {
      throw InvalidArgument("input " + std::to_string(z.height()) + "x" +
                            std::to_string(z.width()) +
                            " is not divisible by 2^levels = " +
                            std::to_string(f));
    }
    if (z.height() / f < 2 || z.width() / f < 2) {
      throw InvalidArgument("input " + std::to_string(z.height()) + "x" +
                            std::to_string(z.width()) +
                            " is too small for " +
                            std::to_string(config_.levels) +
                            " levels (deepest level must be at least 2x2)");
    }
  }

  // Runs the generator; `cache.output` holds the C x H x W result.
  void forward(const NetParams& p, const Tensor& z, ForwardCache& cache) const {
    check_input(z);
    const int L = config_.levels;
    const double slope = config_.leaky_slope;
    const auto& T = p.tensors;
    cache.enc_in.assign(static_cast<std::size_t>(L) + 1, Tensor{});
    cache.down.assign(L, Tensor{});
    cache.enc_pre.assign(L, Tensor{});
    cache.skip_pre.assign(L, Tensor{});
    cache.skip.assign(L, Tensor{});
    cache.up.assign(L, Tensor{});
    cache.cat.assign(L, Tensor{});
    cache.dec_a.assign(L, Tensor{});
    cache.dec_pre.assign(L, Tensor{});
    cache.dec_out.assign(L, Tensor{});

    cache.enc_in[0] = z;
    for (int l = 0; l < L; ++l) {
      const int d = layout_.down[l];
      const int e = layout_.enc[l];
      cache.down[l] = conv2d(cache.enc_in[l], T[d], T[d + 1], 2);
      cache.enc_pre[l] = conv2d(cache.down[l], T[e], T[e + 1], 1);
      cache.enc_in[l + 1] = leaky_relu(cache.enc_pre[l], slope);
      if (layout_.skip[l] >= 0) {
        const int s = layout_.skip[l];
        cache.skip_pre[l] = conv2d(cache.enc_in[l], T[s], T[s + 1], 1);
        cache.skip[l] = leaky_relu(cache.skip_pre[l], slope);
      }
    }
    for (int l = L - 1; l >= 0; --l) {
      const Tensor& below = l == L - 1 ? cache.enc_in[L] : cache.dec_out[l + 1];
      cache.up[l] = upsample_bilinear2x(below);
      cache.cat[l] = layout_.skip[l] >= 0 ? concat_channels(cache.up[l], cache.skip[l])
                                          : cache.up[l];
      const int a = layout_.dec1[l];
      const int b = layout_.dec2[l];
      cache.dec_a[l] = conv2d(cache.cat[l], T[a], T[a + 1], 1);
      cache.dec_pre[l] = conv2d(cache.dec_a[l], T[b], T[b + 1], 1);
      cache.dec_out[l] = leaky_relu(cache.dec_pre[l], slope);
    }
    const int f = layout_.final;
    cache.logits = conv2d(cache.dec_out[0], T[f], T[f + 1], 1);
    cache.output = config_.use_sigmoid_output ? sigmoid(cache.logits) : cache.logits;
  }

  // Back-propagates `output_grad` (dLoss/dOutput) and accumulates parameter
  // gradients into p. The cache's gradient buffers are overwritten.
  void backward(NetParams& p, ForwardCache& cache,
                const std::vector<double>& output_grad) const {
    const int L = config_.levels;
    const double slope = config_.leaky_slope;
    auto& T = p.tensors;
    auto clear = [](Tensor& t) { t.grad.assign(t.values.size(), 0.0); };

    if (config_.use_sigmoid_output) {
      cache.output.grad = output_grad;
      clear(cache.logits);
      sigmoid_backward(cache.logits, cache.output);
    } else {
      cache.logits.grad = output_grad;
    }
    for (int l = 0; l < L; ++l) clear(cache.dec_out[l]);
    for (int l = 1; l <= L; ++l) clear(cache.enc_in[l]);
    cache.enc_in[0].grad.clear();  // z is held fixed

    const int f = layout_.final;
    conv2d_backward(cache.dec_out[0], T[f], T[f + 1], 1, cache.logits);

    // Decoder in reverse execution order: level l feeds level l - 1, so
    // dec_out[l] is complete once level l - 1 has been processed.
    for (int l = 0; l < L; ++l) {
      clear(cache.dec_pre[l]);
      leaky_relu_backward(cache.dec_pre[l], cache.dec_out[l], slope);
      const int b = layout_.dec2[l];
      clear(cache.dec_a[l]);
      conv2d_backward(cache.dec_a[l], T[b], T[b + 1], 1, cache.dec_pre[l]);
      const int a = layout_.dec1[l];
      clear(cache.cat[l]);
      conv2d_backward(cache.cat[l], T[a], T[a + 1], 1, cache.dec_a[l]);
      const bool has_skip = layout_.skip[l] >= 0;
      if (has_skip) {
        clear(cache.up[l]);
        clear(cache.skip[l]);
        concat_channels_backward(cache.up[l], cache.skip[l], cache.cat[l]);
      }
      Tensor& below = l == L - 1 ? cache.enc_in[L] : cache.dec_out[l + 1];
      upsample_bilinear2x_backward(below, has_skip ? cache.up[l] : cache.cat[l]);
    }

    // Encoder top-down; enc_in[l] collects both the stride-2 conv path and
    // the skip branch of level l.
    for (int l = L - 1; l >= 0; --l) {
      clear(cache.enc_pre[l]);
      leaky_relu_backward(cache.enc_pre[l], cache.enc_in[l + 1], slope);
      const int e = layout_.enc[l];
      clear(cache.down[l]);
      conv2d_backward(cache.down[l], T[e], T[e + 1], 1, cache.enc_pre[l]);
      const int d = layout_.down[l];
      conv2d_backward(cache.enc_in[l], T[d], T[d + 1], 2, cache.down[l]);
      if (layout_.skip[l] >= 0) {
        const int s = layout_.skip[l];
        clear(cache.skip_pre[l]);
        leaky_relu_backward(cache.skip_pre[l], cache.skip[l], slope);
        conv2d_backward(cache.enc_in[l], T[s], T[s + 1], 1, cache.skip_pre[l]);
      }
    }
  }

 private:
  NetConfig config_;
  ParamLayout layout_;
};

}  // namespace dipaint::nn
