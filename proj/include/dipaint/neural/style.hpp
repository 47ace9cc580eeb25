#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/neural/layers.hpp"
#include "dipaint/neural/tensor.hpp"
#include "dipaint/rng.hpp"

namespace dipaint::nn {

struct StyleParams {
  double alpha = 1.0;
  double beta = 1e-2;
  std::vector<int> layer_indices{0, 1, 2};
  std::uint64_t feature_seed = 0xfea7;
};

// Row-major C x C matrix.
struct Gram {
  int channels = 0;
  std::vector<double> values;
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * channels + j]; }
};

// G[i][j] = sum over pixels of F_i * F_j.
inline Gram gram_matrix(const Tensor& features) {
  const int C = features.channels();
  const std::size_t n = features.plane();
  Gram g{C, std::vector<double>(static_cast<std::size_t>(C) * C, 0.0)};
  for (int i = 0; i < C; ++i) {
    const double* fi = features.values.data() + i * n;
    for (int j = i; j < C; ++j) {
      const double* fj = features.values.data() + j * n;
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) acc += fi[p] * fj[p];
      g.values[static_cast<std::size_t>(i) * C + j] = acc;
      g.values[static_cast<std::size_t>(j) * C + i] = acc;
    }
  }
  return g;
}

// Fixed random feature extractor standing in for a pretrained network:
// three conv 3x3 + LeakyReLU stages whose weights are drawn once from a
// seed and never trained.
class FeatureNet {
 public:
  static constexpr int kStages = 3;

  FeatureNet(int in_channels, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const int widths[kStages] = {8, 16, 32};
    int in = in_channels;
    for (int s = 0; s < kStages; ++s) {
      Tensor k({widths[s], in, 3, 3});
      Tensor b({widths[s]});
      // He-style bound keeps activations from shrinking stage to stage.
      const double bound = std::sqrt(6.0 / (in * 9.0));
      for (double& v : k.values) v = rng.uniform(-bound, bound);
      kernels_.push_back(std::move(k));
      biases_.push_back(std::move(b));
      in = widths[s];
    }
  }

  struct Activations {
    std::vector<Tensor> pre;   // conv outputs
    std::vector<Tensor> post;  // after LeakyReLU, the style features
    Tensor input;
  };

  Activations forward(const Tensor& input, int stages) const {
    Activations a;
    a.input = input;
    const Tensor* cur = &a.input;
    for (int s = 0; s < stages; ++s) {
      a.pre.push_back(conv2d(*cur, kernels_[s], biases_[s], 1));
      a.post.push_back(leaky_relu(a.pre.back(), kSlope));
      cur = &a.post.back();
    }
    return a;
  }

  // Given gradients on a.post[s] (already stored in their grad buffers),
  // returns the gradient on the input.
  std::vector<double> backward(Activations& a) const {
    const int stages = static_cast<int>(a.post.size());
    a.input.grad.assign(a.input.values.size(), 0.0);
    for (int s = stages - 1; s >= 0; --s) {
      a.pre[s].grad.assign(a.pre[s].values.size(), 0.0);
      leaky_relu_backward(a.pre[s], a.post[s], kSlope);
      Tensor& below = s == 0 ? a.input : a.post[s - 1];
      Tensor k = kernels_[s];
      Tensor b = biases_[s];
      conv2d_backward(below, k, b, 1, a.pre[s]);
    }
    return a.input.grad;
  }

 private:
  static constexpr double kSlope = 0.2;
  std::vector<Tensor> kernels_;
  std::vector<Tensor> biases_;
};

// beta * sum over layers of ||G(out) - G(style)||_F^2 with each Gram
// normalised by C*H*W of its layer.
class StyleLoss {
 public:
  StyleLoss(const Image& style, const StyleParams& params)
      : params_(params), net_(style.channels, params.feature_seed) {
    if (params.layer_indices.empty()) {
      throw InvalidArgument("style loss needs at least one feature layer");
    }
    for (int l : params.layer_indices) {
      if (l < 0 || l >= FeatureNet::kStages) {
        throw InvalidArgument("style layer index " + std::to_string(l) +
                              " out of range [0, " +
                              std::to_string(FeatureNet::kStages) + ")");
      }
    }
    stages_ = *std::max_element(params.layer_indices.begin(),
                                params.layer_indices.end()) + 1;
    Tensor in({style.channels, style.height, style.width});
    in.values = style.data;
    auto acts = net_.forward(in, stages_);
    for (int l : params.layer_indices) targets_.push_back(normalized_gram(acts.post[l]));
    height_ = style.height;
    width_ = style.width;
  }

  int height() const { return height_; }
  int width() const { return width_; }

  // Adds beta * style term to `loss` and its gradient w.r.t. `output` to
  // `grad`.
  void accumulate(const Tensor& output, double& loss,
                  std::vector<double>& grad) const {
    if (params_.beta == 0.0) return;
    auto acts = net_.forward(output, stages_);
    for (auto& t : acts.post) t.grad.assign(t.values.size(), 0.0);
    double term = 0.0;
    for (std::size_t k = 0; k < params_.layer_indices.size(); ++k) {
      Tensor& f = acts.post[params_.layer_indices[k]];
      const Gram g = normalized_gram(f);
      const Gram& s = targets_[k];
      const int C = g.channels;
      const std::size_t n = f.plane();
      const double norm = static_cast<double>(C) * static_cast<double>(n);
      std::vector<double> diff(g.values.size());
      for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = g.values[i] - s.values[i];
        term += diff[i] * diff[i];
      }
      // d/dF_kp of sum (G - S)^2 = (4 / N) sum_j (G - S)_kj F_jp
      for (int a = 0; a < C; ++a) {
        double* ga = f.grad.data() + a * n;
        for (int b = 0; b < C; ++b) {
          const double w = params_.beta * 4.0 * diff[static_cast<std::size_t>(a) * C + b] / norm;
          const double* fb = f.values.data() + b * n;
          for (std::size_t p = 0; p < n; ++p) ga[p] += w * fb[p];
        }
      }
    }
    loss += params_.beta * term;
    const auto gin = net_.backward(acts);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gin[i];
  }

 private:
  static Gram normalized_gram(const Tensor& f) {
    Gram g = gram_matrix(f);
    const double norm = static_cast<double>(f.channels()) * static_cast<double>(f.plane());
    for (double& v : g.values) v /= norm;
    return g;
  }

  StyleParams params_;
  FeatureNet net_;
  int stages_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<Gram> targets_;
};

}  // namespace dipaint::nn
