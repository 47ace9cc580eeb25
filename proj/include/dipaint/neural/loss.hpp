#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/neural/tensor.hpp"
#include "dipaint/variational.hpp"

namespace dipaint::nn {

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d output, laid out like the output
};

inline void check_loss_shapes(const Tensor& output, const Image& target,
                              const Mask& mask) {
  if (output.shape.size() != 3 || output.channels() != target.channels ||
      output.height() != target.height || output.width() != target.width) {
    throw InvalidArgument("network output " + shape_string(output) +
                          " does not match target " + dipaint::shape_string(target));
  }
  require_same_size(target, mask, "masked loss");
}

// ||m (output - target)||^2 summed over every channel and pixel, the mask
// broadcast across channels.
inline LossValue masked_mse(const Tensor& output, const Image& target,
                            const Mask& mask) {
  check_loss_shapes(output, target, mask);
  LossValue r;
  r.grad.assign(output.values.size(), 0.0);
  const std::size_t plane = target.plane_size();
  for (int c = 0; c < target.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (!mask.bits[p]) continue;
      const std::size_t k = c * plane + p;
      const double d = output.values[k] - target.data[k];
      r.loss += d * d;
      r.grad[k] = 2.0 * d;
    }
  }
  return r;
}

struct DipLossSettings {
  bool use_tv = false;
  double lambda = 1.0;
  double tv_epsilon = 1e-3;
};

// Without TV this is exactly masked_mse; with TV it is
// lambda * masked_mse + TV_eps(output).
inline LossValue dip_loss(const Tensor& output, const Image& target,
                          const Mask& mask, const DipLossSettings& s) {
  LossValue r = masked_mse(output, target, mask);
  if (!s.use_tv) return r;
  r.loss *= s.lambda;
  for (double& g : r.grad) g *= s.lambda;
  r.loss += tv_accumulate(output.values, output.channels(), output.height(),
                          output.width(), s.tv_epsilon, r.grad);
  return r;
}

}  // namespace dipaint::nn
