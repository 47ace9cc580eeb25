#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dipaint/error.hpp"

namespace dipaint::nn {

// Dense row-major array with a gradient buffer of the same shape.
// Activations are C x H x W, convolution kernels out x in x 3 x 3.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, double fill = 0.0)
      : shape(std::move(dims)) {
    for (int d : shape) {
      if (d <= 0) throw InvalidArgument("tensor dimensions must be positive");
    }
    values.assign(numel(), fill);
    grad.assign(values.size(), 0.0);
  }

  std::size_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * b; });
  }
  int dim(std::size_t i) const { return shape.at(i); }

  // Activation accessors.
  int channels() const { return shape.at(0); }
  int height() const { return shape.at(1); }
  int width() const { return shape.at(2); }
  std::size_t plane() const {
    return static_cast<std::size_t>(height()) * width();
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using dipaint::shape_string;

inline std::string shape_string(const Tensor& t) {
  std::string s;
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s;
}

}  // namespace dipaint::nn
