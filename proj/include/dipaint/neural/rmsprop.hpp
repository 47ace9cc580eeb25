#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dipaint/error.hpp"
#include "dipaint/neural/network.hpp"

namespace dipaint::nn {

// v <- alpha v + (1 - alpha) g^2 ;  theta <- theta - lr g / (sqrt(v) + eps)
inline void rmsprop_step(std::span<double> params, std::span<const double> grads,
                         std::span<double> state, double lr, double alpha,
                         double eps) {
  if (params.size() != grads.size() || params.size() != state.size()) {
    throw InvalidArgument("rmsprop_step: parameter, gradient and state sizes "
                          "differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state[k] = alpha * state[k] + (1.0 - alpha) * g * g;
    params[k] -= lr * g / (std::sqrt(state[k]) + eps);
  }
}

class RmsProp {
 public:
  RmsProp(const NetParams& params, double lr, double alpha, double eps)
      : lr_(lr), alpha_(alpha), eps_(eps) {
    for (const auto& t : params.tensors) state_.emplace_back(t.numel(), 0.0);
  }

  void step(NetParams& params) {
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
      auto& t = params.tensors[i];
      rmsprop_step(t.values, t.grad, state_[i], lr_, alpha_, eps_);
    }
  }

  const std::vector<std::vector<double>>& state() const { return state_; }

 private:
  double lr_;
  double alpha_;
  double eps_;
  std::vector<std::vector<double>> state_;
};

}  // namespace dipaint::nn
