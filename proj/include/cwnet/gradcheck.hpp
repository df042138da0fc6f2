#pragma once

#include <functional>

#include "cwnet/network.hpp"

namespace cwnet::nn {

// Scalar loss over the network output, together with its gradient. When
// from_logits is true the returned gradient is taken with respect to the
// terminal pre-activations (fused Softmax/CE or Sigmoid/BCE paths).
struct LossProbe {
    std::function<double(const Tensor& output)> value;
    std::function<Tensor(const Tensor& output)> grad;
    bool from_logits = false;
};

// Compares analytic parameter and input gradients against central finite
// differences of the loss, coordinate by coordinate, and returns the largest
// relative error  |a - n| / max(|a| + |n|, 1e-4). The guard floor keeps
// coordinates below the finite-difference noise floor from dominating.
double gradient_check(Network& net, const Tensor& input, std::size_t batch, const LossProbe& loss,
                      double h = 1e-5);

}  // namespace cwnet::nn
