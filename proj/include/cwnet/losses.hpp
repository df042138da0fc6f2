#pragma once

#include <cstddef>
#include <vector>

#include "cwnet/tensor.hpp"

namespace cwnet::nn {

// Probabilities below this are clamped before taking logs.
constexpr double kProbEps = 1e-12;

struct CeResult {
    double loss = 0.0;    // mean over batch rows
    Tensor logit_grad;    // (probs - onehot) / batch, per row
};

// Cross entropy against integer class targets. probs come from a Softmax
// terminal; logit_grad is the fused gradient with respect to the terminal
// pre-activations, feed it to Network::backward_from_logits.
CeResult cross_entropy(const Tensor& probs, const std::vector<std::size_t>& targets);

// Single-sample convenience overload.
CeResult cross_entropy(const Tensor& probs, std::size_t target_class);

struct BceResult {
    double loss = 0.0;
    double grad = 0.0;  // dLoss/dp
};

// Binary cross entropy for one Sigmoid output p against label in {0,1}.
BceResult binary_cross_entropy(double p, int label);

struct BceBatchResult {
    double loss = 0.0;   // mean over rows
    Tensor logit_grad;   // (p - label) / batch, fused through the Sigmoid
};

// Batched BCE over a [batch, 1] Sigmoid output tensor.
BceBatchResult binary_cross_entropy_batch(const Tensor& p, const std::vector<int>& labels);

}  // namespace cwnet::nn
