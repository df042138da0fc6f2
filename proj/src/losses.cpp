#include "cwnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cwnet/errors.hpp"

namespace cwnet::nn {

CeResult cross_entropy(const Tensor& probs, const std::vector<std::size_t>& targets) {
    if (probs.shape.size() != 2) throw UsageError("cross_entropy expects [batch, classes]");
    const std::size_t batch = probs.shape[0];
    const std::size_t classes = probs.shape[1];
    if (targets.size() != batch) throw UsageError("cross_entropy: target count mismatch");

    CeResult res;
    res.logit_grad = Tensor({batch, classes});
    double total = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        const std::size_t t = targets[r];
        if (t >= classes) throw UsageError("cross_entropy: target class out of range");
        const double* pr = probs.ptr() + r * classes;
        double* gr = res.logit_grad.ptr() + r * classes;
        total += -std::log(std::max(pr[t], kProbEps));
        for (std::size_t c = 0; c < classes; ++c) gr[c] = pr[c] * inv_batch;
        gr[t] -= inv_batch;
    }
    res.loss = total * inv_batch;
    return res;
}

CeResult cross_entropy(const Tensor& probs, std::size_t target_class) {
    Tensor row({1, probs.size()}, probs.data);
    return cross_entropy(row, std::vector<std::size_t>{target_class});
}

BceResult binary_cross_entropy(double p, int label) {
    const double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
    BceResult res;
    if (label == 1) {
        res.loss = -std::log(pc);
        res.grad = -1.0 / pc;
    } else {
        res.loss = -std::log(1.0 - pc);
        res.grad = 1.0 / (1.0 - pc);
    }
    return res;
}

BceBatchResult binary_cross_entropy_batch(const Tensor& p, const std::vector<int>& labels) {
    const std::size_t batch = p.size();
    if (labels.size() != batch) throw UsageError("bce: label count mismatch");

    BceBatchResult res;
    res.logit_grad = Tensor({batch, 1});
    double total = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        const double pc = std::clamp(p[r], kProbEps, 1.0 - kProbEps);
        total += labels[r] == 1 ? -std::log(pc) : -std::log(1.0 - pc);
        res.logit_grad[r] = (p[r] - static_cast<double>(labels[r])) * inv_batch;
    }
    res.loss = total * inv_batch;
    return res;
}

}  // namespace cwnet::nn
