#include "cwnet/adam.hpp"

#include <cmath>

#include "cwnet/errors.hpp"

namespace cwnet::nn {

void adam_step(Network& net, const std::vector<double>& grads, AdamState& state, double lr) {
    if (net.frozen()) throw UsageError("adam_step on a frozen network");
    const std::size_t n = net.param_count();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw UsageError("adam_step: gradient/state size mismatch");
    }

    state.step += 1;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    double* p = net.params().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    net.bump_version();
}

}  // namespace cwnet::nn
