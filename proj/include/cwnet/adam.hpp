#pragma once

#include <cstdint>
#include <vector>

#include "cwnet/network.hpp"

namespace cwnet::nn {

// Adam optimizer state for one network's flat parameter store.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_network(const Network& net) {
        AdamState s;
        s.m.assign(net.param_count(), 0.0);
        s.v.assign(net.param_count(), 0.0);
        return s;
    }
};

// Standard bias-corrected Adam update. Rejects frozen networks and
// misaligned state/gradients; increments state.step exactly once.
void adam_step(Network& net, const std::vector<double>& grads, AdamState& state, double lr);

}  // namespace cwnet::nn
