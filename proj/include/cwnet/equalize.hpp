#pragma once

#include <vector>

#include "cwnet/channel.hpp"

namespace cwnet::channel {

struct EqualizeResult {
    SignalBlock block;
    // |h_hat| at or below the singularity floor: the block is passed through
    // unequalized and the caller counts it in its metrics.
    bool flagged = false;
};

constexpr double kCoefficientFloor = 1e-9;
constexpr double kCondLimit = 1e8;

// Elementwise complex division y / h_hat.
EqualizeResult equalize_single(const SignalBlock& y, cplx h_hat);

// Zero-forcing combiner W = (G^H G)^-1 G^H for the receive matrix
// G[j][i] = H_eff[i][j] (n_rx x n_tx). cond_estimate approximates the
// 2-norm condition number of G as sqrt(||A||_F ||A^-1||_F) with A = G^H G;
// flagged when the estimate exceeds kCondLimit or A is numerically singular.
struct ZfMatrix {
    std::vector<cplx> W;  // n_tx x n_rx, row-major
    std::size_t n_tx = 0;
    std::size_t n_rx = 0;
    double cond_estimate = 0.0;
    bool flagged = false;
};

ZfMatrix zf_matrix(const ChannelRealization& real);

struct ZfResult {
    std::vector<SignalBlock> users;  // n_tx equalized streams
    ZfMatrix matrix;
    bool flagged = false;
};

// x_hat = W y applied per channel use. On a flagged (singular) channel the
// antenna streams are passed through unequalized (users[i] = ys[i % n_rx]).
ZfResult zf_equalize(const std::vector<SignalBlock>& ys, const ChannelRealization& real);

}  // namespace cwnet::channel
