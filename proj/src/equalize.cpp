#include "cwnet/equalize.hpp"

#include <cmath>
#include <limits>

#include "cwnet/errors.hpp"

namespace cwnet::channel {

EqualizeResult equalize_single(const SignalBlock& y, cplx h_hat) {
    EqualizeResult res;
    if (std::abs(h_hat) <= kCoefficientFloor) {
        res.block = y;
        res.flagged = true;
        return res;
    }
    res.block = SignalBlock(y.n());
    for (std::size_t i = 0; i < y.n(); ++i) res.block[i] = y[i] / h_hat;
    return res;
}

namespace {

// Gauss-Jordan inverse of a small complex matrix (n <= a few). Returns false
// when a pivot collapses.
bool invert_small(std::vector<cplx>& a, std::size_t n) {
    std::vector<cplx> inv(n * n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = cplx(1.0, 0.0);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-300) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[pivot * n + c], a[col * n + c]);
                std::swap(inv[pivot * n + c], inv[col * n + c]);
            }
        }
        const cplx d = a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cplx f = a[r * n + col];
            if (f == cplx(0.0, 0.0)) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
                inv[r * n + c] -= f * inv[col * n + c];
            }
        }
    }
    a = std::move(inv);
    return true;
}

double frobenius(const std::vector<cplx>& m) {
    double acc = 0.0;
    for (const cplx& v : m) acc += std::norm(v);
    return std::sqrt(acc);
}

}  // namespace

ZfMatrix zf_matrix(const ChannelRealization& real) {
    const std::size_t n_tx = real.n_tx;
    const std::size_t n_rx = real.n_rx;
    if (n_rx < n_tx) throw ConfigError("zf_matrix: needs n_rx >= n_tx for full column rank");

    ZfMatrix out;
    out.n_tx = n_tx;
    out.n_rx = n_rx;

    // G[j][i] = H_eff[i][j], receive-antenna major.
    std::vector<cplx> g(n_rx * n_tx);
    for (std::size_t j = 0; j < n_rx; ++j)
        for (std::size_t i = 0; i < n_tx; ++i) g[j * n_tx + i] = real.h_eff(i, j);

    // A = G^H G (n_tx x n_tx, Hermitian).
    std::vector<cplx> a(n_tx * n_tx, cplx(0.0, 0.0));
    for (std::size_t r = 0; r < n_tx; ++r)
        for (std::size_t c = 0; c < n_tx; ++c) {
            cplx acc(0.0, 0.0);
            for (std::size_t j = 0; j < n_rx; ++j)
                acc += std::conj(g[j * n_tx + r]) * g[j * n_tx + c];
            a[r * n_tx + c] = acc;
        }

    const double norm_a = frobenius(a);
    std::vector<cplx> ainv = a;
    if (!invert_small(ainv, n_tx)) {
        out.flagged = true;
        out.cond_estimate = std::numeric_limits<double>::infinity();
        return out;
    }
    out.cond_estimate = std::sqrt(norm_a * frobenius(ainv));
    if (!(out.cond_estimate <= kCondLimit)) {
        out.flagged = true;
        return out;
    }

    // W = A^-1 G^H (n_tx x n_rx).
    out.W.assign(n_tx * n_rx, cplx(0.0, 0.0));
    for (std::size_t u = 0; u < n_tx; ++u)
        for (std::size_t j = 0; j < n_rx; ++j) {
            cplx acc(0.0, 0.0);
            for (std::size_t r = 0; r < n_tx; ++r)
                acc += ainv[u * n_tx + r] * std::conj(g[j * n_tx + r]);
            out.W[u * n_rx + j] = acc;
        }
    return out;
}

ZfResult zf_equalize(const std::vector<SignalBlock>& ys, const ChannelRealization& real) {
    if (ys.size() != real.n_rx) throw ConfigError("zf_equalize: antenna count mismatch");
    const std::size_t n = ys.empty() ? 0 : ys[0].n();

    ZfResult res;
    res.matrix = zf_matrix(real);
    res.flagged = res.matrix.flagged;

    res.users.reserve(real.n_tx);
    if (res.flagged) {
        for (std::size_t u = 0; u < real.n_tx; ++u) res.users.push_back(ys[u % real.n_rx]);
        return res;
    }
    for (std::size_t u = 0; u < real.n_tx; ++u) {
        SignalBlock xu(n);
        for (std::size_t j = 0; j < real.n_rx; ++j) {
            const cplx w = res.matrix.W[u * real.n_rx + j];
            for (std::size_t k = 0; k < n; ++k) xu[k] += w * ys[j][k];
        }
        res.users.push_back(std::move(xu));
    }
    return res;
}

}  // namespace cwnet::channel
