#include "cwnet/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// OpenMP kernel variants. Every parallel loop writes disjoint output
// elements and keeps the inner accumulation order identical to the serial
// reference, so results are bit-identical for any thread count.

namespace cwnet::kernels {

void dense_forward_omp(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                       const double* b, const double* x, double* y) {
    const long long n = static_cast<long long>(batch * out);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t bi = static_cast<std::size_t>(idx) / out;
        const std::size_t o = static_cast<std::size_t>(idx) % out;
        const double* xr = x + bi * in;
        const double* wr = W + o * in;
        double acc = b[o];
        for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
        y[bi * out + o] = acc;
    }
}

void dense_backward_params_omp(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                               const double* dy, double* dW, double* db) {
    const long long n = static_cast<long long>(out * in);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t o = static_cast<std::size_t>(idx) / in;
        const std::size_t i = static_cast<std::size_t>(idx) % in;
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) acc += dy[bi * out + o] * x[bi * in + i];
        dW[o * in + i] = acc;
    }
#pragma omp parallel for schedule(static)
    for (long long o = 0; o < static_cast<long long>(out); ++o) {
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) acc += dy[bi * out + o];
        db[o] = acc;
    }
}

void dense_backward_input_omp(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                              const double* dy, double* dx) {
    const long long n = static_cast<long long>(batch * in);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t bi = static_cast<std::size_t>(idx) / in;
        const std::size_t i = static_cast<std::size_t>(idx) % in;
        const double* dyr = dy + bi * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) acc += W[o * in + i] * dyr[o];
        dx[bi * in + i] = acc;
    }
}

void conv1d_forward_omp(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                        std::size_t kernel, std::size_t stride, const double* K, const double* b,
                        const double* x, double* y) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    const long long n = static_cast<long long>(batch * filters);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t bi = static_cast<std::size_t>(idx) / filters;
        const std::size_t f = static_cast<std::size_t>(idx) % filters;
        const double* xb = x + bi * in_ch * len;
        double* yf = y + (bi * filters + f) * out_len;
        for (std::size_t p = 0; p < out_len; ++p) {
            double acc = b[f];
            for (std::size_t c = 0; c < in_ch; ++c) {
                const double* xc = xb + c * len + p * stride;
                const double* kc = K + (f * in_ch + c) * kernel;
                for (std::size_t t = 0; t < kernel; ++t) acc += kc[t] * xc[t];
            }
            yf[p] = acc;
        }
    }
}

void conv1d_backward_params_omp(std::size_t batch, std::size_t in_ch, std::size_t len,
                                std::size_t filters, std::size_t kernel, std::size_t stride,
                                const double* x, const double* dy, double* dK, double* db) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    const long long n = static_cast<long long>(filters * in_ch * kernel);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t f = static_cast<std::size_t>(idx) / (in_ch * kernel);
        const std::size_t c = (static_cast<std::size_t>(idx) / kernel) % in_ch;
        const std::size_t t = static_cast<std::size_t>(idx) % kernel;
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) {
            const double* xc = x + (bi * in_ch + c) * len;
            const double* dyf = dy + (bi * filters + f) * out_len;
            for (std::size_t p = 0; p < out_len; ++p) acc += dyf[p] * xc[p * stride + t];
        }
        dK[(f * in_ch + c) * kernel + t] = acc;
    }
#pragma omp parallel for schedule(static)
    for (long long f = 0; f < static_cast<long long>(filters); ++f) {
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) {
            const double* dyf = dy + (bi * filters + f) * out_len;
            for (std::size_t p = 0; p < out_len; ++p) acc += dyf[p];
        }
        db[f] = acc;
    }
}

void conv1d_backward_input_omp(std::size_t batch, std::size_t in_ch, std::size_t len,
                               std::size_t filters, std::size_t kernel, std::size_t stride,
                               const double* K, const double* dy, double* dx) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    const long long n = static_cast<long long>(batch * in_ch);
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < n; ++idx) {
        const std::size_t bi = static_cast<std::size_t>(idx) / in_ch;
        const std::size_t c = static_cast<std::size_t>(idx) % in_ch;
        double* dxc = dx + (bi * in_ch + c) * len;
        for (std::size_t j = 0; j < len; ++j) {
            double acc = 0.0;
            for (std::size_t f = 0; f < filters; ++f) {
                const double* dyf = dy + (bi * filters + f) * out_len;
                const double* kc = K + (f * in_ch + c) * kernel;
                for (std::size_t t = 0; t <= j && t < kernel; ++t) {
                    const std::size_t off = j - t;
                    if (off % stride != 0) continue;
                    const std::size_t p = off / stride;
                    if (p < out_len) acc += kc[t] * dyf[p];
                }
            }
            dxc[j] = acc;
        }
    }
}

}  // namespace cwnet::kernels
