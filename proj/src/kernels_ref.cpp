#include "cwnet/kernels.hpp"

// Serial reference kernels. Kept deliberately plain: these define the exact
// summation order the OpenMP variants must reproduce.

namespace cwnet::kernels {

void dense_forward_ref(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                       const double* b, const double* x, double* y) {
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* xr = x + bi * in;
        double* yr = y + bi * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wr = W + o * in;
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
}

void dense_backward_params_ref(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                               const double* dy, double* dW, double* db) {
    for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (std::size_t bi = 0; bi < batch; ++bi) acc += dy[bi * out + o] * x[bi * in + i];
            dW[o * in + i] = acc;
        }
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) acc += dy[bi * out + o];
        db[o] = acc;
    }
}

void dense_backward_input_ref(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                              const double* dy, double* dx) {
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* dyr = dy + bi * out;
        double* dxr = dx + bi * in;
        for (std::size_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < out; ++o) acc += W[o * in + i] * dyr[o];
            dxr[i] = acc;
        }
    }
}

void conv1d_forward_ref(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                        std::size_t kernel, std::size_t stride, const double* K, const double* b,
                        const double* x, double* y) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* xb = x + bi * in_ch * len;
        double* yb = y + bi * filters * out_len;
        for (std::size_t f = 0; f < filters; ++f) {
            for (std::size_t p = 0; p < out_len; ++p) {
                double acc = b[f];
                for (std::size_t c = 0; c < in_ch; ++c) {
                    const double* xc = xb + c * len + p * stride;
                    const double* kc = K + (f * in_ch + c) * kernel;
                    for (std::size_t t = 0; t < kernel; ++t) acc += kc[t] * xc[t];
                }
                yb[f * out_len + p] = acc;
            }
        }
    }
}

void conv1d_backward_params_ref(std::size_t batch, std::size_t in_ch, std::size_t len,
                                std::size_t filters, std::size_t kernel, std::size_t stride,
                                const double* x, const double* dy, double* dK, double* db) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    for (std::size_t f = 0; f < filters; ++f) {
        for (std::size_t c = 0; c < in_ch; ++c) {
            for (std::size_t t = 0; t < kernel; ++t) {
                double acc = 0.0;
                for (std::size_t bi = 0; bi < batch; ++bi) {
                    const double* xc = x + (bi * in_ch + c) * len;
                    const double* dyf = dy + (bi * filters + f) * out_len;
                    for (std::size_t p = 0; p < out_len; ++p) acc += dyf[p] * xc[p * stride + t];
                }
                dK[(f * in_ch + c) * kernel + t] = acc;
            }
        }
        double acc = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) {
            const double* dyf = dy + (bi * filters + f) * out_len;
            for (std::size_t p = 0; p < out_len; ++p) acc += dyf[p];
        }
        db[f] = acc;
    }
}

void conv1d_backward_input_ref(std::size_t batch, std::size_t in_ch, std::size_t len,
                               std::size_t filters, std::size_t kernel, std::size_t stride,
                               const double* K, const double* dy, double* dx) {
    const std::size_t out_len = conv1d_out_len(len, kernel, stride);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t c = 0; c < in_ch; ++c) {
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
}

}  // namespace cwnet::kernels
