#pragma once

#include <cstddef>

namespace cwnet::kernels {

// Batched dense / conv1d kernels. Each kernel exists twice: a plain serial
// reference (*_ref) and an OpenMP variant (*_omp) that parallelizes over
// disjoint output elements only, so both produce bit-identical results for
// any thread count. The unsuffixed entry points dispatch on set_parallel().
//
// Layouts (row-major):
//   dense   W[out][in], b[out], x[batch][in], y[batch][out]
//   conv1d  K[f][c][t], b[f],  x[batch][c][len], y[batch][f][out_len]
// out_len = (len - kernel) / stride + 1.

void set_parallel(bool enabled);
bool parallel_enabled();

// y = x W^T + b
void dense_forward_ref(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                       const double* b, const double* x, double* y);
void dense_forward_omp(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                       const double* b, const double* x, double* y);
void dense_forward(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                   const double* b, const double* x, double* y);

// dW[o][i] = sum_b dy[b][o] x[b][i];  db[o] = sum_b dy[b][o]
void dense_backward_params_ref(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                               const double* dy, double* dW, double* db);
void dense_backward_params_omp(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                               const double* dy, double* dW, double* db);
void dense_backward_params(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                           const double* dy, double* dW, double* db);

// dx[b][i] = sum_o W[o][i] dy[b][o]
void dense_backward_input_ref(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                              const double* dy, double* dx);
void dense_backward_input_omp(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                              const double* dy, double* dx);
void dense_backward_input(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                          const double* dy, double* dx);

void conv1d_forward_ref(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                        std::size_t kernel, std::size_t stride, const double* K, const double* b,
                        const double* x, double* y);
void conv1d_forward_omp(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                        std::size_t kernel, std::size_t stride, const double* K, const double* b,
                        const double* x, double* y);
void conv1d_forward(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                    std::size_t kernel, std::size_t stride, const double* K, const double* b,
                    const double* x, double* y);

void conv1d_backward_params_ref(std::size_t batch, std::size_t in_ch, std::size_t len,
                                std::size_t filters, std::size_t kernel, std::size_t stride,
                                const double* x, const double* dy, double* dK, double* db);
void conv1d_backward_params_omp(std::size_t batch, std::size_t in_ch, std::size_t len,
                                std::size_t filters, std::size_t kernel, std::size_t stride,
                                const double* x, const double* dy, double* dK, double* db);
void conv1d_backward_params(std::size_t batch, std::size_t in_ch, std::size_t len,
                            std::size_t filters, std::size_t kernel, std::size_t stride,
                            const double* x, const double* dy, double* dK, double* db);

void conv1d_backward_input_ref(std::size_t batch, std::size_t in_ch, std::size_t len,
                               std::size_t filters, std::size_t kernel, std::size_t stride,
                               const double* K, const double* dy, double* dx);
void conv1d_backward_input_omp(std::size_t batch, std::size_t in_ch, std::size_t len,
                               std::size_t filters, std::size_t kernel, std::size_t stride,
                               const double* K, const double* dy, double* dx);
void conv1d_backward_input(std::size_t batch, std::size_t in_ch, std::size_t len,
                           std::size_t filters, std::size_t kernel, std::size_t stride,
                           const double* K, const double* dy, double* dx);

inline std::size_t conv1d_out_len(std::size_t len, std::size_t kernel, std::size_t stride) {
    return (len >= kernel) ? (len - kernel) / stride + 1 : 0;
}

}  // namespace cwnet::kernels
