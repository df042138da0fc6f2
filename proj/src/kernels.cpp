#include "cwnet/kernels.hpp"

#include <atomic>

namespace cwnet::kernels {

namespace {
std::atomic<bool> g_parallel{true};

bool use_omp() {
#ifdef _OPENMP
    return g_parallel.load(std::memory_order_relaxed);
#else
    return false;
#endif
}
}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }
bool parallel_enabled() { return use_omp(); }

void dense_forward(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                   const double* b, const double* x, double* y) {
    use_omp() ? dense_forward_omp(batch, in, out, W, b, x, y)
              : dense_forward_ref(batch, in, out, W, b, x, y);
}

void dense_backward_params(std::size_t batch, std::size_t in, std::size_t out, const double* x,
                           const double* dy, double* dW, double* db) {
    use_omp() ? dense_backward_params_omp(batch, in, out, x, dy, dW, db)
              : dense_backward_params_ref(batch, in, out, x, dy, dW, db);
}

void dense_backward_input(std::size_t batch, std::size_t in, std::size_t out, const double* W,
                          const double* dy, double* dx) {
    use_omp() ? dense_backward_input_omp(batch, in, out, W, dy, dx)
              : dense_backward_input_ref(batch, in, out, W, dy, dx);
}

void conv1d_forward(std::size_t batch, std::size_t in_ch, std::size_t len, std::size_t filters,
                    std::size_t kernel, std::size_t stride, const double* K, const double* b,
                    const double* x, double* y) {
    use_omp() ? conv1d_forward_omp(batch, in_ch, len, filters, kernel, stride, K, b, x, y)
              : conv1d_forward_ref(batch, in_ch, len, filters, kernel, stride, K, b, x, y);
}

void conv1d_backward_params(std::size_t batch, std::size_t in_ch, std::size_t len,
                            std::size_t filters, std::size_t kernel, std::size_t stride,
                            const double* x, const double* dy, double* dK, double* db) {
    use_omp() ? conv1d_backward_params_omp(batch, in_ch, len, filters, kernel, stride, x, dy, dK, db)
              : conv1d_backward_params_ref(batch, in_ch, len, filters, kernel, stride, x, dy, dK, db);
}

void conv1d_backward_input(std::size_t batch, std::size_t in_ch, std::size_t len,
                           std::size_t filters, std::size_t kernel, std::size_t stride,
                           const double* K, const double* dy, double* dx) {
    use_omp() ? conv1d_backward_input_omp(batch, in_ch, len, filters, kernel, stride, K, dy, dx)
              : conv1d_backward_input_ref(batch, in_ch, len, filters, kernel, stride, K, dy, dx);
}

}  // namespace cwnet::kernels
