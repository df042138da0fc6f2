// Timing comparison of the serial reference kernels against the OpenMP
// variants, over the batched shapes the training loops actually use.

#include <chrono>
#include <cstdio>
#include <vector>

#include "cwnet/kernels.hpp"
#include "cwnet/rng.hpp"

using namespace cwnet;

namespace {

double now_sec() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(F&& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_sec();
        fn();
        best = std::min(best, now_sec() - t0);
    }
    return best;
}

void fill(std::vector<double>& v, Rng& rng) {
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
}

}  // namespace

int main() {
    Rng rng(7);
    std::printf("%-34s %12s %12s %8s\n", "kernel", "serial_ms", "omp_ms", "speedup");

    const std::vector<std::array<std::size_t, 3>> dense_shapes = {
        {1024, 16, 16}, {1024, 32, 64}, {4096, 64, 64}, {1024, 256, 256}};
    for (const auto& [batch, in, out] : dense_shapes) {
        std::vector<double> W(out * in), b(out), x(batch * in), y(batch * out);
        std::vector<double> dW(out * in), db(out), dx(batch * in), dy(batch * out);
        fill(W, rng);
        fill(b, rng);
        fill(x, rng);
        fill(dy, rng);

        char name[64];
        std::snprintf(name, sizeof(name), "dense fwd %zux%zu->%zu", batch, in, out);
        const double ts = time_best_of(
            [&] { kernels::dense_forward_ref(batch, in, out, W.data(), b.data(), x.data(), y.data()); }, 5);
        const double tp = time_best_of(
            [&] { kernels::dense_forward_omp(batch, in, out, W.data(), b.data(), x.data(), y.data()); }, 5);
        std::printf("%-34s %12.3f %12.3f %8.2f\n", name, ts * 1e3, tp * 1e3, ts / tp);

        std::snprintf(name, sizeof(name), "dense bwd-params %zux%zu->%zu", batch, in, out);
        const double ts2 = time_best_of(
            [&] { kernels::dense_backward_params_ref(batch, in, out, x.data(), dy.data(), dW.data(), db.data()); }, 5);
        const double tp2 = time_best_of(
            [&] { kernels::dense_backward_params_omp(batch, in, out, x.data(), dy.data(), dW.data(), db.data()); }, 5);
        std::printf("%-34s %12.3f %12.3f %8.2f\n", name, ts2 * 1e3, tp2 * 1e3, ts2 / tp2);

        std::snprintf(name, sizeof(name), "dense bwd-input %zux%zu->%zu", batch, in, out);
        const double ts3 = time_best_of(
            [&] { kernels::dense_backward_input_ref(batch, in, out, W.data(), dy.data(), dx.data()); }, 5);
        const double tp3 = time_best_of(
            [&] { kernels::dense_backward_input_omp(batch, in, out, W.data(), dy.data(), dx.data()); }, 5);
        std::printf("%-34s %12.3f %12.3f %8.2f\n", name, ts3 * 1e3, tp3 * 1e3, ts3 / tp3);
    }

    // Conv shapes from the decoder/detector stacks.
    const std::vector<std::array<std::size_t, 6>> conv_shapes = {
        {1024, 1, 16, 8, 2, 1}, {1024, 8, 15, 8, 4, 2}, {4096, 8, 30, 8, 2, 1}};
    for (const auto& [batch, in_ch, len, filters, kernel, stride] : conv_shapes) {
        const std::size_t out_len = kernels::conv1d_out_len(len, kernel, stride);
        std::vector<double> K(filters * in_ch * kernel), b(filters);
        std::vector<double> x(batch * in_ch * len), y(batch * filters * out_len);
        std::vector<double> dK(K.size()), db(filters), dx(x.size()), dy(y.size());
        fill(K, rng);
        fill(b, rng);
        fill(x, rng);
        fill(dy, rng);

        char name[64];
        std::snprintf(name, sizeof(name), "conv fwd b%zu c%zu L%zu f%zu", batch, in_ch, len,
                      filters);
        const double ts = time_best_of(
            [&] {
                kernels::conv1d_forward_ref(batch, in_ch, len, filters, kernel, stride, K.data(),
                                            b.data(), x.data(), y.data());
            },
            5);
        const double tp = time_best_of(
            [&] {
                kernels::conv1d_forward_omp(batch, in_ch, len, filters, kernel, stride, K.data(),
                                            b.data(), x.data(), y.data());
            },
            5);
        std::printf("%-34s %12.3f %12.3f %8.2f\n", name, ts * 1e3, tp * 1e3, ts / tp);

        std::snprintf(name, sizeof(name), "conv bwd b%zu c%zu L%zu f%zu", batch, in_ch, len,
                      filters);
        const double ts2 = time_best_of(
            [&] {
                kernels::conv1d_backward_params_ref(batch, in_ch, len, filters, kernel, stride,
                                                    x.data(), dy.data(), dK.data(), db.data());
                kernels::conv1d_backward_input_ref(batch, in_ch, len, filters, kernel, stride,
                                                   K.data(), dy.data(), dx.data());
            },
            5);
        const double tp2 = time_best_of(
            [&] {
                kernels::conv1d_backward_params_omp(batch, in_ch, len, filters, kernel, stride,
                                                    x.data(), dy.data(), dK.data(), db.data());
                kernels::conv1d_backward_input_omp(batch, in_ch, len, filters, kernel, stride,
                                                   K.data(), dy.data(), dx.data());
            },
            5);
        std::printf("%-34s %12.3f %12.3f %8.2f\n", name, ts2 * 1e3, tp2 * 1e3, ts2 / tp2);
    }

    return 0;
}
