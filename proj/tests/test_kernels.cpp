#include <doctest.h>

#include <vector>

#include "cwnet/kernels.hpp"
#include "cwnet/rng.hpp"

using namespace cwnet;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("dense kernels: omp variant is bit-identical to the serial reference") {
    Rng rng(101);
    for (const auto& [batch, in, out] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {3, 5, 7}, {17, 16, 16}, {64, 36, 16}, {129, 33, 9}}) {
        const auto W = random_vec(out * in, rng);
        const auto b = random_vec(out, rng);
        const auto x = random_vec(batch * in, rng);
        const auto dy = random_vec(batch * out, rng);

        std::vector<double> y1(batch * out), y2(batch * out);
        kernels::dense_forward_ref(batch, in, out, W.data(), b.data(), x.data(), y1.data());
        kernels::dense_forward_omp(batch, in, out, W.data(), b.data(), x.data(), y2.data());
        CHECK(bit_equal(y1, y2));

        std::vector<double> dW1(out * in), db1(out), dW2(out * in), db2(out);
        kernels::dense_backward_params_ref(batch, in, out, x.data(), dy.data(), dW1.data(),
                                           db1.data());
        kernels::dense_backward_params_omp(batch, in, out, x.data(), dy.data(), dW2.data(),
                                           db2.data());
        CHECK(bit_equal(dW1, dW2));
        CHECK(bit_equal(db1, db2));

        std::vector<double> dx1(batch * in), dx2(batch * in);
        kernels::dense_backward_input_ref(batch, in, out, W.data(), dy.data(), dx1.data());
        kernels::dense_backward_input_omp(batch, in, out, W.data(), dy.data(), dx2.data());
        CHECK(bit_equal(dx1, dx2));
    }
}

TEST_CASE("conv1d kernels: omp variant is bit-identical to the serial reference") {
    Rng rng(202);
    for (const auto& [batch, in_ch, len, filters, kernel, stride] :
         std::vector<std::array<std::size_t, 6>>{{1, 1, 16, 1, 1, 1},
                                                 {5, 1, 16, 8, 2, 1},
                                                 {9, 8, 15, 8, 4, 2},
                                                 {33, 8, 6, 8, 2, 1},
                                                 {7, 3, 11, 5, 3, 2}}) {
        const std::size_t out_len = kernels::conv1d_out_len(len, kernel, stride);
        REQUIRE(out_len >= 1);
        const auto K = random_vec(filters * in_ch * kernel, rng);
        const auto b = random_vec(filters, rng);
        const auto x = random_vec(batch * in_ch * len, rng);
        const auto dy = random_vec(batch * filters * out_len, rng);

        std::vector<double> y1(batch * filters * out_len), y2(y1.size());
        kernels::conv1d_forward_ref(batch, in_ch, len, filters, kernel, stride, K.data(),
                                    b.data(), x.data(), y1.data());
        kernels::conv1d_forward_omp(batch, in_ch, len, filters, kernel, stride, K.data(),
                                    b.data(), x.data(), y2.data());
        CHECK(bit_equal(y1, y2));

        std::vector<double> dK1(K.size()), db1(filters), dK2(K.size()), db2(filters);
        kernels::conv1d_backward_params_ref(batch, in_ch, len, filters, kernel, stride, x.data(),
                                            dy.data(), dK1.data(), db1.data());
        kernels::conv1d_backward_params_omp(batch, in_ch, len, filters, kernel, stride, x.data(),
                                            dy.data(), dK2.data(), db2.data());
        CHECK(bit_equal(dK1, dK2));
        CHECK(bit_equal(db1, db2));

        std::vector<double> dx1(x.size()), dx2(x.size());
        kernels::conv1d_backward_input_ref(batch, in_ch, len, filters, kernel, stride, K.data(),
                                           dy.data(), dx1.data());
        kernels::conv1d_backward_input_omp(batch, in_ch, len, filters, kernel, stride, K.data(),
                                           dy.data(), dx2.data());
        CHECK(bit_equal(dx1, dx2));
    }
}

TEST_CASE("conv1d output length follows the valid-padding formula") {
    CHECK(kernels::conv1d_out_len(16, 2, 1) == 15);
    CHECK(kernels::conv1d_out_len(15, 4, 2) == 6);
    CHECK(kernels::conv1d_out_len(6, 2, 1) == 5);
    CHECK(kernels::conv1d_out_len(4, 4, 2) == 1);
    CHECK(kernels::conv1d_out_len(3, 4, 2) == 0);
}

TEST_CASE("parallel toggle is honored by the dispatcher") {
    const bool was = kernels::parallel_enabled();
    kernels::set_parallel(false);
    CHECK_FALSE(kernels::parallel_enabled());
    kernels::set_parallel(true);
    kernels::set_parallel(was);
}
