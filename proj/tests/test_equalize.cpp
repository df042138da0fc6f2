#include <doctest.h>

#include <cmath>

#include "cwnet/equalize.hpp"
#include "cwnet/errors.hpp"

using namespace cwnet;
using namespace cwnet::channel;

TEST_CASE("equalize_single: identity, algebraic inverse, hand-checked 2i") {
    Rng rng(21);
    SignalBlock x(6);
    for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());

    // h_hat = 1 is the identity
    const auto id = equalize_single(x, cplx(1.0, 0.0));
    CHECK_FALSE(id.flagged);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(id.block[i] - x[i]) < 1e-15);

    // exact inverse: y = h x equalized by h recovers x
    const cplx h(1.3, -0.4);
    SignalBlock y(6);
    for (std::size_t i = 0; i < 6; ++i) y[i] = h * x[i];
    const auto rec = equalize_single(y, h);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(rec.block[i] - x[i]) < 1e-12);

    // h_hat = 2i: division is a -90 degree rotation and halving
    SignalBlock one(1);
    one[0] = cplx(4.0, 2.0);
    const auto r = equalize_single(one, cplx(0.0, 2.0));
    CHECK(r.block[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.block[0].imag() == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("equalize_single flags near-singular coefficients and passes through") {
    SignalBlock y(3);
    y[0] = cplx(1.0, 1.0);
    const auto r = equalize_single(y, cplx(1e-10, 0.0));
    CHECK(r.flagged);
    CHECK(std::abs(r.block[0] - y[0]) == 0.0);
}

TEST_CASE("zero forcing with identity channel is the identity") {
    ChannelRealization real;
    real.scenario = Scenario::Multi;
    real.n_tx = 2;
    real.n_rx = 2;
    real.H = {cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)};
    real.phases = {0.0, 0.0};

    Rng rng(22);
    std::vector<SignalBlock> ys(2, SignalBlock(4));
    for (auto& y : ys)
        for (auto& v : y.values) v = cplx(rng.normal(), rng.normal());
    const auto res = zf_equalize(ys, real);
    CHECK_FALSE(res.flagged);
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(res.users[u][i] - ys[u][i]) < 1e-12);
}

TEST_CASE("zero forcing recovers noiseless transmissions exactly (2 and 4 users)") {
    for (std::size_t users : {std::size_t{2}, std::size_t{4}}) {
        Rng rng(23 + users);
        ChannelModel m;
        m.kind = FadingKind::Rayleigh;
        double worst = 0.0;
        for (int block = 0; block < 10000; ++block) {
            const ChannelRealization real =
                draw_realization(m, users, users, rng, Scenario::Multi);
            std::vector<SignalBlock> xs;
            for (std::size_t u = 0; u < users; ++u) {
                SignalBlock x(8);
                for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());
                xs.push_back(x);
            }
            const auto ys = multi_user_output(xs, real, 0.0, rng);
            const auto res = zf_equalize(ys, real);
            if (res.flagged) continue;  // singular channels are flagged, not decoded
            for (std::size_t u = 0; u < users; ++u)
                for (std::size_t i = 0; i < 8; ++i)
                    worst = std::max(worst, std::abs(res.users[u][i] - xs[u][i]));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("zero forcing matches the manual inverse of [[1,0],[1,1]]") {
    // G = [[1,0],[1,1]] receive-major; with H tx-major this is
    // H[0][:] = (1,1), H[1][:] = (0,1).
    ChannelRealization real;
    real.scenario = Scenario::Multi;
    real.n_tx = 2;
    real.n_rx = 2;
    real.H = {cplx(1, 0), cplx(1, 0), cplx(0, 0), cplx(1, 0)};
    real.phases = {0.0, 0.0};

    // y1 = x1, y2 = x1 + x2  =>  x1 = y1, x2 = y2 - y1 (manual inverse).
    Rng rng(31);
    std::vector<SignalBlock> xs(2, SignalBlock(3));
    for (auto& x : xs)
        for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());
    const auto ys = multi_user_output(xs, real, 0.0, rng);
    const auto res = zf_equalize(ys, real);
    REQUIRE_FALSE(res.flagged);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(res.users[0][i] - ys[0][i]) < 1e-12);
        CHECK(std::abs(res.users[1][i] - (ys[1][i] - ys[0][i])) < 1e-12);
    }
}

TEST_CASE("rank-deficient channels are flagged") {
    ChannelRealization real;
    real.scenario = Scenario::Multi;
    real.n_tx = 2;
    real.n_rx = 2;
    // Both transmitters hit both antennas identically: rank 1.
    real.H = {cplx(1, 0), cplx(1, 0), cplx(1, 0), cplx(1, 0)};
    real.phases = {0.0, 0.0};
    const auto m = zf_matrix(real);
    CHECK(m.flagged);

    // Nearly-collinear columns push the condition estimate over the limit.
    ChannelRealization close = real;
    close.H = {cplx(1, 0), cplx(1, 0), cplx(1.0 + 1e-12, 0), cplx(1, 0)};
    const auto m2 = zf_matrix(close);
    CHECK(m2.flagged);
}

TEST_CASE("zf_equalize requires enough receive antennas") {
    ChannelRealization real;
    real.scenario = Scenario::Multi;
    real.n_tx = 2;
    real.n_rx = 1;
    real.H = {cplx(1, 0), cplx(1, 0)};
    real.phases = {0.0, 0.0};
    std::vector<SignalBlock> ys(1, SignalBlock(2));
    CHECK_THROWS_AS(zf_equalize(ys, real), ConfigError);
}
