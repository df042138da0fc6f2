#include <doctest.h>

#include <cmath>

#include "cwnet/channel.hpp"
#include "cwnet/errors.hpp"

using namespace cwnet;
using namespace cwnet::channel;

TEST_CASE("noise variance follows sigma2 = 10^(-snr/10)") {
    CHECK(noise_variance(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(noise_variance(10.0) == doctest::Approx(0.1).epsilon(1e-12));
    // derived by evaluating 10^0.2
    CHECK(noise_variance(-2.0) == doctest::Approx(std::pow(10.0, 0.2)).epsilon(1e-12));
    CHECK(noise_variance(-2.0) == doctest::Approx(1.5849).epsilon(1e-4));
    CHECK(NoiseSpec::from_snr_db(7.5).sigma2 ==
          doctest::Approx(noise_variance(7.5)).epsilon(1e-12));
}

TEST_CASE("normalize_power yields unit mean power and preserves direction") {
    Rng rng(1);
    SignalBlock x(8);
    for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());

    const SignalBlock y = normalize_power(x);
    CHECK(std::abs(y.mean_power() - 1.0) <= 1e-9);

    // already-unit block stays put
    const SignalBlock z = normalize_power(y);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(z[i] - y[i]) < 1e-12);

    // scale invariance: scaling by 7 does not change the output
    SignalBlock x7 = x;
    for (auto& v : x7.values) v *= 7.0;
    const SignalBlock y7 = normalize_power(x7);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(y7[i] - y[i]) < 1e-12);
}

TEST_CASE("normalize_power rejects the zero block") {
    SignalBlock zero(4);
    CHECK_THROWS_AS(normalize_power(zero), UsageError);
}

TEST_CASE("AWGN fading coefficient is exactly one") {
    Rng rng(2);
    ChannelModel m;
    m.kind = FadingKind::AWGN;
    const cplx h = sample_fading(m, rng);
    CHECK(h == cplx(1.0, 0.0));
}

TEST_CASE("Rician K to infinity approaches the pure line-of-sight coefficient") {
    Rng rng(3);
    ChannelModel m;
    m.kind = FadingKind::Rician;
    m.rician_k = 1e12;
    for (int i = 0; i < 10; ++i) {
        const cplx h = sample_fading(m, rng);
        CHECK(std::abs(h - cplx(1.0, 0.0)) < 1e-4);
    }
}

TEST_CASE("fading coefficients have unit second moment (1e6-draw Monte Carlo)") {
    for (FadingKind kind : {FadingKind::Rayleigh, FadingKind::Rician}) {
        Rng rng(4);
        ChannelModel m;
        m.kind = kind;
        m.rician_k = 4.0;
        double acc = 0.0;
        const std::size_t N = 1000000;
        for (std::size_t i = 0; i < N; ++i) acc += std::norm(sample_fading(m, rng));
        CHECK(std::abs(acc / N - 1.0) < 0.02);
    }
}

TEST_CASE("Rician line-of-sight power fraction is K/(K+1)") {
    Rng rng(5);
    ChannelModel m;
    m.kind = FadingKind::Rician;
    m.rician_k = 4.0;
    // LOS component is the mean; scatter power = E|h - E h|^2.
    const std::size_t N = 1000000;
    cplx mean(0.0, 0.0);
    std::vector<cplx> draws(N);
    for (auto& h : draws) {
        h = sample_fading(m, rng);
        mean += h;
    }
    mean /= static_cast<double>(N);
    const double los_power = std::norm(mean);
    CHECK(std::abs(los_power - 4.0 / 5.0) < 0.02 * (4.0 / 5.0) + 0.005);
}

TEST_CASE("add_noise with sigma2 = 0 is bit-exact") {
    Rng rng(6);
    SignalBlock x(8);
    for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());
    const SignalBlock y = add_noise(x, 0.0, rng);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(y[i].real() == x[i].real());
        CHECK(y[i].imag() == x[i].imag());
    }
}

TEST_CASE("noise statistics: per-component variance sigma2/2, zero mean") {
    Rng rng(7);
    const double sigma2 = 0.37;
    const std::size_t N = 500000;
    double acc_re2 = 0.0, acc_im2 = 0.0, acc_re = 0.0, acc_im = 0.0;
    SignalBlock zero(1);
    for (std::size_t i = 0; i < N; ++i) {
        const SignalBlock y = add_noise(zero, sigma2, rng);
        acc_re += y[0].real();
        acc_im += y[0].imag();
        acc_re2 += y[0].real() * y[0].real();
        acc_im2 += y[0].imag() * y[0].imag();
    }
    CHECK(std::abs(acc_re2 / N - sigma2 / 2) < 0.01 * sigma2);
    CHECK(std::abs(acc_im2 / N - sigma2 / 2) < 0.01 * sigma2);
    // CLT bound: |mean| <= 3 sigma/sqrt(2N)
    const double bound = 3.0 * std::sqrt(sigma2 / 2.0 / N);
    CHECK(std::abs(acc_re / N) < bound);
    CHECK(std::abs(acc_im / N) < bound);
}

TEST_CASE("single-user output: identity and rotation anchors") {
    Rng rng(8);
    SignalBlock x(4);
    for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());

    const SignalBlock y1 = single_user_output(x, cplx(1.0, 0.0), 0.0, rng);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(y1[i] - x[i]) == 0.0);

    // h = i rotates every use by 90 degrees
    const SignalBlock y2 = single_user_output(x, cplx(0.0, 1.0), 0.0, rng);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(y2[i].real() == doctest::Approx(-x[i].imag()).epsilon(1e-15));
        CHECK(y2[i].imag() == doctest::Approx(x[i].real()).epsilon(1e-15));
    }
}

TEST_CASE("single-user output power: E|y|^2 = |h|^2 + sigma2") {
    Rng rng(9);
    const cplx h(0.6, -0.8);  // |h|^2 = 1
    const double sigma2 = 0.25;
    SignalBlock x(1);
    x[0] = cplx(1.0, 0.0);
    const std::size_t N = 400000;
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const SignalBlock y = single_user_output(x, h, sigma2, rng);
        acc += std::norm(y[0]);
    }
    CHECK(std::abs(acc / N - (1.0 + sigma2)) < 0.02 * (1.0 + sigma2));
}

TEST_CASE("multi-user output reduces to the single-user map for one transmitter") {
    Rng rng(10);
    ChannelModel m;
    m.kind = FadingKind::Rayleigh;
    ChannelRealization real = draw_realization(m, 1, 1, rng, Scenario::Multi);
    SignalBlock x(8);
    for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());

    Rng noise_a(77), noise_b(77);
    const auto ys = multi_user_output({x}, real, 0.1, noise_a);
    REQUIRE(ys.size() == 1);
    const SignalBlock y1 = single_user_output(x, real.h_eff(0, 0), 0.1, noise_b);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(ys[0][i] - y1[i]) < 1e-15);
}

TEST_CASE("two users over identity channel: each antenna carries its own signal") {
    ChannelRealization real;
    real.scenario = Scenario::Multi;
    real.kind = FadingKind::Rayleigh;
    real.n_tx = 2;
    real.n_rx = 2;
    real.H = {cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)};  // tx-major identity
    real.phases = {0.0, 0.0};

    Rng rng(11);
    SignalBlock x1(4), x2(4);
    for (auto& v : x1.values) v = cplx(rng.normal(), rng.normal());
    for (auto& v : x2.values) v = cplx(rng.normal(), rng.normal());
    const auto ys = multi_user_output({x1, x2}, real, 0.0, rng);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(ys[0][i] - x1[i]) == 0.0);
        CHECK(std::abs(ys[1][i] - x2[i]) == 0.0);
    }
}

TEST_CASE("multi-user output matches a direct summation oracle") {
    Rng rng(12);
    ChannelModel m;
    m.kind = FadingKind::Rician;
    m.rician_k = 4.0;
    const ChannelRealization real = draw_realization(m, 3, 3, rng, Scenario::Multi);
    std::vector<SignalBlock> xs;
    for (int u = 0; u < 3; ++u) {
        SignalBlock x(5);
        for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());
        xs.push_back(x);
    }
    Rng noise(13);
    const auto ys = multi_user_output(xs, real, 0.0, noise);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < 5; ++i) {
            cplx want(0.0, 0.0);
            for (std::size_t u = 0; u < 3; ++u) {
                want += real.H[u * 3 + j] * std::polar(1.0, real.phases[u]) * xs[u][i];
            }
            CHECK(std::abs(ys[j][i] - want) < 1e-12);
        }
    }
}

TEST_CASE("AWGN realization is all ones with zero phases") {
    Rng rng(14);
    ChannelModel m;
    m.kind = FadingKind::AWGN;
    const ChannelRealization real = draw_realization(m, 2, 2, rng, Scenario::Multi);
    for (const auto& h : real.H) CHECK(h == cplx(1.0, 0.0));
    for (double t : real.phases) CHECK(t == 0.0);
    for (const auto& h : real.h_users_to_bob) CHECK(h == cplx(1.0, 0.0));
    CHECK(real.h_alice == cplx(1.0, 0.0));
    for (const auto& h : real.h_alice_to_rx) CHECK(h == cplx(1.0, 0.0));
}

TEST_CASE("single-user realization populates only the scalar coefficients") {
    Rng rng(15);
    ChannelModel m;
    m.kind = FadingKind::Rayleigh;
    const ChannelRealization real = draw_realization(m, 1, 1, rng, Scenario::Single);
    CHECK(real.H.empty());
    CHECK(real.h_users_to_bob.empty());
    CHECK(std::isfinite(real.h_single.real()));
    CHECK(std::isfinite(real.h_alice.real()));
}

TEST_CASE("matrix entries have unit second moment") {
    Rng rng(16);
    ChannelModel m;
    m.kind = FadingKind::Rayleigh;
    double acc = 0.0;
    const std::size_t N = 100000;
    for (std::size_t i = 0; i < N; ++i) {
        const ChannelRealization real = draw_realization(m, 2, 2, rng, Scenario::Multi);
        for (const auto& h : real.H) acc += std::norm(h);
    }
    CHECK(std::abs(acc / (4 * N) - 1.0) < 0.02);
}

TEST_CASE("SNR fidelity: measured noise power within 1% of sigma2 at 1e5 blocks") {
    for (FadingKind kind : {FadingKind::AWGN, FadingKind::Rayleigh, FadingKind::Rician}) {
        Rng rng(17);
        ChannelModel m;
        m.kind = kind;
        m.rician_k = 4.0;
        const double sigma2 = noise_variance(5.0);
        SignalBlock x(8);
        for (auto& v : x.values) v = cplx(rng.normal(), rng.normal());
        const SignalBlock xn = normalize_power(x);

        double acc = 0.0;
        const std::size_t N = 100000;
        for (std::size_t i = 0; i < N; ++i) {
            const cplx h = sample_fading(m, rng);
            const SignalBlock y = single_user_output(xn, h, sigma2, rng);
            for (std::size_t u = 0; u < 8; ++u) acc += std::norm(y[u] - h * xn[u]);
        }
        CHECK(std::abs(acc / (8.0 * N) - sigma2) < 0.01 * sigma2);
    }
}

TEST_CASE("block fading: coefficients are independent across blocks") {
    Rng rng(18);
    ChannelModel m;
    m.kind = FadingKind::Rayleigh;
    const std::size_t N = 100000;
    std::vector<double> re(N);
    for (std::size_t i = 0; i < N; ++i) re[i] = sample_fading(m, rng).real();
    // lag-1 sample correlation
    double mean = 0.0;
    for (double v : re) mean += v;
    mean /= N;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) num += (re[i] - mean) * (re[i + 1] - mean);
    for (std::size_t i = 0; i < N; ++i) den += (re[i] - mean) * (re[i] - mean);
    CHECK(std::abs(num / den) < 0.02);
}

TEST_CASE("channel linearity with shared coefficients (noiseless)") {
    Rng rng(19);
    SignalBlock x1(6), x2(6);
    for (auto& v : x1.values) v = cplx(rng.normal(), rng.normal());
    for (auto& v : x2.values) v = cplx(rng.normal(), rng.normal());
    const cplx h(0.3, -1.2);
    const cplx a(2.0, 0.5), b(-1.0, 0.25);

    SignalBlock combo(6);
    for (std::size_t i = 0; i < 6; ++i) combo[i] = a * x1[i] + b * x2[i];
    const SignalBlock out_combo = single_user_output(combo, h, 0.0, rng);
    const SignalBlock out1 = single_user_output(x1, h, 0.0, rng);
    const SignalBlock out2 = single_user_output(x2, h, 0.0, rng);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(out_combo[i] - (a * out1[i] + b * out2[i])) < 1e-12);
    }
}
