#include <doctest.h>

#include <cmath>

#include "cwnet/baseline.hpp"
#include "cwnet/errors.hpp"

using namespace cwnet;
using namespace cwnet::baseline;

namespace {

// Independent oracle for Q(x): trapezoid quadrature of the Gaussian tail.
double q_by_quadrature(double x) {
    const double hi = x + 12.0;
    const std::size_t steps = 400000;
    const double h = (hi - x) / steps;
    double acc = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = x + i * h;
        const double f = std::exp(-t * t / 2.0) / std::sqrt(2.0 * M_PI);
        acc += (i == 0 || i == steps) ? f / 2.0 : f;
    }
    return acc * h;
}

}  // namespace

TEST_CASE("modulation anchors: mapping, power, round trip") {
    ModScheme bpsk{ModKind::BPSK};
    const SignalBlock x = modulate({0, 1}, bpsk);
    CHECK(x[0] == cplx(1.0, 0.0));   // 0 -> +1
    CHECK(x[1] == cplx(-1.0, 0.0));  // 1 -> -1

    ModScheme qpsk{ModKind::QPSK};
    const SignalBlock q = modulate({0, 0, 0, 1, 1, 0, 1, 1}, qpsk);
    for (std::size_t i = 0; i < q.n(); ++i) CHECK(std::norm(q[i]) == doctest::Approx(1.0).epsilon(1e-15));

    // noiseless round trip
    Rng rng(1);
    std::vector<int> bits(64);
    for (auto& b : bits) b = static_cast<int>(rng.uniform_index(2));
    for (const ModScheme& s : {bpsk, qpsk}) {
        const SignalBlock tx = modulate(bits, s);
        const auto rx = hard_demodulate(tx, s);
        CHECK(rx == bits);
    }

    CHECK_THROWS_AS(modulate({0, 1, 1}, qpsk), UsageError);
}

TEST_CASE("decision boundary ties break toward bit 0") {
    ModScheme bpsk{ModKind::BPSK};
    SignalBlock y(1);
    y[0] = cplx(0.0, 0.3);
    CHECK(hard_demodulate(y, bpsk)[0] == 0);
    ModScheme qpsk{ModKind::QPSK};
    SignalBlock z(1);
    z[0] = cplx(0.0, 0.0);
    const auto bits = hard_demodulate(z, qpsk);
    CHECK(bits[0] == 0);
    CHECK(bits[1] == 0);
}

TEST_CASE("analytic BER anchors") {
    ModScheme bpsk{ModKind::BPSK};
    // AWGN BPSK at gamma_b = 1 (0 dB): Q(sqrt(2)) ~ 0.0786
    const double ber0 = analytic_ber(bpsk, FadingKind::AWGN, 1.0);
    CHECK(ber0 == doctest::Approx(0.0786).epsilon(2e-3));
    CHECK(ber0 == doctest::Approx(q_by_quadrature(std::sqrt(2.0))).epsilon(1e-6));

    // Rayleigh BPSK at mean gamma = 10: 0.5 (1 - sqrt(10/11)) ~ 0.02327
    const double berr = analytic_ber(bpsk, FadingKind::Rayleigh, 10.0);
    CHECK(berr == doctest::Approx(0.5 * (1.0 - std::sqrt(10.0 / 11.0))).epsilon(1e-12));
    CHECK(berr == doctest::Approx(0.02327).epsilon(1e-3));

    // gamma -> infinity drives the BER to zero
    CHECK(analytic_ber(bpsk, FadingKind::AWGN, 1e6) < 1e-12);
    CHECK(analytic_ber(bpsk, FadingKind::Rayleigh, 1e9) < 1e-4);

    // unsupported pair
    ModScheme qpsk{ModKind::QPSK};
    CHECK_THROWS_AS(analytic_ber(qpsk, FadingKind::Rayleigh, 1.0), UsageError);
    CHECK_THROWS_AS(analytic_ber(bpsk, FadingKind::Rician, 1.0), UsageError);
}

TEST_CASE("Monte-Carlo BPSK/QPSK BER matches the closed forms within 5%") {
    Rng rng(2);
    ChannelModel awgn;
    awgn.kind = FadingKind::AWGN;

    // AWGN: per-symbol grid; gamma_b = gamma_s / bits_per_symbol.
    for (ModKind kind : {ModKind::BPSK, ModKind::QPSK}) {
        ModScheme s{kind};
        const auto sweep = simulate_baseline(s, awgn, {0.0, 2.0, 4.0, 6.0}, 8, 60000, rng);
        for (const auto& p : sweep.points) {
            const double gb = std::pow(10.0, p.snr_per_bit_db / 10.0);
            const double want = analytic_ber(s, FadingKind::AWGN, gb);
            if (want > 1e-3) {
                CHECK(std::abs(p.ber - want) / want < 0.05);
            }
        }
    }

    ChannelModel ray;
    ray.kind = FadingKind::Rayleigh;
    ModScheme bpsk{ModKind::BPSK};
    const auto sweep = simulate_baseline(bpsk, ray, {0.0, 5.0, 10.0, 15.0}, 8, 60000, rng);
    for (const auto& p : sweep.points) {
        const double gb = std::pow(10.0, p.snr_per_bit_db / 10.0);
        const double want = analytic_ber(bpsk, FadingKind::Rayleigh, gb);
        if (want > 1e-3) {
            CHECK(std::abs(p.ber - want) / want < 0.05);
        }
    }
}

TEST_CASE("BLER composition: AWGN block errors follow 1 - (1 - BER)^k") {
    Rng rng(3);
    ChannelModel awgn;
    awgn.kind = FadingKind::AWGN;
    ModScheme bpsk{ModKind::BPSK};
    const std::size_t trials = 60000;
    const auto sweep = simulate_baseline(bpsk, awgn, {0.0}, 4, trials, rng);
    const auto& p = sweep.points[0];
    // analytic composition: BLER ~ 1 - (1 - 0.0786)^4 ~ 0.279
    const double want = 1.0 - std::pow(1.0 - analytic_ber(bpsk, FadingKind::AWGN, 1.0), 4.0);
    CHECK(want == doctest::Approx(0.279).epsilon(5e-3));
    const double se = std::sqrt(want * (1.0 - want) / trials);
    CHECK(std::abs(p.bler - want) < 3.0 * se + 1e-3);

    // empirical composition from the same run's measured BER
    const double comp = 1.0 - std::pow(1.0 - p.ber, 4.0);
    CHECK(std::abs(p.bler - comp) < 4.0 * se + 1e-3);
}

TEST_CASE("noiseless channel gives zero BLER; BLER >= BER everywhere") {
    Rng rng(4);
    ChannelModel awgn;
    awgn.kind = FadingKind::AWGN;
    ModScheme bpsk{ModKind::BPSK};
    const auto clean = simulate_baseline(bpsk, awgn, {300.0}, 8, 2000, rng);
    CHECK(clean.points[0].bler == 0.0);

    const auto noisy = simulate_baseline(bpsk, awgn, {0.0, 4.0}, 8, 20000, rng);
    for (const auto& p : noisy.points) {
        CHECK(p.bler >= p.ber);
        CHECK(p.bler >= 0.0);
        CHECK(p.bler <= 1.0);
    }
}
