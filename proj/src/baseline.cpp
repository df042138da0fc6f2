#include "cwnet/baseline.hpp"

#include <cmath>

#include "cwnet/errors.hpp"

namespace cwnet::baseline {

namespace {
double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
}  // namespace

SignalBlock modulate(const std::vector<int>& bits, const ModScheme& scheme) {
    const std::size_t bps = scheme.bits_per_symbol();
    if (bits.size() % bps != 0) {
        throw UsageError("modulate: bit count not divisible by bits per symbol");
    }
    const std::size_t n = bits.size() / bps;
    SignalBlock out(n);
    if (scheme.kind == ModKind::BPSK) {
        for (std::size_t i = 0; i < n; ++i) out[i] = cplx(bits[i] ? -1.0 : 1.0, 0.0);
    } else {
        const double a = 1.0 / std::sqrt(2.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int b0 = bits[2 * i];
            const int b1 = bits[2 * i + 1];
            out[i] = cplx(b0 ? -a : a, b1 ? -a : a);
        }
    }
    return out;
}

std::vector<int> hard_demodulate(const SignalBlock& y, const ModScheme& scheme) {
    std::vector<int> bits;
    bits.reserve(y.n() * scheme.bits_per_symbol());
    if (scheme.kind == ModKind::BPSK) {
        for (std::size_t i = 0; i < y.n(); ++i) bits.push_back(y[i].real() >= 0.0 ? 0 : 1);
    } else {
        for (std::size_t i = 0; i < y.n(); ++i) {
            bits.push_back(y[i].real() >= 0.0 ? 0 : 1);
            bits.push_back(y[i].imag() >= 0.0 ? 0 : 1);
        }
    }
    return bits;
}

double analytic_ber(const ModScheme& scheme, FadingKind channel, double snr_per_bit_linear) {
    const double g = snr_per_bit_linear;
    if (channel == FadingKind::AWGN) {
        // Gray-mapped QPSK has the same per-bit error rate as BPSK.
        return q_function(std::sqrt(2.0 * g));
    }
    if (channel == FadingKind::Rayleigh && scheme.kind == ModKind::BPSK) {
        return 0.5 * (1.0 - std::sqrt(g / (1.0 + g)));
    }
    throw UsageError(std::string("analytic_ber: unsupported scheme/channel pair ") +
                     scheme.name() + "/" + channel::fading_name(channel));
}

BaselineSweep simulate_baseline(const ModScheme& scheme, const ChannelModel& model,
                                const std::vector<double>& snr_db_list, std::size_t block_bits,
                                std::size_t trials, Rng& rng) {
    if (block_bits == 0 || block_bits % scheme.bits_per_symbol() != 0) {
        throw UsageError("simulate_baseline: block_bits must be a positive multiple of bits/symbol");
    }

    BaselineSweep sweep;
    sweep.scheme = scheme;
    sweep.channel = model.kind;

    const double bps = static_cast<double>(scheme.bits_per_symbol());
    for (double snr_db : snr_db_list) {
        const double sigma2 = channel::noise_variance(snr_db);
        std::size_t bit_errors = 0;
        std::size_t block_errors = 0;
        std::vector<int> bits(block_bits);
        for (std::size_t t = 0; t < trials; ++t) {
            for (auto& b : bits) b = static_cast<int>(rng.uniform_index(2));
            const SignalBlock x = modulate(bits, scheme);
            const cplx h = sample_fading(model, rng);
            SignalBlock y = channel::single_user_output(x, h, sigma2, rng);
            if (model.kind != FadingKind::AWGN) {
                // Genie-aided coherent detection.
                for (auto& v : y.values) v /= h;
            }
            const std::vector<int> rx = hard_demodulate(y, scheme);
            std::size_t errs = 0;
            for (std::size_t i = 0; i < block_bits; ++i) errs += rx[i] != bits[i];
            bit_errors += errs;
            block_errors += errs > 0;
        }
        BaselinePoint p;
        p.snr_db = snr_db;
        p.snr_per_bit_db = snr_db - 10.0 * std::log10(bps);
        p.ber = static_cast<double>(bit_errors) / static_cast<double>(trials * block_bits);
        p.bler = static_cast<double>(block_errors) / static_cast<double>(trials);
        p.trials = trials;
        sweep.points.push_back(p);
    }
    return sweep;
}

}  // namespace cwnet::baseline
