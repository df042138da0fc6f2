#pragma once

#include <string>
#include <vector>

#include "cwnet/channel.hpp"

namespace cwnet::baseline {

using channel::ChannelModel;
using channel::cplx;
using channel::FadingKind;
using channel::SignalBlock;

enum class ModKind { BPSK, QPSK };

struct ModScheme {
    ModKind kind = ModKind::BPSK;

    std::size_t bits_per_symbol() const { return kind == ModKind::BPSK ? 1 : 2; }
    const char* name() const { return kind == ModKind::BPSK ? "bpsk" : "qpsk"; }
};

// BPSK: bit 0 -> +1, bit 1 -> -1 on the real axis.
// QPSK: Gray-mapped, (b0, b1) -> ((1-2 b0) + (1-2 b1) j) / sqrt(2).
SignalBlock modulate(const std::vector<int>& bits, const ModScheme& scheme);

// Minimum-distance decisions, coherent (y already equalized in fading
// modes). Decision-boundary ties break toward bit 0.
std::vector<int> hard_demodulate(const SignalBlock& y, const ModScheme& scheme);

// Closed forms, per-bit SNR gamma_b (linear):
//   AWGN BPSK/QPSK: Q(sqrt(2 gamma_b))
//   Rayleigh BPSK:  (1 - sqrt(gamma / (1 + gamma))) / 2
// Unsupported pairs throw UsageError.
double analytic_ber(const ModScheme& scheme, FadingKind channel, double snr_per_bit_linear);

struct BaselinePoint {
    double snr_db = 0.0;          // per complex symbol
    double snr_per_bit_db = 0.0;  // per information bit
    double ber = 0.0;
    double bler = 0.0;
    std::size_t trials = 0;
};

struct BaselineSweep {
    ModScheme scheme;
    FadingKind channel = FadingKind::AWGN;
    std::vector<BaselinePoint> points;
};

// Monte-Carlo BER/BLER over k-bit blocks; block fading, genie-equalized
// coherent detection in fading modes. snr grid is per complex symbol.
BaselineSweep simulate_baseline(const ModScheme& scheme, const ChannelModel& model,
                                const std::vector<double>& snr_db_list, std::size_t block_bits,
                                std::size_t trials, Rng& rng);

}  // namespace cwnet::baseline
