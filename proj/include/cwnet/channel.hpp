#pragma once

#include <complex>
#include <vector>

#include "cwnet/rng.hpp"
#include "cwnet/tensor.hpp"

namespace cwnet::channel {

using cplx = std::complex<double>;

// n complex channel uses (stored as 2n reals when crossing into networks,
// interleaved re/im).
struct SignalBlock {
    std::vector<cplx> values;

    SignalBlock() = default;
    explicit SignalBlock(std::size_t n) : values(n) {}
    explicit SignalBlock(std::vector<cplx> v) : values(std::move(v)) {}

    std::size_t n() const { return values.size(); }
    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }

    double mean_power() const {
        double acc = 0.0;
        for (const cplx& v : values) acc += std::norm(v);
        return acc / static_cast<double>(values.size());
    }
};

// Interleaved re/im conversion used at every network boundary.
void block_to_row(const SignalBlock& b, double* row);
SignalBlock row_to_block(const double* row, std::size_t n);

enum class FadingKind { AWGN, Rayleigh, Rician };

const char* fading_name(FadingKind k);

struct ChannelModel {
    FadingKind kind = FadingKind::AWGN;
    double rician_k = 4.0;  // Rician only
};

// snr convention: unit mean signal power per complex use, sigma2 the total
// complex-sample noise variance (sigma2/2 per real component).
struct NoiseSpec {
    double snr_db = 0.0;
    double sigma2 = 1.0;

    static NoiseSpec from_snr_db(double db);
};

enum class Scenario { Single, Multi };

// Fading coefficients for one codeword slot; block fading, redrawn per block.
// Draw order (documented, load-bearing for determinism): single-user fills
// h_single then h_alice; multi-user fills H tx-major, phases, h_users_to_bob,
// h_alice, then h_alice_to_rx.
struct ChannelRealization {
    Scenario scenario = Scenario::Single;
    FadingKind kind = FadingKind::AWGN;
    std::size_t n_tx = 1;
    std::size_t n_rx = 1;

    cplx h_single{1.0, 0.0};           // users -> UserRX (single-user)
    cplx h_alice{1.0, 0.0};            // Alice -> Bob
    std::vector<cplx> h_users_to_bob;  // n_tx (multi-user)
    std::vector<cplx> H;               // n_tx x n_rx, tx-major (users -> BaseRX)
    std::vector<double> phases;        // per-transmitter phase offsets
    std::vector<cplx> h_alice_to_rx;   // n_rx (multi-user): Alice -> BaseRX antennas

    // Effective coefficient with the transmitter phase folded in.
    cplx h_eff(std::size_t tx, std::size_t rx) const {
        return H[tx * n_rx + rx] * std::polar(1.0, phases[tx]);
    }
};

// sigma2 = 10^(-snr_db / 10)
double noise_variance(double snr_db);

// Scales the block to unit mean per-use power. Throws UsageError on an
// (effectively) all-zero block.
SignalBlock normalize_power(const SignalBlock& x);

// AWGN -> exactly 1; Rayleigh -> CN(0,1);
// Rician -> sqrt(K/(K+1)) + sqrt(1/(K+1)) CN(0,1).
cplx sample_fading(const ChannelModel& model, Rng& rng);

// One CN(0, sigma2) draw: re then im, each N(0, sigma2/2).
cplx sample_noise(double sigma2, Rng& rng);

// y = x + n, i.i.d. complex Gaussian noise per use. sigma2 = 0 is bit-exact.
SignalBlock add_noise(const SignalBlock& x, double sigma2, Rng& rng);

// y = h x + n (flat fading over the block).
SignalBlock single_user_output(const SignalBlock& x, cplx h, double sigma2, Rng& rng);

// Antenna j receives sum_i H[i,j] e^{j theta_i} x_i + n_j. One independent
// noise draw per receive antenna.
std::vector<SignalBlock> multi_user_output(const std::vector<SignalBlock>& xs,
                                           const ChannelRealization& real, double sigma2,
                                           Rng& rng);

ChannelRealization draw_realization(const ChannelModel& model, std::size_t n_tx, std::size_t n_rx,
                                    Rng& rng, Scenario scenario);

}  // namespace cwnet::channel
