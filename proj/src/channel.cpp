#include "cwnet/channel.hpp"

#include <cmath>

#include "cwnet/errors.hpp"

namespace cwnet::channel {

void block_to_row(const SignalBlock& b, double* row) {
    for (std::size_t i = 0; i < b.n(); ++i) {
        row[2 * i] = b[i].real();
        row[2 * i + 1] = b[i].imag();
    }
}

SignalBlock row_to_block(const double* row, std::size_t n) {
    SignalBlock b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = cplx(row[2 * i], row[2 * i + 1]);
    return b;
}

const char* fading_name(FadingKind k) {
    switch (k) {
        case FadingKind::AWGN: return "awgn";
        case FadingKind::Rayleigh: return "rayleigh";
        case FadingKind::Rician: return "rician";
    }
    return "?";
}

NoiseSpec NoiseSpec::from_snr_db(double db) {
    NoiseSpec s;
    s.snr_db = db;
    s.sigma2 = noise_variance(db);
    return s;
}

double noise_variance(double snr_db) {
    if (!std::isfinite(snr_db)) throw UsageError("noise_variance: snr_db must be finite");
    return std::pow(10.0, -snr_db / 10.0);
}

SignalBlock normalize_power(const SignalBlock& x) {
    if (x.n() == 0) throw UsageError("normalize_power: empty block");
    const double p = x.mean_power();
    if (!(p > 0.0) || !std::isfinite(p)) {
        throw UsageError("normalize_power: degenerate (zero-power) block");
    }
    const double s = 1.0 / std::sqrt(p);
    SignalBlock out(x.n());
    for (std::size_t i = 0; i < x.n(); ++i) out[i] = x[i] * s;
    return out;
}

cplx sample_fading(const ChannelModel& model, Rng& rng) {
    switch (model.kind) {
        case FadingKind::AWGN:
            return cplx(1.0, 0.0);
        case FadingKind::Rayleigh: {
            const double s = std::sqrt(0.5);
            const double re = s * rng.normal();
            const double im = s * rng.normal();
            return cplx(re, im);
        }
        case FadingKind::Rician: {
            const double k = model.rician_k;
            const double los = std::sqrt(k / (k + 1.0));
            const double s = std::sqrt(0.5 / (k + 1.0));
            const double re = los + s * rng.normal();
            const double im = s * rng.normal();
            return cplx(re, im);
        }
    }
    throw UsageError("sample_fading: unknown channel kind");
}

cplx sample_noise(double sigma2, Rng& rng) {
    if (sigma2 == 0.0) return cplx(0.0, 0.0);
    const double s = std::sqrt(sigma2 / 2.0);
    const double re = s * rng.normal();
    const double im = s * rng.normal();
    return cplx(re, im);
}

SignalBlock add_noise(const SignalBlock& x, double sigma2, Rng& rng) {
    if (sigma2 < 0.0) throw UsageError("add_noise: sigma2 must be nonnegative");
    if (sigma2 == 0.0) return x;
    SignalBlock y(x.n());
    for (std::size_t i = 0; i < x.n(); ++i) y[i] = x[i] + sample_noise(sigma2, rng);
    return y;
}

SignalBlock single_user_output(const SignalBlock& x, cplx h, double sigma2, Rng& rng) {
    SignalBlock y(x.n());
    for (std::size_t i = 0; i < x.n(); ++i) y[i] = h * x[i];
    return add_noise(y, sigma2, rng);
}

std::vector<SignalBlock> multi_user_output(const std::vector<SignalBlock>& xs,
                                           const ChannelRealization& real, double sigma2,
                                           Rng& rng) {
    if (xs.size() != real.n_tx) {
        throw ConfigError("multi_user_output: transmitter count mismatch");
    }
    const std::size_t n = xs.empty() ? 0 : xs[0].n();
    for (const SignalBlock& x : xs) {
        if (x.n() != n) throw ConfigError("multi_user_output: block length mismatch");
    }

    std::vector<SignalBlock> ys;
    ys.reserve(real.n_rx);
    for (std::size_t j = 0; j < real.n_rx; ++j) {
        SignalBlock y(n);
        for (std::size_t i = 0; i < real.n_tx; ++i) {
            const cplx h = real.h_eff(i, j);
            for (std::size_t u = 0; u < n; ++u) y[u] += h * xs[i][u];
        }
        ys.push_back(add_noise(y, sigma2, rng));
    }
    return ys;
}

ChannelRealization draw_realization(const ChannelModel& model, std::size_t n_tx, std::size_t n_rx,
                                    Rng& rng, Scenario scenario) {
    if (n_tx == 0 || n_rx == 0) throw ConfigError("draw_realization: dims must be positive");

    ChannelRealization r;
    r.scenario = scenario;
    r.kind = model.kind;
    r.n_tx = n_tx;
    r.n_rx = n_rx;

    if (scenario == Scenario::Single) {
        r.h_single = sample_fading(model, rng);
        r.h_alice = sample_fading(model, rng);
        return r;
    }

    r.H.resize(n_tx * n_rx);
    for (auto& h : r.H) h = sample_fading(model, rng);
    r.phases.assign(n_tx, 0.0);
    if (model.kind != FadingKind::AWGN) {
        for (auto& t : r.phases) t = rng.uniform(0.0, 2.0 * M_PI);
    }
    r.h_users_to_bob.resize(n_tx);
    for (auto& h : r.h_users_to_bob) h = sample_fading(model, rng);
    r.h_alice = sample_fading(model, rng);
    r.h_alice_to_rx.resize(n_rx);
    for (auto& h : r.h_alice_to_rx) h = sample_fading(model, rng);
    return r;
}

}  // namespace cwnet::channel
