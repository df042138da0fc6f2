#include "cwnet/autoencoder.hpp"

#include <array>
#include <cmath>

#include "cwnet/errors.hpp"
#include "cwnet/losses.hpp"

namespace cwnet::ae {

using nn::Activation;
using nn::LayerSpec;
using nn::Network;

namespace {

// Appends the conv ladder (filters, kernel, stride) entries that fit the
// running sequence length; returns the resulting flat width.
std::size_t append_conv_ladder(std::vector<LayerSpec>& specs, std::size_t flat,
                               const std::vector<std::array<std::size_t, 3>>& ladder,
                               Activation act) {
    std::size_t channels = 1;
    std::size_t len = flat;
    for (const auto& [filters, kernel, stride] : ladder) {
        if (kernel > len) continue;  // stage does not fit short blocks
        specs.push_back(LayerSpec::conv1d(filters, kernel, stride, act));
        len = (len - kernel) / stride + 1;
        channels = filters;
    }
    return channels * len;
}

const std::vector<std::array<std::size_t, 3>> kAeConvLadder = {
    {1, 2, 1}, {8, 4, 2}, {8, 2, 1}, {8, 2, 1}};

}  // namespace

Network build_encoder(std::size_t n, std::size_t k) {
    const std::size_t M = std::size_t{1} << k;
    const std::size_t w = 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(M, w, Activation::ELU));
    specs.push_back(LayerSpec::dense(w, w, Activation::ELU));
    std::size_t flat = append_conv_ladder(specs, w, kAeConvLadder, Activation::Tanh);
    specs.push_back(LayerSpec::dense(flat, w, Activation::None));
    return Network::build(M, std::move(specs));
}

Network build_decoder(std::size_t n, std::size_t k) {
    const std::size_t M = std::size_t{1} << k;
    const std::size_t w = 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    std::size_t flat = append_conv_ladder(specs, w, kAeConvLadder, Activation::Tanh);
    specs.push_back(LayerSpec::dense(flat, M, Activation::Softmax));
    return Network::build(w, std::move(specs));
}

Network build_estimator(std::size_t n) {
    const std::size_t w = 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(w, 2 * w, Activation::ELU));
    specs.push_back(LayerSpec::dense(2 * w, 4 * w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(4 * w, w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(w, 2, Activation::None));
    return Network::build(w, std::move(specs));
}

Network build_pre_decoder(std::size_t n_tx, std::size_t n) {
    const std::size_t w = n_tx * 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(w, 2 * w, Activation::Tanh));
    std::size_t flat = append_conv_ladder(specs, 2 * w, kAeConvLadder, Activation::Tanh);
    specs.push_back(LayerSpec::dense(flat, 2 * w, Activation::Tanh));
    return Network::build(w, std::move(specs));
}

Network build_decoder_head(std::size_t n_tx, std::size_t n, std::size_t k) {
    const std::size_t M = std::size_t{1} << k;
    const std::size_t in = n_tx * 4 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(in, n_tx * 2 * n, Activation::Tanh));
    specs.push_back(LayerSpec::dense(n_tx * 2 * n, M, Activation::Softmax));
    return Network::build(in, std::move(specs));
}

void System::freeze_all() {
    if (cfg.multi()) {
        for (auto& e : multi.encoders) e.freeze();
        multi.pre_decoder.freeze();
        for (auto& h : multi.heads) h.freeze();
    } else {
        single.encoder.freeze();
        if (cfg.fading()) single.estimator.freeze();
        single.decoder.freeze();
    }
}

bool System::frozen() const {
    return cfg.multi() ? multi.pre_decoder.frozen() : single.decoder.frozen();
}

std::vector<double> System::all_params() const {
    std::vector<double> out;
    auto append = [&out](const Network& net) {
        out.insert(out.end(), net.params().begin(), net.params().end());
    };
    if (cfg.multi()) {
        for (const auto& e : multi.encoders) append(e);
        append(multi.pre_decoder);
        for (const auto& h : multi.heads) append(h);
    } else {
        append(single.encoder);
        if (cfg.fading()) append(single.estimator);
        append(single.decoder);
    }
    return out;
}

System make_system(const AeConfig& cfg, Rng& init_rng) {
    if (cfg.M() < 2) throw ConfigError("autoencoder needs k >= 1");
    System sys;
    sys.cfg = cfg;
    if (cfg.multi()) {
        if (cfg.n_tx < 2) throw ConfigError("multi-user scenario needs n_tx >= 2");
        if (cfg.n_rx < cfg.n_tx) throw ConfigError("multi-user scenario needs n_rx >= n_tx");
        if (!cfg.fading() && cfg.n_rx != cfg.n_tx) {
            throw ConfigError("multi-user AWGN feeds raw antenna streams; needs n_rx == n_tx");
        }
        for (std::size_t i = 0; i < cfg.n_tx; ++i) {
            sys.multi.encoders.push_back(build_encoder(cfg.n, cfg.k));
            sys.multi.encoders.back().init_params(init_rng);
        }
        sys.multi.pre_decoder = build_pre_decoder(cfg.n_tx, cfg.n);
        sys.multi.pre_decoder.init_params(init_rng);
        for (std::size_t i = 0; i < cfg.n_tx; ++i) {
            sys.multi.heads.push_back(build_decoder_head(cfg.n_tx, cfg.n, cfg.k));
            sys.multi.heads.back().init_params(init_rng);
        }
    } else {
        sys.single.encoder = build_encoder(cfg.n, cfg.k);
        sys.single.encoder.init_params(init_rng);
        if (cfg.fading()) {
            sys.single.estimator = build_estimator(cfg.n);
            sys.single.estimator.init_params(init_rng);
        }
        sys.single.decoder = build_decoder(cfg.n, cfg.k);
        sys.single.decoder.init_params(init_rng);
    }
    return sys;
}

void normalize_rows(const Tensor& in, Tensor& out, std::vector<double>& inv_scale) {
    const std::size_t batch = in.shape[0];
    const std::size_t width = in.shape[1];
    const double n_uses = static_cast<double>(width) / 2.0;
    out = Tensor({batch, width});
    inv_scale.assign(batch, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* x = in.ptr() + b * width;
        double p = 0.0;
        for (std::size_t i = 0; i < width; ++i) p += x[i] * x[i];
        p /= n_uses;
        if (!(p > 0.0)) throw UsageError("normalize_rows: degenerate (zero-power) block");
        const double inv = 1.0 / std::sqrt(p);
        inv_scale[b] = inv;
        double* y = out.ptr() + b * width;
        for (std::size_t i = 0; i < width; ++i) y[i] = x[i] * inv;
    }
}

void normalize_rows_backward(const Tensor& x_norm, const std::vector<double>& inv_scale,
                             const Tensor& g_out, Tensor& g_in) {
    const std::size_t batch = x_norm.shape[0];
    const std::size_t width = x_norm.shape[1];
    const double n_uses = static_cast<double>(width) / 2.0;
    g_in = Tensor({batch, width});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* y = x_norm.ptr() + b * width;
        const double* g = g_out.ptr() + b * width;
        double* o = g_in.ptr() + b * width;
        double dot = 0.0;
        for (std::size_t i = 0; i < width; ++i) dot += g[i] * y[i];
        dot /= n_uses;
        const double inv = inv_scale[b];
        for (std::size_t i = 0; i < width; ++i) o[i] = inv * (g[i] - y[i] * dot);
    }
}

void row_add_scaled(double* row, const double* other, cplx a, std::size_t n_uses) {
    const double ar = a.real();
    const double ai = a.imag();
    for (std::size_t i = 0; i < n_uses; ++i) {
        const double re = other[2 * i];
        const double im = other[2 * i + 1];
        row[2 * i] += ar * re - ai * im;
        row[2 * i + 1] += ar * im + ai * re;
    }
}

void encode_forward(const nn::Network& encoder, const std::vector<std::size_t>& msgs,
                    std::size_t M, EncodeState& st) {
    const std::size_t batch = msgs.size();
    st.onehot = Tensor({batch, M});
    for (std::size_t b = 0; b < batch; ++b) {
        if (msgs[b] >= M) throw UsageError("encode: message index out of range");
        st.onehot[b * M + msgs[b]] = 1.0;
    }
    st.raw = encoder.forward(st.onehot, batch, st.tape);
    normalize_rows(st.raw, st.x_norm, st.inv_scale);
}

std::vector<double> encode_backward(const nn::Network& encoder, const EncodeState& st,
                                    const Tensor& g_x_norm) {
    Tensor g_raw;
    normalize_rows_backward(st.x_norm, st.inv_scale, g_x_norm, g_raw);
    nn::BackwardResult res = encoder.backward(st.tape, g_raw);
    return std::move(res.param_grads);
}

void rx_single_forward(const SingleUserSystem& sys, bool fading, const Tensor& rx,
                       RxSingleState& st) {
    const std::size_t batch = rx.shape[0];
    const std::size_t width = rx.shape[1];
    const std::size_t n_uses = width / 2;
    st.rx = rx;
    st.fading = fading;
    if (!fading) {
        st.dec_in = rx;
    } else {
        st.est_out = sys.estimator.forward(rx, batch, st.est_tape);
        st.flagged.assign(batch, 0);
        st.dec_in = Tensor({batch, width});
        for (std::size_t b = 0; b < batch; ++b) {
            const cplx h_hat(st.est_out[b * 2], st.est_out[b * 2 + 1]);
            const double* in = rx.ptr() + b * width;
            double* out = st.dec_in.ptr() + b * width;
            if (std::abs(h_hat) <= channel::kCoefficientFloor) {
                st.flagged[b] = 1;
                for (std::size_t i = 0; i < width; ++i) out[i] = in[i];
                continue;
            }
            const cplx inv = 1.0 / h_hat;
            row_add_scaled(out, in, inv, n_uses);
        }
    }
    st.probs = sys.decoder.forward(st.dec_in, batch, st.dec_tape);
}

RxSingleGrads rx_single_backward(const SingleUserSystem& sys, const RxSingleState& st,
                                 const Tensor& dec_logit_grad) {
    const std::size_t batch = st.rx.shape[0];
    const std::size_t width = st.rx.shape[1];
    const std::size_t n_uses = width / 2;

    RxSingleGrads out;
    nn::BackwardResult dec = sys.decoder.backward_from_logits(st.dec_tape, dec_logit_grad);
    out.decoder = std::move(dec.param_grads);
    if (!st.fading) {
        out.d_rx = std::move(dec.input_grad);
        return out;
    }

    out.d_rx = Tensor({batch, width});
    Tensor d_est({batch, 2});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* g = dec.input_grad.ptr() + b * width;
        double* drx = out.d_rx.ptr() + b * width;
        if (st.flagged[b]) {
            for (std::size_t i = 0; i < width; ++i) drx[i] = g[i];
            continue;
        }
        const cplx h_hat(st.est_out[b * 2], st.est_out[b * 2 + 1]);
        const cplx inv = 1.0 / h_hat;
        // d rx = conj(1/h) g   (division is complex-linear in the signal)
        row_add_scaled(drx, g, std::conj(inv), n_uses);
        // d h = sum_i conj(-y_i / h^2) g_i
        const double* y = st.rx.ptr() + b * width;
        cplx dh(0.0, 0.0);
        const cplx inv2 = inv * inv;
        for (std::size_t i = 0; i < n_uses; ++i) {
            const cplx yi(y[2 * i], y[2 * i + 1]);
            const cplx gi(g[2 * i], g[2 * i + 1]);
            dh += std::conj(-yi * inv2) * gi;
        }
        d_est[b * 2] = dh.real();
        d_est[b * 2 + 1] = dh.imag();
    }
    nn::BackwardResult est = sys.estimator.backward(st.est_tape, d_est);
    out.estimator = std::move(est.param_grads);
    for (std::size_t i = 0; i < out.d_rx.size(); ++i) out.d_rx[i] += est.input_grad[i];
    return out;
}

void rx_multi_forward(const MultiUserSystem& sys, bool fading,
                      const std::vector<ChannelRealization>& reals,
                      const std::vector<Tensor>& antennas, RxMultiState& st) {
    const std::size_t n_rx = antennas.size();
    const std::size_t batch = antennas[0].shape[0];
    const std::size_t width = antennas[0].shape[1];
    const std::size_t n_uses = width / 2;
    const std::size_t n_tx = sys.encoders.size();

    st.antennas = antennas;
    st.fading = fading;
    st.dec_in = Tensor({batch, n_tx * width});
    st.flagged.assign(batch, 0);
    if (fading) {
        st.zf.assign(batch, {});
        for (std::size_t b = 0; b < batch; ++b) {
            channel::ZfMatrix m = channel::zf_matrix(reals[b]);
            if (m.flagged) {
                st.flagged[b] = 1;
                // Pass-through combiner: user u listens to antenna u mod n_rx.
                m.W.assign(n_tx * n_rx, cplx(0.0, 0.0));
                for (std::size_t u = 0; u < n_tx; ++u) m.W[u * n_rx + (u % n_rx)] = 1.0;
            }
            st.zf[b] = std::move(m.W);
            for (std::size_t u = 0; u < n_tx; ++u) {
                double* out = st.dec_in.ptr() + b * n_tx * width + u * width;
                for (std::size_t j = 0; j < n_rx; ++j) {
                    const cplx w = st.zf[b][u * n_rx + j];
                    row_add_scaled(out, antennas[j].ptr() + b * width, w, n_uses);
                }
            }
        }
    } else {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < n_rx; ++j) {
                double* out = st.dec_in.ptr() + b * n_tx * width + j * width;
                const double* in = antennas[j].ptr() + b * width;
                for (std::size_t i = 0; i < width; ++i) out[i] = in[i];
            }
        }
    }

    st.pre_out = sys.pre_decoder.forward(st.dec_in, batch, st.pre_tape);
    st.head_tapes.assign(n_tx, {});
    st.probs.assign(n_tx, {});
    for (std::size_t u = 0; u < n_tx; ++u) {
        st.probs[u] = sys.heads[u].forward(st.pre_out, batch, st.head_tapes[u]);
    }
}

RxMultiGrads rx_multi_backward(const MultiUserSystem& sys, const RxMultiState& st,
                               const std::vector<Tensor>& head_logit_grads) {
    const std::size_t n_rx = st.antennas.size();
    const std::size_t batch = st.antennas[0].shape[0];
    const std::size_t width = st.antennas[0].shape[1];
    const std::size_t n_uses = width / 2;
    const std::size_t n_tx = sys.encoders.size();

    RxMultiGrads out;
    out.heads.resize(n_tx);
    Tensor d_pre({batch, st.pre_out.shape[1]});
    for (std::size_t u = 0; u < n_tx; ++u) {
        nn::BackwardResult h = sys.heads[u].backward_from_logits(st.head_tapes[u],
                                                                 head_logit_grads[u]);
        out.heads[u] = std::move(h.param_grads);
        for (std::size_t i = 0; i < d_pre.size(); ++i) d_pre[i] += h.input_grad[i];
    }
    nn::BackwardResult pre = sys.pre_decoder.backward(st.pre_tape, d_pre);
    out.pre_decoder = std::move(pre.param_grads);

    out.d_antennas.assign(n_rx, Tensor({batch, width}));
    if (st.fading) {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t u = 0; u < n_tx; ++u) {
                const double* g = pre.input_grad.ptr() + b * n_tx * width + u * width;
                for (std::size_t j = 0; j < n_rx; ++j) {
                    const cplx w = st.zf[b][u * n_rx + j];
                    row_add_scaled(out.d_antennas[j].ptr() + b * width, g, std::conj(w), n_uses);
                }
            }
        }
    } else {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < n_rx; ++j) {
                const double* g = pre.input_grad.ptr() + b * n_tx * width + j * width;
                double* o = out.d_antennas[j].ptr() + b * width;
                for (std::size_t i = 0; i < width; ++i) o[i] = g[i];
            }
        }
    }
    return out;
}

namespace {

struct BatchDraws {
    std::vector<ChannelRealization> reals;
    // Noise rows, interleaved re/im: single-user one row per sample, multi
    // one row per antenna per sample (antenna-major within a sample).
    std::vector<Tensor> noise;  // [n_streams] x [batch, 2n]
};

BatchDraws draw_channel_batch(const AeConfig& cfg, std::size_t batch, double sigma2,
                              Rng& chan_rng, Rng& noise_rng) {
    BatchDraws d;
    d.reals.reserve(batch);
    const std::size_t streams = cfg.multi() ? cfg.n_rx : 1;
    d.noise.assign(streams, Tensor({batch, 2 * cfg.n}));
    for (std::size_t b = 0; b < batch; ++b) {
        d.reals.push_back(channel::draw_realization(cfg.model, cfg.n_tx, cfg.n_rx, chan_rng,
                                                    cfg.scenario));
        for (std::size_t j = 0; j < streams; ++j) {
            double* row = d.noise[j].ptr() + b * 2 * cfg.n;
            for (std::size_t i = 0; i < cfg.n; ++i) {
                const cplx z = channel::sample_noise(sigma2, noise_rng);
                row[2 * i] = z.real();
                row[2 * i + 1] = z.imag();
            }
        }
    }
    return d;
}

}  // namespace

TrainResult train_autoencoder(const AeConfig& cfg, const StreamFactory& streams) {
    Rng init_rng = streams.stream("ae.init");
    TrainResult result;
    result.system = make_system(cfg, init_rng);
    System& sys = result.system;

    const std::size_t n_users = cfg.multi() ? cfg.n_tx : 1;
    const std::size_t M = cfg.M();
    const std::size_t width = 2 * cfg.n;
    const double sigma2 = channel::noise_variance(cfg.train_snr_db);

    // Training set: uniform i.i.d. messages, fixed for the whole run.
    Rng data_rng = streams.stream("ae.data");
    std::vector<std::size_t> train_msgs(cfg.train_size * n_users);
    for (auto& m : train_msgs) m = data_rng.uniform_index(M);

    Rng chan_rng = streams.stream("ae.channel");
    Rng noise_rng = streams.stream("ae.noise");

    // Optimizer state per network.
    std::vector<nn::AdamState> enc_states;
    nn::AdamState est_state, dec_state, pre_state;
    std::vector<nn::AdamState> head_states;
    if (cfg.multi()) {
        for (auto& e : sys.multi.encoders) enc_states.push_back(nn::AdamState::for_network(e));
        pre_state = nn::AdamState::for_network(sys.multi.pre_decoder);
        for (auto& h : sys.multi.heads) head_states.push_back(nn::AdamState::for_network(h));
    } else {
        enc_states.push_back(nn::AdamState::for_network(sys.single.encoder));
        if (cfg.fading()) est_state = nn::AdamState::for_network(sys.single.estimator);
        dec_state = nn::AdamState::for_network(sys.single.decoder);
    }

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;
        std::size_t correct = 0;
        std::size_t total = 0;

        for (std::size_t start = 0; start < cfg.train_size; start += cfg.batch) {
            const std::size_t bsz = std::min(cfg.batch, cfg.train_size - start);
            BatchDraws draws = draw_channel_batch(cfg, bsz, sigma2, chan_rng, noise_rng);

            double batch_loss = 0.0;
            if (!cfg.multi()) {
                std::vector<std::size_t> msgs(train_msgs.begin() + start,
                                              train_msgs.begin() + start + bsz);
                EncodeState enc;
                encode_forward(sys.single.encoder, msgs, M, enc);

                Tensor rx = draws.noise[0];
                for (std::size_t b = 0; b < bsz; ++b) {
                    row_add_scaled(rx.ptr() + b * width, enc.x_norm.ptr() + b * width,
                                   draws.reals[b].h_single, cfg.n);
                }

                RxSingleState rxst;
                rx_single_forward(sys.single, cfg.fading(), rx, rxst);
                nn::CeResult ce = nn::cross_entropy(rxst.probs, msgs);
                batch_loss = ce.loss;

                for (std::size_t b = 0; b < bsz; ++b) {
                    const double* p = rxst.probs.ptr() + b * M;
                    std::size_t arg = 0;
                    for (std::size_t c = 1; c < M; ++c)
                        if (p[c] > p[arg]) arg = c;
                    correct += arg == msgs[b];
                    ++total;
                }

                RxSingleGrads rxg = rx_single_backward(sys.single, rxst, ce.logit_grad);
                Tensor g_x({bsz, width});
                for (std::size_t b = 0; b < bsz; ++b) {
                    row_add_scaled(g_x.ptr() + b * width, rxg.d_rx.ptr() + b * width,
                                   std::conj(draws.reals[b].h_single), cfg.n);
                }
                std::vector<double> enc_grads = encode_backward(sys.single.encoder, enc, g_x);

                nn::adam_step(sys.single.encoder, enc_grads, enc_states[0], cfg.lr);
                if (cfg.fading()) {
                    nn::adam_step(sys.single.estimator, rxg.estimator, est_state, cfg.lr);
                }
                nn::adam_step(sys.single.decoder, rxg.decoder, dec_state, cfg.lr);
            } else {
                std::vector<std::vector<std::size_t>> msgs(cfg.n_tx);
                for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                    msgs[u].resize(bsz);
                    for (std::size_t b = 0; b < bsz; ++b) {
                        msgs[u][b] = train_msgs[(start + b) * n_users + u];
                    }
                }
                std::vector<EncodeState> enc(cfg.n_tx);
                for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                    encode_forward(sys.multi.encoders[u], msgs[u], M, enc[u]);
                }

                std::vector<Tensor> antennas = draws.noise;
                for (std::size_t b = 0; b < bsz; ++b) {
                    for (std::size_t j = 0; j < cfg.n_rx; ++j) {
                        double* row = antennas[j].ptr() + b * width;
                        for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                            row_add_scaled(row, enc[u].x_norm.ptr() + b * width,
                                           draws.reals[b].h_eff(u, j), cfg.n);
                        }
                    }
                }

                RxMultiState rxst;
                rx_multi_forward(sys.multi, cfg.fading(), draws.reals, antennas, rxst);

                std::vector<Tensor> logit_grads(cfg.n_tx);
                for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                    nn::CeResult ce = nn::cross_entropy(rxst.probs[u], msgs[u]);
                    batch_loss += ce.loss;  // summed over users
                    logit_grads[u] = std::move(ce.logit_grad);
                    for (std::size_t b = 0; b < bsz; ++b) {
                        const double* p = rxst.probs[u].ptr() + b * M;
                        std::size_t arg = 0;
                        for (std::size_t c = 1; c < M; ++c)
                            if (p[c] > p[arg]) arg = c;
                        correct += arg == msgs[u][b];
                        ++total;
                    }
                }

                RxMultiGrads rxg = rx_multi_backward(sys.multi, rxst, logit_grads);
                for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                    Tensor g_x({bsz, width});
                    for (std::size_t b = 0; b < bsz; ++b) {
                        for (std::size_t j = 0; j < cfg.n_rx; ++j) {
                            row_add_scaled(g_x.ptr() + b * width,
                                           rxg.d_antennas[j].ptr() + b * width,
                                           std::conj(draws.reals[b].h_eff(u, j)), cfg.n);
                        }
                    }
                    std::vector<double> eg = encode_backward(sys.multi.encoders[u], enc[u], g_x);
                    nn::adam_step(sys.multi.encoders[u], eg, enc_states[u], cfg.lr);
                }
                nn::adam_step(sys.multi.pre_decoder, rxg.pre_decoder, pre_state, cfg.lr);
                for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                    nn::adam_step(sys.multi.heads[u], rxg.heads[u], head_states[u], cfg.lr);
                }
            }

            if (!std::isfinite(batch_loss)) {
                throw NumericalError("train_autoencoder: loss diverged (epoch " +
                                     std::to_string(epoch) + ")");
            }
            epoch_loss += batch_loss;
            ++epoch_batches;
        }

        CurvePoint pt;
        pt.epoch = epoch;
        pt.loss = epoch_loss / static_cast<double>(epoch_batches);
        pt.accuracy = static_cast<double>(correct) / static_cast<double>(total);
        result.curve.push_back(pt);
    }

    return result;
}

std::vector<SignalBlock> codebook(const nn::Network& encoder, std::size_t M) {
    std::vector<std::size_t> msgs(M);
    for (std::size_t s = 0; s < M; ++s) msgs[s] = s;
    EncodeState st;
    encode_forward(encoder, msgs, M, st);
    std::vector<SignalBlock> book;
    const std::size_t width = st.x_norm.shape[1];
    for (std::size_t s = 0; s < M; ++s) {
        book.push_back(channel::row_to_block(st.x_norm.ptr() + s * width, width / 2));
    }
    return book;
}

std::vector<BlerRow> evaluate_bler(const System& sys, const std::vector<double>& snr_db_list,
                                   std::size_t trials_per_snr, const StreamFactory& streams) {
    const AeConfig& cfg = sys.cfg;
    const std::size_t n_users = cfg.multi() ? cfg.n_tx : 1;
    const std::size_t M = cfg.M();
    const std::size_t width = 2 * cfg.n;

    std::vector<std::vector<SignalBlock>> books;
    if (cfg.multi()) {
        for (const auto& e : sys.multi.encoders) books.push_back(codebook(e, M));
    } else {
        books.push_back(codebook(sys.single.encoder, M));
    }

    // Per-point rows, assembled in index order after the (parallelizable)
    // point loop. Each point derives its own streams from its index.
    std::vector<std::vector<BlerRow>> per_point(snr_db_list.size());

#pragma omp parallel for schedule(dynamic)
    for (long long pi = 0; pi < static_cast<long long>(snr_db_list.size()); ++pi) {
        const double snr_db = snr_db_list[pi];
        const double sigma2 = channel::noise_variance(snr_db);
        Rng msg_rng = streams.stream("eval.msg", pi);
        Rng chan_rng = streams.stream("eval.chan", pi);
        Rng noise_rng = streams.stream("eval.noise", pi);

        std::vector<std::size_t> user_errors(n_users, 0);
        std::size_t joint_errors = 0;

        const std::size_t chunk = 1024;
        for (std::size_t done = 0; done < trials_per_snr; done += chunk) {
            const std::size_t bsz = std::min(chunk, trials_per_snr - done);
            std::vector<std::vector<std::size_t>> msgs(n_users,
                                                       std::vector<std::size_t>(bsz));
            std::vector<ChannelRealization> reals(bsz);
            const std::size_t streams_n = cfg.multi() ? cfg.n_rx : 1;
            std::vector<Tensor> noise(streams_n, Tensor({bsz, width}));
            for (std::size_t b = 0; b < bsz; ++b) {
                for (std::size_t u = 0; u < n_users; ++u) {
                    msgs[u][b] = msg_rng.uniform_index(M);
                }
                reals[b] = channel::draw_realization(cfg.model, cfg.n_tx, cfg.n_rx, chan_rng,
                                                     cfg.scenario);
                for (std::size_t j = 0; j < streams_n; ++j) {
                    double* row = noise[j].ptr() + b * width;
                    for (std::size_t i = 0; i < cfg.n; ++i) {
                        const cplx z = channel::sample_noise(sigma2, noise_rng);
                        row[2 * i] = z.real();
                        row[2 * i + 1] = z.imag();
                    }
                }
            }

            std::vector<double> xrow(width);
            if (!cfg.multi()) {
                Tensor rx = noise[0];
                for (std::size_t b = 0; b < bsz; ++b) {
                    channel::block_to_row(books[0][msgs[0][b]], xrow.data());
                    row_add_scaled(rx.ptr() + b * width, xrow.data(), reals[b].h_single, cfg.n);
                }
                RxSingleState st;
                rx_single_forward(sys.single, cfg.fading(), rx, st);
                for (std::size_t b = 0; b < bsz; ++b) {
                    const double* p = st.probs.ptr() + b * M;
                    std::size_t arg = 0;
                    for (std::size_t c = 1; c < M; ++c)
                        if (p[c] > p[arg]) arg = c;
                    const bool err = arg != msgs[0][b];
                    user_errors[0] += err;
                    joint_errors += err;
                }
            } else {
                std::vector<Tensor> antennas = noise;
                for (std::size_t b = 0; b < bsz; ++b) {
                    for (std::size_t j = 0; j < cfg.n_rx; ++j) {
                        double* row = antennas[j].ptr() + b * width;
                        for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                            channel::block_to_row(books[u][msgs[u][b]], xrow.data());
                            row_add_scaled(row, xrow.data(), reals[b].h_eff(u, j), cfg.n);
                        }
                    }
                }
                RxMultiState st;
                rx_multi_forward(sys.multi, cfg.fading(), reals, antennas, st);
                for (std::size_t b = 0; b < bsz; ++b) {
                    bool any_err = false;
                    for (std::size_t u = 0; u < n_users; ++u) {
                        const double* p = st.probs[u].ptr() + b * M;
                        std::size_t arg = 0;
                        for (std::size_t c = 1; c < M; ++c)
                            if (p[c] > p[arg]) arg = c;
                        const bool err = arg != msgs[u][b];
                        user_errors[u] += err;
                        any_err |= err;
                    }
                    joint_errors += any_err;
                }
            }
        }

        std::vector<BlerRow> rows;
        for (std::size_t u = 0; u < n_users; ++u) {
            BlerRow r;
            r.snr_db = snr_db;
            r.user_id = static_cast<int>(u);
            r.blocks = trials_per_snr;
            r.errors = user_errors[u];
            r.bler = static_cast<double>(user_errors[u]) / static_cast<double>(trials_per_snr);
            rows.push_back(r);
        }
        if (cfg.multi()) {
            BlerRow r;
            r.snr_db = snr_db;
            r.user_id = -1;  // joint block metric
            r.blocks = trials_per_snr;
            r.errors = joint_errors;
            r.bler = static_cast<double>(joint_errors) / static_cast<double>(trials_per_snr);
            rows.push_back(r);
        }
        per_point[pi] = std::move(rows);
    }

    std::vector<BlerRow> out;
    for (auto& rows : per_point) out.insert(out.end(), rows.begin(), rows.end());
    return out;
}

}  // namespace cwnet::ae
