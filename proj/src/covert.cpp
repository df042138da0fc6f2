#include "cwnet/covert.hpp"

#include <array>
#include <cmath>

#include "cwnet/errors.hpp"
#include "cwnet/losses.hpp"

namespace cwnet::covert {

using nn::Activation;
using nn::LayerSpec;
using nn::Network;

void CovertConfig::validate() const {
    if (k_c == 0) throw ConfigError("covert config: k_c must be >= 1");
    if (lambda_b < 0.0 || lambda_u < 0.0 || lambda_w < 0.0) {
        throw ConfigError("covert config: loss weights must be nonnegative");
    }
    if (snr_low_db > snr_high_db) {
        throw ConfigError("covert config: snr_low_db exceeds snr_high_db");
    }
    if (batch == 0 || train_size == 0) throw ConfigError("covert config: empty batch/train set");
}

std::size_t alice_input_dim(const AeConfig& ae_cfg, const CovertConfig& cfg) {
    std::size_t dim = cfg.trigger_dim + cfg.Mc();
    if (ae_cfg.fading()) {
        dim += 2;  // Alice -> Bob coefficient
        if (ae_cfg.multi()) {
            dim += 2 * ae_cfg.n_tx;                 // users -> Bob
            dim += 2 * ae_cfg.n_tx * ae_cfg.n_rx;   // vec(H_eff)
        }
    }
    return dim;
}

Network build_alice(const AeConfig& ae_cfg, const CovertConfig& cfg) {
    const std::size_t in = alice_input_dim(ae_cfg, cfg);
    const std::size_t base = 32 + (std::size_t{1} << (cfg.k_c + 1));
    const std::size_t narrow = 8 * cfg.Mc();
    const std::size_t out = 2 * ae_cfg.n;

    std::vector<LayerSpec> specs;
    if (ae_cfg.multi() && ae_cfg.fading()) {
        const std::size_t wide = base + 2 * ae_cfg.n_tx * ae_cfg.n_rx;
        specs.push_back(LayerSpec::dense(in, wide, Activation::ReLU));
        specs.push_back(LayerSpec::dense(wide, base, Activation::ReLU));
        specs.push_back(LayerSpec::dense(base, base, Activation::ReLU));
        specs.push_back(LayerSpec::dense(base, narrow, Activation::ReLU));
    } else {
        specs.push_back(LayerSpec::dense(in, base, Activation::ReLU));
        specs.push_back(LayerSpec::dense(base, base, Activation::ReLU));
        specs.push_back(LayerSpec::dense(base, narrow, Activation::ReLU));
    }
    specs.push_back(LayerSpec::dense(narrow, out, Activation::Tanh));
    return Network::build(in, std::move(specs));
}

namespace {

const std::vector<std::array<std::size_t, 3>> kDetectorConvLadder = {
    {1, 1, 1}, {8, 2, 1}, {8, 4, 2}, {8, 2, 1}, {8, 2, 1}};

std::size_t append_detector_convs(std::vector<LayerSpec>& specs, std::size_t flat) {
    std::size_t channels = 1;
    std::size_t len = flat;
    for (const auto& [filters, kernel, stride] : kDetectorConvLadder) {
        if (kernel > len) continue;
        specs.push_back(LayerSpec::conv1d(filters, kernel, stride, Activation::LeakyReLU));
        len = (len - kernel) / stride + 1;
        channels = filters;
    }
    return channels * len;
}

}  // namespace

Network build_bob(std::size_t n, std::size_t k_c) {
    const std::size_t w = 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    const std::size_t flat = append_detector_convs(specs, w);
    specs.push_back(LayerSpec::dense(flat, std::size_t{1} << k_c, Activation::Softmax));
    return Network::build(w, std::move(specs));
}

Network build_willie(std::size_t n) {
    const std::size_t w = 2 * n;
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    specs.push_back(LayerSpec::dense(w, w, Activation::Tanh));
    const std::size_t flat = append_detector_convs(specs, w);
    specs.push_back(LayerSpec::dense(flat, 1, Activation::Sigmoid));
    return Network::build(w, std::move(specs));
}

CovertTriple make_triple(const AeConfig& ae_cfg, const CovertConfig& cfg, Rng& init_rng) {
    CovertTriple t;
    t.alice = build_alice(ae_cfg, cfg);
    t.alice.init_params(init_rng);
    t.bob = build_bob(ae_cfg.n, cfg.k_c);
    t.bob.init_params(init_rng);
    t.willie = build_willie(ae_cfg.n);
    t.willie.init_params(init_rng);
    return t;
}

CovertBatch draw_covert_batch(const AeConfig& ae_cfg, const CovertConfig& cfg,
                              const std::size_t* s, const std::size_t* m, std::size_t batch,
                              double snr_db, Rng& trigger_rng, Rng& chan_rng, Rng& noise_rng,
                              Rng& bob_noise_rng) {
    const std::size_t n_users = ae_cfg.multi() ? ae_cfg.n_tx : 1;
    const std::size_t width = 2 * ae_cfg.n;

    CovertBatch b;
    b.snr_db = snr_db;
    b.sigma2 = channel::noise_variance(snr_db);
    b.batch = batch;
    b.s.assign(s, s + batch * n_users);
    b.m.assign(m, m + batch);
    b.triggers = Tensor({batch, cfg.trigger_dim});
    b.reals.reserve(batch);
    b.noise_main = Tensor({batch, width});
    if (ae_cfg.multi()) b.noise_rx.assign(ae_cfg.n_rx, Tensor({batch, width}));

    for (std::size_t i = 0; i < batch; ++i) {
        double* trig = b.triggers.ptr() + i * cfg.trigger_dim;
        for (std::size_t t = 0; t < cfg.trigger_dim; ++t) trig[t] = trigger_rng.normal();
        b.reals.push_back(channel::draw_realization(ae_cfg.model, ae_cfg.n_tx, ae_cfg.n_rx,
                                                    chan_rng, ae_cfg.scenario));
        if (ae_cfg.multi()) {
            for (std::size_t j = 0; j < ae_cfg.n_rx; ++j) {
                double* row = b.noise_rx[j].ptr() + i * width;
                for (std::size_t u = 0; u < ae_cfg.n; ++u) {
                    const cplx z = channel::sample_noise(b.sigma2, noise_rng);
                    row[2 * u] = z.real();
                    row[2 * u + 1] = z.imag();
                }
            }
            double* row = b.noise_main.ptr() + i * width;
            for (std::size_t u = 0; u < ae_cfg.n; ++u) {
                const cplx z = channel::sample_noise(b.sigma2, bob_noise_rng);
                row[2 * u] = z.real();
                row[2 * u + 1] = z.imag();
            }
        } else {
            double* row = b.noise_main.ptr() + i * width;
            for (std::size_t u = 0; u < ae_cfg.n; ++u) {
                const cplx z = channel::sample_noise(b.sigma2, noise_rng);
                row[2 * u] = z.real();
                row[2 * u + 1] = z.imag();
            }
        }
    }
    return b;
}

Tensor alice_conditioning(const AeConfig& ae_cfg, const CovertConfig& cfg, std::size_t m,
                          const double* trigger, const ChannelRealization& real) {
    if (m >= cfg.Mc()) throw UsageError("alice: covert message index out of range");
    const std::size_t dim = alice_input_dim(ae_cfg, cfg);
    Tensor in({1, dim});
    double* p = in.ptr();
    for (std::size_t t = 0; t < cfg.trigger_dim; ++t) *p++ = trigger[t];
    for (std::size_t c = 0; c < cfg.Mc(); ++c) *p++ = (c == m) ? 1.0 : 0.0;
    if (ae_cfg.fading()) {
        *p++ = real.h_alice.real();
        *p++ = real.h_alice.imag();
        if (ae_cfg.multi()) {
            if (real.h_users_to_bob.size() != ae_cfg.n_tx || real.H.empty()) {
                throw ConfigError("alice: realization lacks multi-user fading features");
            }
            for (std::size_t i = 0; i < ae_cfg.n_tx; ++i) {
                *p++ = real.h_users_to_bob[i].real();
                *p++ = real.h_users_to_bob[i].imag();
            }
            for (std::size_t i = 0; i < ae_cfg.n_tx; ++i) {
                for (std::size_t j = 0; j < ae_cfg.n_rx; ++j) {
                    const cplx h = real.h_eff(i, j);
                    *p++ = h.real();
                    *p++ = h.imag();
                }
            }
        }
    }
    return in;
}

SignalBlock alice_generate(const nn::Network& alice, const AeConfig& ae_cfg,
                           const CovertConfig& cfg, std::size_t m, const double* trigger,
                           const ChannelRealization& real) {
    const Tensor in = alice_conditioning(ae_cfg, cfg, m, trigger, real);
    const Tensor z = alice.forward(in, 1);
    return channel::row_to_block(z.ptr(), ae_cfg.n);
}

SignalBlock covert_output_single(const SignalBlock& x, const SignalBlock& z,
                                 const ChannelRealization& real, double sigma2, Rng& rng) {
    if (x.n() != z.n()) throw ConfigError("covert_output: block length mismatch");
    SignalBlock y(x.n());
    for (std::size_t i = 0; i < x.n(); ++i) {
        y[i] = real.h_single * x[i] + real.h_alice * z[i];
    }
    return channel::add_noise(y, sigma2, rng);
}

MultiCovertOutput covert_output_multi(const std::vector<SignalBlock>& xs, const SignalBlock& z,
                                      const ChannelRealization& real, double sigma2, Rng& rng) {
    if (xs.size() != real.n_tx) throw ConfigError("covert_output: transmitter count mismatch");
    const std::size_t n = z.n();

    MultiCovertOutput out;
    out.antennas.reserve(real.n_rx);
    for (std::size_t j = 0; j < real.n_rx; ++j) {
        SignalBlock y(n);
        for (std::size_t i = 0; i < real.n_tx; ++i) {
            const cplx h = real.h_eff(i, j);
            for (std::size_t u = 0; u < n; ++u) y[u] += h * xs[i][u];
        }
        const cplx a = real.h_alice_to_rx.empty() ? cplx(1.0, 0.0) : real.h_alice_to_rx[j];
        for (std::size_t u = 0; u < n; ++u) y[u] += a * z[u];
        out.antennas.push_back(channel::add_noise(y, sigma2, rng));
    }

    SignalBlock yb(n);
    for (std::size_t i = 0; i < real.n_tx; ++i) {
        const cplx h = real.h_users_to_bob[i];
        for (std::size_t u = 0; u < n; ++u) yb[u] += h * xs[i][u];
    }
    for (std::size_t u = 0; u < n; ++u) yb[u] += real.h_alice * z[u];
    out.y_bob = channel::add_noise(yb, sigma2, rng);
    return out;
}

BobDecode bob_decode(const nn::Network& bob, const SignalBlock& y) {
    Tensor in({1, 2 * y.n()});
    channel::block_to_row(y, in.ptr());
    BobDecode out;
    out.probs = bob.forward(in, 1);
    for (std::size_t c = 1; c < out.probs.size(); ++c) {
        if (out.probs[c] > out.probs[out.m_hat]) out.m_hat = c;
    }
    return out;
}

double willie_score(const nn::Network& willie, const SignalBlock& y) {
    Tensor in({1, 2 * y.n()});
    channel::block_to_row(y, in.ptr());
    return willie.forward(in, 1)[0];
}

double alice_loss(const ComponentLosses& l, double lambda_b, double lambda_u, double lambda_w) {
    return lambda_b * l.l_b + lambda_u * l.l_u - lambda_w * l.l_w;
}

// ---------------------------------------------------------------------------

namespace {

struct Views {
    // Covert / clean received tensors assembled from one batch's draws.
    Tensor y_cov_main, y_clean_main;
    std::vector<Tensor> ant_cov, ant_clean;
};

void assemble_views(const ae::System& sys, const CovertBatch& batch,
                    const std::vector<ae::EncodeState>& enc, const Tensor& z, Views& v) {
    const AeConfig& cfg = sys.cfg;
    const std::size_t width = 2 * cfg.n;
    const std::size_t bsz = batch.batch;

    if (!cfg.multi()) {
        v.y_clean_main = batch.noise_main;
        for (std::size_t b = 0; b < bsz; ++b) {
            ae::row_add_scaled(v.y_clean_main.ptr() + b * width, enc[0].x_norm.ptr() + b * width,
                               batch.reals[b].h_single, cfg.n);
        }
        v.y_cov_main = v.y_clean_main;
        for (std::size_t b = 0; b < bsz; ++b) {
            ae::row_add_scaled(v.y_cov_main.ptr() + b * width, z.ptr() + b * width,
                               batch.reals[b].h_alice, cfg.n);
        }
        return;
    }

    // BaseRX antennas.
    v.ant_clean = batch.noise_rx;
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t j = 0; j < cfg.n_rx; ++j) {
            double* row = v.ant_clean[j].ptr() + b * width;
            for (std::size_t u = 0; u < cfg.n_tx; ++u) {
                ae::row_add_scaled(row, enc[u].x_norm.ptr() + b * width,
                                   batch.reals[b].h_eff(u, j), cfg.n);
            }
        }
    }
    v.ant_cov = v.ant_clean;
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t j = 0; j < cfg.n_rx; ++j) {
            const cplx a = batch.reals[b].h_alice_to_rx[j];
            ae::row_add_scaled(v.ant_cov[j].ptr() + b * width, z.ptr() + b * width, a, cfg.n);
        }
    }

    // Bob's single antenna.
    v.y_cov_main = batch.noise_main;
    for (std::size_t b = 0; b < bsz; ++b) {
        double* row = v.y_cov_main.ptr() + b * width;
        for (std::size_t u = 0; u < cfg.n_tx; ++u) {
            ae::row_add_scaled(row, enc[u].x_norm.ptr() + b * width,
                               batch.reals[b].h_users_to_bob[u], cfg.n);
        }
        ae::row_add_scaled(row, z.ptr() + b * width, batch.reals[b].h_alice, cfg.n);
    }
}

std::size_t argmax_row(const double* p, std::size_t m) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < m; ++c)
        if (p[c] > p[arg]) arg = c;
    return arg;
}

}  // namespace

void pipeline_forward(const System& sys, const CovertTriple& triple, const CovertConfig& cfg,
                      const CovertBatch& batch, const ForwardParts& parts, PipelineState& st) {
    const AeConfig& acfg = sys.cfg;
    if (!sys.frozen()) throw UsageError("covert pipeline requires a frozen user system");
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;
    const std::size_t bsz = batch.batch;
    const std::size_t width = 2 * acfg.n;

    // Frozen normal-user signals.
    st.enc.assign(n_users, {});
    for (std::size_t u = 0; u < n_users; ++u) {
        std::vector<std::size_t> msgs(bsz);
        for (std::size_t b = 0; b < bsz; ++b) msgs[b] = batch.s[b * n_users + u];
        const nn::Network& enc =
            acfg.multi() ? sys.multi.encoders[u] : sys.single.encoder;
        ae::encode_forward(enc, msgs, acfg.M(), st.enc[u]);
    }

    // Alice.
    const std::size_t in_dim = alice_input_dim(acfg, cfg);
    st.alice_in = Tensor({bsz, in_dim});
    for (std::size_t b = 0; b < bsz; ++b) {
        const Tensor row = alice_conditioning(acfg, cfg, batch.m[b],
                                              batch.triggers.ptr() + b * cfg.trigger_dim,
                                              batch.reals[b]);
        double* dst = st.alice_in.ptr() + b * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) dst[i] = row[i];
    }
    st.z = triple.alice.forward(st.alice_in, bsz, st.alice_tape);
    Tensor z_used = st.z;
    if (parts.silence_alice) z_used = Tensor({bsz, width});  // zeros

    Views v;
    assemble_views(sys, batch, st.enc, z_used, v);
    st.y_cov_main = std::move(v.y_cov_main);
    st.y_clean_main = std::move(v.y_clean_main);
    st.ant_cov = std::move(v.ant_cov);
    st.ant_clean = std::move(v.ant_clean);

    if (parts.user) {
        if (acfg.multi()) {
            ae::rx_multi_forward(sys.multi, acfg.fading(), batch.reals, st.ant_cov, st.rx_cov_m);
        } else {
            ae::rx_single_forward(sys.single, acfg.fading(), st.y_cov_main, st.rx_cov_s);
        }
    }
    if (parts.clean_user) {
        if (acfg.multi()) {
            ae::rx_multi_forward(sys.multi, acfg.fading(), batch.reals, st.ant_clean,
                                 st.rx_clean_m);
        } else {
            ae::rx_single_forward(sys.single, acfg.fading(), st.y_clean_main, st.rx_clean_s);
        }
    }
    if (parts.bob) {
        st.bob_probs = triple.bob.forward(st.y_cov_main, bsz, st.bob_tape);
    }
    if (parts.willie) {
        const Tensor& cov_obs = acfg.multi() ? st.ant_cov[0] : st.y_cov_main;
        const Tensor& norm_obs = acfg.multi() ? st.ant_clean[0] : st.y_clean_main;
        st.w_cov = triple.willie.forward(cov_obs, bsz, st.willie_cov_tape);
        st.w_norm = triple.willie.forward(norm_obs, bsz, st.willie_norm_tape);
    }
}

namespace {

// L_U and its per-user fused logit grads on the covert receive path.
double user_loss_and_grads(const ae::System& sys, const CovertBatch& batch, PipelineState& st,
                           std::vector<Tensor>* logit_grads) {
    const AeConfig& acfg = sys.cfg;
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;
    const std::size_t bsz = batch.batch;
    double loss = 0.0;
    if (logit_grads) logit_grads->assign(n_users, {});
    for (std::size_t u = 0; u < n_users; ++u) {
        std::vector<std::size_t> msgs(bsz);
        for (std::size_t b = 0; b < bsz; ++b) msgs[b] = batch.s[b * n_users + u];
        const Tensor& probs = acfg.multi() ? st.rx_cov_m.probs[u] : st.rx_cov_s.probs;
        nn::CeResult ce = nn::cross_entropy(probs, msgs);
        loss += ce.loss;  // summed over users
        if (logit_grads) (*logit_grads)[u] = std::move(ce.logit_grad);
    }
    return loss;
}

double willie_pair_loss(const CovertConfig& cfg, std::size_t n_users_factor,
                        const PipelineState& st, nn::BceBatchResult* cov_out,
                        nn::BceBatchResult* norm_out) {
    const std::size_t bsz = st.w_cov.size();
    std::vector<int> zeros(bsz, 0), ones(bsz, 1);
    nn::BceBatchResult cov = nn::binary_cross_entropy_batch(st.w_cov, zeros);
    nn::BceBatchResult norm = nn::binary_cross_entropy_batch(st.w_norm, ones);
    const double loss =
        0.5 * (cov.loss + norm.loss) * static_cast<double>(n_users_factor);
    if (cov_out) *cov_out = std::move(cov);
    if (norm_out) *norm_out = std::move(norm);
    (void)cfg;
    return loss;
}

}  // namespace

ComponentLosses component_losses(const System& sys, const CovertTriple& triple,
                                 const CovertConfig& cfg, const CovertBatch& batch,
                                 PipelineState* state_out) {
    PipelineState local;
    PipelineState& st = state_out ? *state_out : local;
    ForwardParts parts;
    parts.user = true;
    parts.clean_user = true;
    parts.bob = true;
    parts.willie = true;
    pipeline_forward(sys, triple, cfg, batch, parts, st);

    const std::size_t n_users_factor = sys.cfg.multi() ? sys.cfg.n_tx : 1;
    ComponentLosses l;
    nn::CeResult ce_b = nn::cross_entropy(st.bob_probs, batch.m);
    l.l_b = ce_b.loss;
    l.l_u = user_loss_and_grads(sys, batch, st, nullptr);
    l.l_w = willie_pair_loss(cfg, n_users_factor, st, nullptr, nullptr);
    return l;
}

AliceStep alice_loss_and_grads(const System& sys, const CovertTriple& triple,
                               const CovertConfig& cfg, const CovertBatch& batch) {
    const AeConfig& acfg = sys.cfg;
    const std::size_t bsz = batch.batch;
    const std::size_t width = 2 * acfg.n;
    const std::size_t n_users_factor = acfg.multi() ? acfg.n_tx : 1;

    AliceStep out;
    ForwardParts parts;
    parts.user = true;
    parts.clean_user = true;  // Willie's normal observation
    parts.bob = true;
    parts.willie = true;
    pipeline_forward(sys, triple, cfg, batch, parts, out.state);
    PipelineState& st = out.state;

    // Losses.
    nn::CeResult ce_b = nn::cross_entropy(st.bob_probs, batch.m);
    std::vector<Tensor> user_logit_grads;
    const double l_u = user_loss_and_grads(sys, batch, st, &user_logit_grads);
    nn::BceBatchResult bce_cov, bce_norm;
    const double l_w = willie_pair_loss(cfg, n_users_factor, st, &bce_cov, &bce_norm);
    out.losses = {ce_b.loss, l_u, l_w};
    out.l_a = alice_loss(out.losses, cfg.lambda_b, cfg.lambda_u, cfg.lambda_w);

    // Bob path: lambda_b * dL_B.
    for (double& g : ce_b.logit_grad.data) g *= cfg.lambda_b;
    nn::BackwardResult bob_bw = triple.bob.backward_from_logits(st.bob_tape, ce_b.logit_grad);

    // User path: lambda_u * dL_U (summed over users).
    Tensor d_user_main;                  // single: on y_cov_main
    std::vector<Tensor> d_user_ant;      // multi: on ant_cov
    if (acfg.multi()) {
        for (auto& t : user_logit_grads)
            for (double& g : t.data) g *= cfg.lambda_u;
        ae::RxMultiGrads rg = ae::rx_multi_backward(sys.multi, st.rx_cov_m, user_logit_grads);
        d_user_ant = std::move(rg.d_antennas);
    } else {
        for (double& g : user_logit_grads[0].data) g *= cfg.lambda_u;
        ae::RxSingleGrads rg = ae::rx_single_backward(sys.single, st.rx_cov_s,
                                                      user_logit_grads[0]);
        d_user_main = std::move(rg.d_rx);
    }

    // Willie path: only the covert observation depends on Z;
    // d(-lambda_w L_W)/d logits = -lambda_w * factor * 0.5 * (p - 0)/batch.
    const double wscale = -cfg.lambda_w * 0.5 * static_cast<double>(n_users_factor);
    for (double& g : bce_cov.logit_grad.data) g *= wscale;
    nn::BackwardResult willie_bw =
        triple.willie.backward_from_logits(st.willie_cov_tape, bce_cov.logit_grad);

    // Accumulate dL_A/dZ through the channel constants.
    Tensor dz({bsz, width});
    if (!acfg.multi()) {
        Tensor d_main = std::move(bob_bw.input_grad);
        for (std::size_t i = 0; i < d_main.size(); ++i) {
            d_main[i] += d_user_main[i] + willie_bw.input_grad[i];
        }
        for (std::size_t b = 0; b < bsz; ++b) {
            ae::row_add_scaled(dz.ptr() + b * width, d_main.ptr() + b * width,
                               std::conj(batch.reals[b].h_alice), acfg.n);
        }
    } else {
        // Bob's antenna.
        for (std::size_t b = 0; b < bsz; ++b) {
            ae::row_add_scaled(dz.ptr() + b * width, bob_bw.input_grad.ptr() + b * width,
                               std::conj(batch.reals[b].h_alice), acfg.n);
        }
        // BaseRX antennas: user path everywhere, Willie on antenna 0.
        for (std::size_t i = 0; i < willie_bw.input_grad.size(); ++i) {
            d_user_ant[0][i] += willie_bw.input_grad[i];
        }
        for (std::size_t j = 0; j < acfg.n_rx; ++j) {
            for (std::size_t b = 0; b < bsz; ++b) {
                ae::row_add_scaled(dz.ptr() + b * width, d_user_ant[j].ptr() + b * width,
                                   std::conj(batch.reals[b].h_alice_to_rx[j]), acfg.n);
            }
        }
    }

    nn::BackwardResult alice_bw = triple.alice.backward(st.alice_tape, dz);
    out.alice_grads = std::move(alice_bw.param_grads);
    return out;
}

namespace {

struct WillieStep {
    std::vector<double> grads;
    double loss = 0.0;
};

WillieStep willie_loss_and_grads(const System& sys, const CovertTriple& triple,
                                 const CovertConfig& cfg, const CovertBatch& batch) {
    const std::size_t n_users_factor = sys.cfg.multi() ? sys.cfg.n_tx : 1;
    PipelineState st;
    ForwardParts parts;
    parts.user = false;
    parts.clean_user = true;
    parts.bob = false;
    parts.willie = true;
    pipeline_forward(sys, triple, cfg, batch, parts, st);

    nn::BceBatchResult cov, norm;
    WillieStep out;
    out.loss = willie_pair_loss(cfg, n_users_factor, st, &cov, &norm);

    const double f = 0.5 * static_cast<double>(n_users_factor);
    for (double& g : cov.logit_grad.data) g *= f;
    for (double& g : norm.logit_grad.data) g *= f;
    nn::BackwardResult bw_cov =
        triple.willie.backward_from_logits(st.willie_cov_tape, cov.logit_grad);
    nn::BackwardResult bw_norm =
        triple.willie.backward_from_logits(st.willie_norm_tape, norm.logit_grad);
    out.grads = std::move(bw_cov.param_grads);
    for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += bw_norm.param_grads[i];
    return out;
}

struct BobStep {
    std::vector<double> grads;
    double loss = 0.0;
};

BobStep bob_loss_and_grads(const System& sys, const CovertTriple& triple, const CovertConfig& cfg,
                           const CovertBatch& batch) {
    PipelineState st;
    ForwardParts parts;
    parts.user = false;
    parts.clean_user = false;
    parts.bob = true;
    parts.willie = false;
    pipeline_forward(sys, triple, cfg, batch, parts, st);

    nn::CeResult ce = nn::cross_entropy(st.bob_probs, batch.m);
    BobStep out;
    out.loss = ce.loss;
    nn::BackwardResult bw = triple.bob.backward_from_logits(st.bob_tape, ce.logit_grad);
    out.grads = std::move(bw.param_grads);
    return out;
}

}  // namespace

CovertTrainResult train_covert(const System& sys, const CovertConfig& cfg,
                               const StreamFactory& streams) {
    cfg.validate();
    if (!sys.frozen()) throw UsageError("train_covert: user system must be frozen first");
    const AeConfig& acfg = sys.cfg;
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;

    Rng init_rng = streams.stream("covert.init");
    CovertTrainResult result;
    result.triple = make_triple(acfg, cfg, init_rng);
    CovertTriple& triple = result.triple;

    // Paired datasets: each covert message rides with normal message(s).
    Rng s_rng = streams.stream("covert.data.s");
    Rng m_rng = streams.stream("covert.data.m");
    std::vector<std::size_t> s_train(cfg.train_size * n_users);
    for (auto& v : s_train) v = s_rng.uniform_index(acfg.M());
    std::vector<std::size_t> m_train(cfg.train_size);
    for (auto& v : m_train) v = m_rng.uniform_index(cfg.Mc());

    Rng snr_rng = streams.stream("covert.snr");
    Rng trigger_rng = streams.stream("covert.trigger");
    Rng chan_rng = streams.stream("covert.chan");
    Rng noise_rng = streams.stream("covert.noise");
    Rng bob_noise_rng = streams.stream("covert.noise.bob");

    nn::AdamState alice_state = nn::AdamState::for_network(triple.alice);
    nn::AdamState bob_state = nn::AdamState::for_network(triple.bob);
    nn::AdamState willie_state = nn::AdamState::for_network(triple.willie);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = epoch <= cfg.lr_drop_epoch ? cfg.lr_initial : cfg.lr_late;
        const double snr_db = snr_rng.uniform(cfg.snr_low_db, cfg.snr_high_db);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.snr_db = snr_db;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < cfg.train_size; start += cfg.batch) {
            const std::size_t bsz = std::min(cfg.batch, cfg.train_size - start);
            const CovertBatch batch = draw_covert_batch(
                acfg, cfg, s_train.data() + start * n_users, m_train.data() + start, bsz, snr_db,
                trigger_rng, chan_rng, noise_rng, bob_noise_rng);

            // Willie first, always.
            WillieStep ws = willie_loss_and_grads(sys, triple, cfg, batch);
            nn::adam_step(triple.willie, ws.grads, willie_state, lr);

            AliceStep as;
            if (cfg.order == CovertConfig::UpdateOrder::WillieAliceBob) {
                as = alice_loss_and_grads(sys, triple, cfg, batch);
                nn::adam_step(triple.alice, as.alice_grads, alice_state, lr);
                BobStep bs = bob_loss_and_grads(sys, triple, cfg, batch);
                nn::adam_step(triple.bob, bs.grads, bob_state, lr);
            } else {
                BobStep bs = bob_loss_and_grads(sys, triple, cfg, batch);
                nn::adam_step(triple.bob, bs.grads, bob_state, lr);
                as = alice_loss_and_grads(sys, triple, cfg, batch);
                nn::adam_step(triple.alice, as.alice_grads, alice_state, lr);
            }

            if (!std::isfinite(as.l_a) || !std::isfinite(ws.loss)) {
                throw NumericalError("train_covert: loss diverged (epoch " +
                                     std::to_string(epoch) + ")");
            }

            // Metrics from the Alice-step snapshot (all three paths coherent).
            const PipelineState& st = as.state;
            rec.loss_w += as.losses.l_w;
            rec.loss_b += as.losses.l_b;
            rec.loss_u += as.losses.l_u;
            rec.loss_a += as.l_a;
            std::size_t bob_ok = 0, user_ok = 0, willie_ok = 0;
            const std::size_t Mc = cfg.Mc();
            for (std::size_t b = 0; b < bsz; ++b) {
                bob_ok += argmax_row(st.bob_probs.ptr() + b * Mc, Mc) == batch.m[b];
                for (std::size_t u = 0; u < n_users; ++u) {
                    const Tensor& probs =
                        acfg.multi() ? st.rx_cov_m.probs[u] : st.rx_cov_s.probs;
                    user_ok += argmax_row(probs.ptr() + b * acfg.M(), acfg.M()) ==
                               batch.s[b * n_users + u];
                }
                willie_ok += st.w_norm[b] > 0.5;
                willie_ok += !(st.w_cov[b] > 0.5);
            }
            rec.acc_bob += static_cast<double>(bob_ok) / static_cast<double>(bsz);
            rec.acc_user += static_cast<double>(user_ok) / static_cast<double>(bsz * n_users);
            rec.acc_willie += static_cast<double>(willie_ok) / static_cast<double>(2 * bsz);
            ++batches;
        }

        const double inv = 1.0 / static_cast<double>(batches);
        rec.loss_w *= inv;
        rec.loss_b *= inv;
        rec.loss_u *= inv;
        rec.loss_a *= inv;
        rec.acc_bob *= inv;
        rec.acc_user *= inv;
        rec.acc_willie *= inv;
        result.records.push_back(rec);
    }
    return result;
}

std::vector<CovertSweepRow> evaluate_covert(const CovertTriple& triple, const System& sys,
                                            const CovertConfig& cfg,
                                            const std::vector<double>& snr_db_list,
                                            std::size_t trials, const StreamFactory& streams,
                                            bool silence_alice) {
    const AeConfig& acfg = sys.cfg;
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;
    std::vector<CovertSweepRow> rows(snr_db_list.size());

#pragma omp parallel for schedule(dynamic)
    for (long long pi = 0; pi < static_cast<long long>(snr_db_list.size()); ++pi) {
        const double snr_db = snr_db_list[pi];
        Rng msg_rng = streams.stream("eval.msg", pi);
        Rng covmsg_rng = streams.stream("eval.covmsg", pi);
        Rng trigger_rng = streams.stream("eval.trigger", pi);
        Rng chan_rng = streams.stream("eval.chan", pi);
        Rng noise_rng = streams.stream("eval.noise", pi);
        Rng bob_noise_rng = streams.stream("eval.noise.bob", pi);

        std::size_t bob_errors = 0;
        std::size_t user_errors_cov = 0;
        std::size_t user_errors_clean = 0;
        std::size_t willie_correct = 0;

        const std::size_t chunk = 1024;
        for (std::size_t done = 0; done < trials; done += chunk) {
            const std::size_t bsz = std::min(chunk, trials - done);
            std::vector<std::size_t> s(bsz * n_users);
            std::vector<std::size_t> m(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                for (std::size_t u = 0; u < n_users; ++u) {
                    s[b * n_users + u] = msg_rng.uniform_index(acfg.M());
                }
                m[b] = covmsg_rng.uniform_index(cfg.Mc());
            }
            CovertBatch batch = draw_covert_batch(acfg, cfg, s.data(), m.data(), bsz, snr_db,
                                                  trigger_rng, chan_rng, noise_rng,
                                                  bob_noise_rng);

            PipelineState st;
            ForwardParts parts;
            parts.user = true;
            parts.clean_user = true;
            parts.bob = true;
            parts.willie = true;
            parts.silence_alice = silence_alice;
            pipeline_forward(sys, triple, cfg, batch, parts, st);

            const std::size_t Mc = cfg.Mc();
            for (std::size_t b = 0; b < bsz; ++b) {
                bob_errors += argmax_row(st.bob_probs.ptr() + b * Mc, Mc) != m[b];
                for (std::size_t u = 0; u < n_users; ++u) {
                    const Tensor& pc = acfg.multi() ? st.rx_cov_m.probs[u] : st.rx_cov_s.probs;
                    const Tensor& pn = acfg.multi() ? st.rx_clean_m.probs[u] : st.rx_clean_s.probs;
                    user_errors_cov += argmax_row(pc.ptr() + b * acfg.M(), acfg.M()) !=
                                       s[b * n_users + u];
                    user_errors_clean += argmax_row(pn.ptr() + b * acfg.M(), acfg.M()) !=
                                         s[b * n_users + u];
                }
                willie_correct += st.w_norm[b] > 0.5;
                willie_correct += !(st.w_cov[b] > 0.5);
            }
        }

        CovertSweepRow r;
        r.snr_db = snr_db;
        r.bob_bler = static_cast<double>(bob_errors) / static_cast<double>(trials);
        r.user_bler_covert =
            static_cast<double>(user_errors_cov) / static_cast<double>(trials * n_users);
        r.user_bler_clean =
            static_cast<double>(user_errors_clean) / static_cast<double>(trials * n_users);
        r.willie_acc = static_cast<double>(willie_correct) / static_cast<double>(2 * trials);
        rows[pi] = r;
    }
    return rows;
}

RangeSearchResult snr_range_search_core(double start_snr_db,
                                        const std::function<double(double, double)>& objective,
                                        std::size_t max_candidates) {
    RangeSearchResult res;
    res.snr_low = start_snr_db;
    res.snr_high = start_snr_db;

    double best = objective(start_snr_db, start_snr_db);
    res.log.push_back({start_snr_db, start_snr_db, best, true});
    std::size_t used = 1;

    bool expanding_lower = true;
    while (true) {
        if (used >= max_candidates) {
            res.budget_exhausted = true;
            return res;
        }
        const double lo = expanding_lower ? res.snr_low - 1.0 : res.snr_low;
        const double hi = expanding_lower ? res.snr_high : res.snr_high + 1.0;
        const double c = objective(lo, hi);
        ++used;
        const bool improved = c > best;
        res.log.push_back({lo, hi, c, improved});
        if (improved) {
            best = c;
            res.snr_low = lo;
            res.snr_high = hi;
        } else if (expanding_lower) {
            expanding_lower = false;
        } else {
            return res;
        }
    }
}

RangeSearchResult snr_range_search(const System& sys, const CovertConfig& cfg,
                                   const StreamFactory& streams, std::size_t max_candidates) {
    std::size_t candidate = 0;
    auto objective = [&](double lo, double hi) {
        CovertConfig c = cfg;
        c.snr_low_db = lo;
        c.snr_high_db = hi;
        c.epochs = cfg.range_search_epochs;
        StreamFactory sub(streams.derive("range.candidate", candidate++));
        const CovertTrainResult r = train_covert(sys, c, sub);
        const EpochRecord& last = r.records.back();
        if (cfg.range_objective == CovertConfig::RangeObjective::Literal) {
            return (last.acc_user + last.acc_bob + last.acc_willie) / 3.0;
        }
        const double undetect = 1.0 - std::abs(2.0 * last.acc_willie - 1.0);
        return (last.acc_user + last.acc_bob + undetect) / 3.0;
    };
    return snr_range_search_core(sys.cfg.train_snr_db, objective, max_candidates);
}

std::vector<AuditRow> audit_detector(const nn::Network& alice, const System& sys,
                                     const CovertConfig& cfg,
                                     const std::vector<double>& snr_db_list,
                                     std::size_t budget_epochs, std::size_t eval_blocks,
                                     const StreamFactory& streams) {
    const AeConfig& acfg = sys.cfg;
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;

    // Local triple around the frozen generator; Bob is never evaluated.
    CovertTriple probe;
    probe.alice = alice;
    Rng init_rng = streams.stream("audit.init");
    probe.bob = build_bob(acfg.n, cfg.k_c);
    probe.bob.init_params(init_rng);
    probe.willie = build_willie(acfg.n);
    probe.willie.init_params(init_rng);

    // Fixed per-SNR evaluation observations (generator is frozen, so the
    // covert/normal tensors never change across checkpoints).
    std::vector<Tensor> obs_cov(snr_db_list.size()), obs_norm(snr_db_list.size());
    for (std::size_t pi = 0; pi < snr_db_list.size(); ++pi) {
        Rng msg_rng = streams.stream("audit.eval.msg", pi);
        Rng covmsg_rng = streams.stream("audit.eval.covmsg", pi);
        Rng trigger_rng = streams.stream("audit.eval.trigger", pi);
        Rng chan_rng = streams.stream("audit.eval.chan", pi);
        Rng noise_rng = streams.stream("audit.eval.noise", pi);
        Rng bob_noise_rng = streams.stream("audit.eval.noise.bob", pi);

        std::vector<std::size_t> s(eval_blocks * n_users);
        std::vector<std::size_t> m(eval_blocks);
        for (std::size_t b = 0; b < eval_blocks; ++b) {
            for (std::size_t u = 0; u < n_users; ++u)
                s[b * n_users + u] = msg_rng.uniform_index(acfg.M());
            m[b] = covmsg_rng.uniform_index(cfg.Mc());
        }
        const CovertBatch batch =
            draw_covert_batch(acfg, cfg, s.data(), m.data(), eval_blocks, snr_db_list[pi],
                              trigger_rng, chan_rng, noise_rng, bob_noise_rng);
        PipelineState st;
        ForwardParts parts;
        parts.user = false;
        parts.clean_user = true;
        parts.bob = false;
        parts.willie = false;
        pipeline_forward(sys, probe, cfg, batch, parts, st);
        obs_cov[pi] = acfg.multi() ? st.ant_cov[0] : st.y_cov_main;
        obs_norm[pi] = acfg.multi() ? st.ant_clean[0] : st.y_clean_main;
    }

    std::vector<AuditRow> rows(snr_db_list.size());
    for (std::size_t pi = 0; pi < snr_db_list.size(); ++pi) {
        rows[pi].snr_db = snr_db_list[pi];
    }
    auto evaluate_checkpoint = [&](bool final_pass) {
        for (std::size_t pi = 0; pi < snr_db_list.size(); ++pi) {
            const Tensor pc = probe.willie.forward(obs_cov[pi], eval_blocks);
            const Tensor pn = probe.willie.forward(obs_norm[pi], eval_blocks);
            std::size_t correct = 0;
            for (std::size_t b = 0; b < eval_blocks; ++b) {
                correct += pn[b] > 0.5;
                correct += !(pc[b] > 0.5);
            }
            const double acc =
                static_cast<double>(correct) / static_cast<double>(2 * eval_blocks);
            rows[pi].best_acc = std::max(rows[pi].best_acc, acc);
            if (final_pass) rows[pi].final_acc = acc;
        }
    };

    // Training data for the substitute detector.
    Rng s_rng = streams.stream("audit.data.s");
    Rng m_rng = streams.stream("audit.data.m");
    std::vector<std::size_t> s_train(cfg.train_size * n_users);
    for (auto& v : s_train) v = s_rng.uniform_index(acfg.M());
    std::vector<std::size_t> m_train(cfg.train_size);
    for (auto& v : m_train) v = m_rng.uniform_index(cfg.Mc());

    Rng snr_rng = streams.stream("audit.snr");
    Rng trigger_rng = streams.stream("audit.trigger");
    Rng chan_rng = streams.stream("audit.chan");
    Rng noise_rng = streams.stream("audit.noise");
    Rng bob_noise_rng = streams.stream("audit.noise.bob");

    nn::AdamState willie_state = nn::AdamState::for_network(probe.willie);
    const std::size_t eval_every = std::max<std::size_t>(1, budget_epochs / 20);

    for (std::size_t epoch = 1; epoch <= budget_epochs; ++epoch) {
        const double snr_db = snr_rng.uniform(cfg.snr_low_db, cfg.snr_high_db);
        for (std::size_t start = 0; start < cfg.train_size; start += cfg.batch) {
            const std::size_t bsz = std::min(cfg.batch, cfg.train_size - start);
            const CovertBatch batch = draw_covert_batch(
                acfg, cfg, s_train.data() + start * n_users, m_train.data() + start, bsz, snr_db,
                trigger_rng, chan_rng, noise_rng, bob_noise_rng);
            WillieStep ws = willie_loss_and_grads(sys, probe, cfg, batch);
            if (!std::isfinite(ws.loss)) {
                throw NumericalError("audit_detector: loss diverged");
            }
            nn::adam_step(probe.willie, ws.grads, willie_state, cfg.lr_initial);
        }
        if (epoch % eval_every == 0 || epoch == budget_epochs) {
            evaluate_checkpoint(epoch == budget_epochs);
        }
    }
    return rows;
}

}  // namespace cwnet::covert
