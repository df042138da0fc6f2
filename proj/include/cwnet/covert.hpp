#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cwnet/autoencoder.hpp"

namespace cwnet::covert {

using ae::AeConfig;
using ae::System;
using channel::ChannelRealization;
using channel::cplx;
using channel::SignalBlock;

struct CovertConfig {
    std::size_t k_c = 1;  // covert bits per codeword
    std::size_t trigger_dim = 16;
    double lambda_b = 2.0;
    double lambda_u = 1.0;
    double lambda_w = 4.0;
    double snr_low_db = -2.0;
    double snr_high_db = 8.0;
    std::size_t epochs = 5000;
    std::size_t batch = 1024;
    std::size_t train_size = 8192;
    double lr_initial = 1e-3;
    double lr_late = 1e-4;
    std::size_t lr_drop_epoch = 2500;  // epochs beyond this use lr_late

    enum class UpdateOrder { WillieAliceBob, WillieBobAlice };
    UpdateOrder order = UpdateOrder::WillieAliceBob;

    enum class RangeObjective { Literal, Covert };
    RangeObjective range_objective = RangeObjective::Covert;
    std::size_t range_search_epochs = 300;

    std::size_t Mc() const { return std::size_t{1} << k_c; }

    void validate() const;
};

struct CovertTriple {
    nn::Network alice;
    nn::Network bob;
    nn::Network willie;
};

nn::Network build_alice(const AeConfig& ae_cfg, const CovertConfig& cfg);
nn::Network build_bob(std::size_t n, std::size_t k_c);
nn::Network build_willie(std::size_t n);
CovertTriple make_triple(const AeConfig& ae_cfg, const CovertConfig& cfg, Rng& init_rng);

std::size_t alice_input_dim(const AeConfig& ae_cfg, const CovertConfig& cfg);

// One training/evaluation batch: every covert message is paired with normal
// message(s), triggers are redrawn per batch, one realization per block.
struct CovertBatch {
    double snr_db = 0.0;
    double sigma2 = 0.0;
    std::size_t batch = 0;
    std::vector<std::size_t> s;  // [batch * n_users], user-major per sample
    std::vector<std::size_t> m;  // [batch]
    Tensor triggers;             // [batch, trigger_dim]
    std::vector<ChannelRealization> reals;
    Tensor noise_main;            // single: shared receive noise; multi: Bob's
    std::vector<Tensor> noise_rx;  // multi: per BaseRX antenna
};

// Draw order per block: realization, antenna noise (multi), main noise.
// Separate streams per purpose keep the covert and clean paths aligned.
CovertBatch draw_covert_batch(const AeConfig& ae_cfg, const CovertConfig& cfg,
                              const std::size_t* s, const std::size_t* m, std::size_t batch,
                              double snr_db, Rng& trigger_rng, Rng& chan_rng, Rng& noise_rng,
                              Rng& bob_noise_rng);

// --- single-block operations (contract surface, also used by the batched
// pipeline's tests) ----------------------------------------------------------

// Conditioning vector: trigger ++ onehot(m) ++ fading features. Fading
// features: none over AWGN, Alice->Bob coefficient in single-user fading,
// plus users->Bob vector and vec(H_eff) in multi-user fading.
Tensor alice_conditioning(const AeConfig& ae_cfg, const CovertConfig& cfg, std::size_t m,
                          const double* trigger, const ChannelRealization& real);

SignalBlock alice_generate(const nn::Network& alice, const AeConfig& ae_cfg,
                           const CovertConfig& cfg, std::size_t m, const double* trigger,
                           const ChannelRealization& real);

// Single-user covert channel output: h_single x + h_alice z + noise.
SignalBlock covert_output_single(const SignalBlock& x, const SignalBlock& z,
                                 const ChannelRealization& real, double sigma2, Rng& rng);

struct MultiCovertOutput {
    SignalBlock y_bob;                  // Bob's single-antenna view
    std::vector<SignalBlock> antennas;  // BaseRX view with Z injected per antenna
};
MultiCovertOutput covert_output_multi(const std::vector<SignalBlock>& xs, const SignalBlock& z,
                                      const ChannelRealization& real, double sigma2, Rng& rng);

struct BobDecode {
    Tensor probs;
    std::size_t m_hat = 0;
};
BobDecode bob_decode(const nn::Network& bob, const SignalBlock& y);

// P = predicted probability that the block is normal traffic.
double willie_score(const nn::Network& willie, const SignalBlock& y);

// --- batched pipeline -------------------------------------------------------

struct ComponentLosses {
    double l_b = 0.0;
    double l_u = 0.0;
    double l_w = 0.0;
};

double alice_loss(const ComponentLosses& l, double lambda_b, double lambda_u, double lambda_w);

// Full differentiable pipeline state for one batch.
struct PipelineState {
    std::vector<ae::EncodeState> enc;  // per user (frozen encoders)
    Tensor alice_in;
    nn::Tape alice_tape;
    Tensor z;  // [batch, 2n]

    Tensor y_cov_main;    // single: shared covert output; multi: Bob's view
    Tensor y_clean_main;  // single only: normal output under the same draws
    std::vector<Tensor> ant_cov;    // multi
    std::vector<Tensor> ant_clean;  // multi

    ae::RxSingleState rx_cov_s, rx_clean_s;
    ae::RxMultiState rx_cov_m, rx_clean_m;

    nn::Tape bob_tape;
    Tensor bob_probs;
    nn::Tape willie_cov_tape, willie_norm_tape;
    Tensor w_cov, w_norm;  // Willie outputs on covert/normal observations
};

struct ForwardParts {
    bool user = true;
    bool clean_user = false;
    bool bob = true;
    bool willie = true;
    bool silence_alice = false;  // Z forced to zero (Alice still evaluated)
};

void pipeline_forward(const System& sys, const CovertTriple& triple, const CovertConfig& cfg,
                      const CovertBatch& batch, const ForwardParts& parts, PipelineState& st);

// L_B, L_U, L_W on one batch; the user system must be frozen.
ComponentLosses component_losses(const System& sys, const CovertTriple& triple,
                                 const CovertConfig& cfg, const CovertBatch& batch,
                                 PipelineState* state_out = nullptr);

// d L_A / d (alice params) through the frozen channel constants and the
// downstream networks; losses reported alongside.
struct AliceStep {
    std::vector<double> alice_grads;
    ComponentLosses losses;
    double l_a = 0.0;
    PipelineState state;
};
AliceStep alice_loss_and_grads(const System& sys, const CovertTriple& triple,
                               const CovertConfig& cfg, const CovertBatch& batch);

// --- training ---------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double snr_db = 0.0;
    double loss_w = 0.0;
    double loss_b = 0.0;
    double loss_u = 0.0;
    double loss_a = 0.0;
    double acc_user = 0.0;
    double acc_bob = 0.0;
    double acc_willie = 0.0;
};

struct CovertTrainResult {
    CovertTriple triple;
    std::vector<EpochRecord> records;
};

// Algorithm: per epoch draw one SNR uniform in [snr_low, snr_high], iterate
// the paired dataset in batches, update Willie then Alice then Bob (order
// flag may swap the last two). The user system stays frozen throughout.
CovertTrainResult train_covert(const System& sys, const CovertConfig& cfg,
                               const StreamFactory& streams);

// --- evaluation ---------------------------------------------------------------

struct CovertSweepRow {
    double snr_db = 0.0;
    double bob_bler = 0.0;
    double user_bler_covert = 0.0;  // mean over users in multi mode
    double user_bler_clean = 0.0;
    double willie_acc = 0.0;  // balanced accuracy at threshold 0.5
};

std::vector<CovertSweepRow> evaluate_covert(const CovertTriple& triple, const System& sys,
                                            const CovertConfig& cfg,
                                            const std::vector<double>& snr_db_list,
                                            std::size_t trials, const StreamFactory& streams,
                                            bool silence_alice = false);

// --- SNR range search (greedy bound expansion) -------------------------------

struct RangeSearchStep {
    double snr_low = 0.0;
    double snr_high = 0.0;
    double objective = 0.0;
    bool accepted = false;
};

struct RangeSearchResult {
    double snr_low = 0.0;
    double snr_high = 0.0;
    std::vector<RangeSearchStep> log;
    bool budget_exhausted = false;
};

// Core loop over an abstract candidate objective: expand the lower bound by
// 1 dB while the objective improves, then the upper bound. The accepted
// objective sequence is strictly increasing.
RangeSearchResult snr_range_search_core(double start_snr_db,
                                        const std::function<double(double, double)>& objective,
                                        std::size_t max_candidates);

// Production search: each candidate trains a fresh triple for
// cfg.range_search_epochs and scores the final epoch's accuracies. literal
// objective: mean(acc_user, acc_bob, acc_willie); covert objective:
// mean(acc_user, acc_bob, 1 - |2 acc_willie - 1|).
RangeSearchResult snr_range_search(const System& sys, const CovertConfig& cfg,
                                   const StreamFactory& streams, std::size_t max_candidates = 64);

// --- independent-detector audit ----------------------------------------------

struct AuditRow {
    double snr_db = 0.0;
    double best_acc = 0.0;   // best balanced accuracy over checkpoints
    double final_acc = 0.0;  // accuracy at the last checkpoint
};

// Trains a fresh detector (new init, Willie's architecture) against the
// frozen generator and reports its best balanced accuracy per SNR.
std::vector<AuditRow> audit_detector(const nn::Network& alice, const System& sys,
                                     const CovertConfig& cfg,
                                     const std::vector<double>& snr_db_list,
                                     std::size_t budget_epochs, std::size_t eval_blocks,
                                     const StreamFactory& streams);

}  // namespace cwnet::covert
