#pragma once

#include <string>
#include <vector>

#include "cwnet/adam.hpp"
#include "cwnet/channel.hpp"
#include "cwnet/equalize.hpp"
#include "cwnet/network.hpp"

namespace cwnet::ae {

using channel::ChannelModel;
using channel::ChannelRealization;
using channel::cplx;
using channel::FadingKind;
using channel::Scenario;
using channel::SignalBlock;

struct AeConfig {
    std::size_t n = 8;  // channel uses per codeword
    std::size_t k = 4;  // bits per message
    Scenario scenario = Scenario::Single;
    ChannelModel model;
    std::size_t n_tx = 1;
    std::size_t n_rx = 1;
    double train_snr_db = 4.0;
    std::size_t epochs = 100;
    std::size_t batch = 1024;
    double lr = 1e-3;
    std::size_t train_size = 8192;
    std::size_t test_size = 51200;

    std::size_t M() const { return std::size_t{1} << k; }
    bool fading() const { return model.kind != FadingKind::AWGN; }
    bool multi() const { return scenario == Scenario::Multi; }
};

// Architecture builders. Conv stages that no longer fit short blocks are
// skipped so small (n, k) configurations stay buildable; at the default
// (8, 4) every stage applies.
nn::Network build_encoder(std::size_t n, std::size_t k);
nn::Network build_decoder(std::size_t n, std::size_t k);
nn::Network build_estimator(std::size_t n);
nn::Network build_pre_decoder(std::size_t n_tx, std::size_t n);
nn::Network build_decoder_head(std::size_t n_tx, std::size_t n, std::size_t k);

struct SingleUserSystem {
    nn::Network encoder;
    nn::Network estimator;  // fading only
    nn::Network decoder;
};

struct MultiUserSystem {
    std::vector<nn::Network> encoders;  // no shared parameters
    nn::Network pre_decoder;
    std::vector<nn::Network> heads;
};

struct System {
    AeConfig cfg;
    SingleUserSystem single;
    MultiUserSystem multi;

    void freeze_all();
    bool frozen() const;
    // Concatenated parameter bytes, for freeze-contract checks.
    std::vector<double> all_params() const;
};

System make_system(const AeConfig& cfg, Rng& init_rng);

// --- shared differentiable pieces -----------------------------------------

// Per-row unit mean power normalization over n complex uses (row width 2n).
void normalize_rows(const Tensor& in, Tensor& out, std::vector<double>& inv_scale);
// g_in from g_out given the normalized rows and the stored 1/s per row.
void normalize_rows_backward(const Tensor& x_norm, const std::vector<double>& inv_scale,
                             const Tensor& g_out, Tensor& g_in);

// row := row + a * other (complex pairs, interleaved re/im)
void row_add_scaled(double* row, const double* other, cplx a, std::size_t n_uses);

// Encoder pass over a batch of messages; x_norm rows are unit power.
struct EncodeState {
    Tensor onehot;
    nn::Tape tape;
    Tensor raw;     // encoder output before normalization
    Tensor x_norm;  // [batch, 2n]
    std::vector<double> inv_scale;
};
void encode_forward(const nn::Network& encoder, const std::vector<std::size_t>& msgs,
                    std::size_t M, EncodeState& st);
// Returns encoder parameter gradients given dLoss/d(x_norm).
std::vector<double> encode_backward(const nn::Network& encoder, const EncodeState& st,
                                    const Tensor& g_x_norm);

// Single-user receiver: (optional) blind estimation + division, then decode.
struct RxSingleState {
    Tensor rx;  // [batch, 2n]
    bool fading = false;
    nn::Tape est_tape;
    Tensor est_out;              // [batch, 2]
    std::vector<char> flagged;   // near-singular coefficient rows
    Tensor dec_in;
    nn::Tape dec_tape;
    Tensor probs;  // [batch, M]
};
void rx_single_forward(const SingleUserSystem& sys, bool fading, const Tensor& rx,
                       RxSingleState& st);

struct RxSingleGrads {
    std::vector<double> decoder;
    std::vector<double> estimator;
    Tensor d_rx;  // [batch, 2n]
};
RxSingleGrads rx_single_backward(const SingleUserSystem& sys, const RxSingleState& st,
                                 const Tensor& dec_logit_grad);

// Multi-user receiver: ZF per block in fading mode (raw antenna stack over
// AWGN), pre-decoder, then one head per user.
struct RxMultiState {
    std::vector<Tensor> antennas;  // n_rx tensors [batch, 2n]
    bool fading = false;
    std::vector<std::vector<cplx>> zf;  // per sample: n_tx x n_rx (fading)
    std::vector<char> flagged;
    Tensor dec_in;  // [batch, n_tx*2n]
    nn::Tape pre_tape;
    Tensor pre_out;
    std::vector<nn::Tape> head_tapes;
    std::vector<Tensor> probs;  // per user [batch, M]
};
void rx_multi_forward(const MultiUserSystem& sys, bool fading,
                      const std::vector<ChannelRealization>& reals,
                      const std::vector<Tensor>& antennas, RxMultiState& st);

struct RxMultiGrads {
    std::vector<double> pre_decoder;
    std::vector<std::vector<double>> heads;
    std::vector<Tensor> d_antennas;  // n_rx tensors [batch, 2n]
};
RxMultiGrads rx_multi_backward(const MultiUserSystem& sys, const RxMultiState& st,
                               const std::vector<Tensor>& head_logit_grads);

// --- training / evaluation -------------------------------------------------

struct CurvePoint {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    System system;
    std::vector<CurvePoint> curve;
};

// Adam training at the fixed configured train SNR. Channel draws, datasets
// and init all come from named streams of `streams`, so a (config, seed)
// pair reproduces parameters bit for bit.
TrainResult train_autoencoder(const AeConfig& cfg, const StreamFactory& streams);

struct BlerRow {
    double snr_db = 0.0;
    int user_id = 0;  // -1 = joint over all users (multi mode)
    std::size_t blocks = 0;
    std::size_t errors = 0;
    double bler = 0.0;
};

// BLER sweep; points are independent (stream id derives from the snr index)
// and may run in parallel without changing any byte of the result.
std::vector<BlerRow> evaluate_bler(const System& sys, const std::vector<double>& snr_db_list,
                                   std::size_t trials_per_snr, const StreamFactory& streams);

// Deterministic codebook: encoder outputs for all M messages.
std::vector<SignalBlock> codebook(const nn::Network& encoder, std::size_t M);

}  // namespace cwnet::ae
