#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cwnet/autoencoder.hpp"
#include "cwnet/covert.hpp"

namespace cwnet::harness {

// Resolved experiment configuration. Defaults depend on scenario and
// channel; every run echoes the fully resolved set next to its outputs.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    channel::Scenario scenario = channel::Scenario::Single;
    channel::ChannelModel model;
    std::size_t n = 8;
    std::size_t k = 4;
    std::size_t k_c = 1;
    std::size_t n_tx = 1;
    std::size_t n_rx = 1;

    std::size_t ae_epochs = 100;
    std::size_t ae_batch = 1024;
    double ae_lr = 1e-3;
    double ae_train_snr_db = 4.0;
    std::size_t train_size = 8192;
    std::size_t test_size = 51200;

    std::size_t covert_epochs = 5000;
    double covert_lr = 1e-3;
    double covert_lr_late = 1e-4;
    std::size_t covert_lr_drop_epoch = 2500;
    double lambda_b = 2.0;
    double lambda_u = 1.0;
    double lambda_w = 4.0;
    double snr_low_db = -2.0;
    double snr_high_db = 8.0;
    std::string update_order = "willie-alice-bob";
    std::string range_objective = "covert";
    std::size_t range_search_epochs = 300;
    std::size_t range_search_max_candidates = 24;
    std::size_t audit_epochs = 300;
    std::size_t audit_eval_blocks = 4096;

    std::vector<double> sweep_snrs;
    std::size_t trials_per_snr = 50000;

    std::vector<double> constellation_snrs;
    std::size_t constellation_trials = 1000;
    std::size_t constellation_message = 0;

    bool fast = false;
    bool lambda_ratio_default = true;  // ratios match the per-scenario defaults

    ae::AeConfig ae_config() const;
    covert::CovertConfig covert_config() const;
};

// key = value text format, '#' comments, UTF-8. Unknown keys and malformed
// values are rejected with an error listing every offending key. An empty
// file resolves to the full single-user AWGN (8,4)/(8,1) default set.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// The `--fast` desk profile: ae 60 epochs, covert 500 epochs, 1e4 sweep
// trials. Explicit config keys win over the profile.
void apply_fast_profile(ExperimentConfig& cfg, const std::map<std::string, std::string>& raw);

// Sorted key = value echo of the fully resolved configuration.
std::string resolved_config_text(const ExperimentConfig& cfg);

// Raw key/value pairs of the file (for fast-profile precedence).
std::map<std::string, std::string> read_raw_pairs(const std::string& path);

}  // namespace cwnet::harness
