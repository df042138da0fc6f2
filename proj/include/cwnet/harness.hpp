#pragma once

#include <string>

#include "cwnet/config.hpp"

namespace cwnet::harness {

// Orchestration layer shared by the CLI and the integration tests. Every
// command resolves its streams from (config, seed), writes its outputs under
// out_dir and appends one line to out_dir/run_record.jsonl.

struct RunPaths {
    std::string out_dir;

    std::string ae_dir() const { return out_dir + "/ae"; }
    std::string covert_dir() const { return out_dir + "/covert"; }
    std::string sweep_dir() const { return out_dir + "/sweep"; }
    std::string search_dir() const { return out_dir + "/snr_search"; }
    std::string audit_dir() const { return out_dir + "/audit"; }
    std::string constellation_dir() const { return out_dir + "/constellation"; }
    std::string baseline_dir() const { return out_dir + "/baseline"; }
};

// Weight-file round trips for whole systems.
void save_system(const ae::System& sys, const std::string& dir);
ae::System load_system(const ExperimentConfig& cfg, const std::string& dir);
void save_triple(const covert::CovertTriple& t, const std::string& dir);
covert::CovertTriple load_triple(const ExperimentConfig& cfg, const std::string& dir);
bool system_weights_present(const ExperimentConfig& cfg, const std::string& dir);
bool triple_weights_present(const std::string& dir);

struct CommandResult {
    int exit_code = 0;
    std::string summary;
};

CommandResult cmd_train_ae(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_train_covert(const ExperimentConfig& cfg, const std::string& out_dir);
// Always sweeps the plain autoencoder link; also sweeps the covert triple
// when its weights are present (or `require_covert` insists on them).
CommandResult cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                        bool require_covert = false);
CommandResult cmd_snr_search(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_constellation(const ExperimentConfig& cfg, const std::string& out_dir);
CommandResult cmd_audit(const ExperimentConfig& cfg, const std::string& out_dir,
                        bool untrained_alice = false);
CommandResult cmd_baseline(const ExperimentConfig& cfg, const std::string& out_dir,
                           const std::string& scheme_name);

// CSV writers shared with tests.
std::string bler_rows_csv(const std::vector<ae::BlerRow>& rows);
std::string curve_csv(const std::vector<ae::CurvePoint>& curve);
std::string covert_records_csv(const std::vector<covert::EpochRecord>& recs);
std::string covert_sweep_csv(const std::vector<covert::CovertSweepRow>& rows);
std::string audit_csv(const std::vector<covert::AuditRow>& rows);

std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace cwnet::harness
