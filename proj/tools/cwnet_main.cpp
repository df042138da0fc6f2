// cwnet: covert communication simulator for autoencoder wireless links.
//
// Subcommands: train-ae, train-covert, sweep, snr-search, constellation,
// audit, baseline. Exit codes: 0 success, 2 config error, 3 missing
// prerequisite, 4 numerical failure.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cwnet/errors.hpp"
#include "cwnet/harness.hpp"
#include "cwnet/kernels.hpp"

using namespace cwnet;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool fast = false;
    bool serial = false;
};

harness::ExperimentConfig resolve_config(const GlobalArgs& g) {
    std::map<std::string, std::string> raw;
    harness::ExperimentConfig cfg;
    if (!g.config_path.empty()) {
        raw = harness::read_raw_pairs(g.config_path);
        cfg = harness::parse_config(g.config_path);
    } else {
        cfg = harness::parse_config_text("");
    }
    if (g.seed_set) cfg.seed = g.seed;
    if (g.fast) harness::apply_fast_profile(cfg, raw);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cwnet: covert channels over autoencoder wireless links"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "experiment config file (key = value lines)");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "master seed (overrides the config)")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_flag("--fast", g.fast, "desk-scale profile: ae 60 epochs, covert 500, 1e4 trials");
    app.add_flag("--serial", g.serial, "disable OpenMP kernel parallelism");

    auto* train_ae = app.add_subcommand("train-ae", "train the normal autoencoder link");
    auto* train_covert = app.add_subcommand("train-covert",
                                            "adversarially train Alice/Bob/Willie "
                                            "(requires train-ae output)");
    auto* sweep = app.add_subcommand("sweep", "BLER / detection sweep over the SNR grid");
    bool require_covert = false;
    sweep->add_flag("--require-covert", require_covert,
                    "fail instead of skipping the covert sweep when weights are missing");
    auto* snr_search = app.add_subcommand("snr-search",
                                          "greedy covert-training SNR range search");
    auto* constellation = app.add_subcommand("constellation",
                                             "export constellation cloud samples");
    auto* audit = app.add_subcommand("audit", "train a fresh detector against the frozen "
                                              "generator and report its accuracy");
    bool untrained_alice = false;
    audit->add_flag("--untrained-alice", untrained_alice,
                    "audit a freshly initialized generator (sanity control)");
    auto* baseline_cmd = app.add_subcommand("baseline", "classical modulation reference sweep");
    std::string scheme = "bpsk";
    baseline_cmd->add_option("--scheme", scheme, "bpsk|qpsk")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (g.serial) kernels::set_parallel(false);

    try {
        const harness::ExperimentConfig cfg = resolve_config(g);
        harness::CommandResult res;
        if (train_ae->parsed()) {
            res = harness::cmd_train_ae(cfg, g.out_dir);
        } else if (train_covert->parsed()) {
            res = harness::cmd_train_covert(cfg, g.out_dir);
        } else if (sweep->parsed()) {
            res = harness::cmd_sweep(cfg, g.out_dir, require_covert);
        } else if (snr_search->parsed()) {
            res = harness::cmd_snr_search(cfg, g.out_dir);
        } else if (constellation->parsed()) {
            res = harness::cmd_constellation(cfg, g.out_dir);
        } else if (audit->parsed()) {
            res = harness::cmd_audit(cfg, g.out_dir, untrained_alice);
        } else if (baseline_cmd->parsed()) {
            res = harness::cmd_baseline(cfg, g.out_dir, scheme);
        }
        std::cout << res.summary << "\n";
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const PrerequisiteError& e) {
        std::cerr << "prerequisite error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
