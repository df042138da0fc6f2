#include "cwnet/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cwnet/baseline.hpp"
#include "cwnet/csv.hpp"
#include "cwnet/errors.hpp"
#include "cwnet/serialize.hpp"

namespace fs = std::filesystem;

namespace cwnet::harness {

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw PersistenceError(path + ": cannot open for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

class RunScope {
  public:
    RunScope(const ExperimentConfig& cfg, const std::string& out_dir, std::string command)
        : cfg_(cfg), out_dir_(out_dir), command_(std::move(command)),
          start_(std::chrono::steady_clock::now()) {
        ensure_dir(out_dir);
        write_text(out_dir + "/resolved_config.txt", resolved_config_text(cfg));
    }

    void add_output(const std::string& path) { outputs_.push_back(path); }

    void finish(const std::string& summary) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::json j;
        j["command"] = command_;
        j["config_hash"] = config_hash(cfg_);
        j["seed"] = cfg_.seed;
        j["wall_clock_sec"] = secs;
        j["outputs"] = outputs_;
        j["summary"] = summary;
        std::ofstream rec(out_dir_ + "/run_record.jsonl", std::ios::app);
        rec << j.dump() << "\n";
    }

  private:
    const ExperimentConfig& cfg_;
    std::string out_dir_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> outputs_;
};

std::vector<std::string> system_weight_files(const ExperimentConfig& cfg) {
    std::vector<std::string> files;
    if (cfg.scenario == channel::Scenario::Multi) {
        for (std::size_t u = 0; u < cfg.n_tx; ++u) {
            files.push_back("encoder_" + std::to_string(u) + ".cwnet");
        }
        files.push_back("pre_decoder.cwnet");
        for (std::size_t u = 0; u < cfg.n_tx; ++u) {
            files.push_back("head_" + std::to_string(u) + ".cwnet");
        }
    } else {
        files.push_back("encoder.cwnet");
        if (cfg.model.kind != channel::FadingKind::AWGN) files.push_back("estimator.cwnet");
        files.push_back("decoder.cwnet");
    }
    return files;
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(resolved_config_text(cfg));
}

void save_system(const ae::System& sys, const std::string& dir) {
    ensure_dir(dir);
    if (sys.cfg.multi()) {
        for (std::size_t u = 0; u < sys.multi.encoders.size(); ++u) {
            nn::save_params(sys.multi.encoders[u], dir + "/encoder_" + std::to_string(u) + ".cwnet");
        }
        nn::save_params(sys.multi.pre_decoder, dir + "/pre_decoder.cwnet");
        for (std::size_t u = 0; u < sys.multi.heads.size(); ++u) {
            nn::save_params(sys.multi.heads[u], dir + "/head_" + std::to_string(u) + ".cwnet");
        }
    } else {
        nn::save_params(sys.single.encoder, dir + "/encoder.cwnet");
        if (sys.cfg.fading()) nn::save_params(sys.single.estimator, dir + "/estimator.cwnet");
        nn::save_params(sys.single.decoder, dir + "/decoder.cwnet");
    }
}

bool system_weights_present(const ExperimentConfig& cfg, const std::string& dir) {
    for (const auto& f : system_weight_files(cfg)) {
        if (!fs::exists(dir + "/" + f)) return false;
    }
    return true;
}

bool triple_weights_present(const std::string& dir) {
    return fs::exists(dir + "/alice.cwnet") && fs::exists(dir + "/bob.cwnet") &&
           fs::exists(dir + "/willie.cwnet");
}

ae::System load_system(const ExperimentConfig& cfg, const std::string& dir) {
    if (!system_weights_present(cfg, dir)) {
        throw PrerequisiteError("no autoencoder weights under " + dir +
                                "; run `cwnet train-ae` first");
    }
    const ae::AeConfig acfg = cfg.ae_config();
    ae::System sys;
    sys.cfg = acfg;
    if (acfg.multi()) {
        for (std::size_t u = 0; u < acfg.n_tx; ++u) {
            sys.multi.encoders.push_back(ae::build_encoder(acfg.n, acfg.k));
            nn::load_params(sys.multi.encoders.back(),
                            dir + "/encoder_" + std::to_string(u) + ".cwnet");
        }
        sys.multi.pre_decoder = ae::build_pre_decoder(acfg.n_tx, acfg.n);
        nn::load_params(sys.multi.pre_decoder, dir + "/pre_decoder.cwnet");
        for (std::size_t u = 0; u < acfg.n_tx; ++u) {
            sys.multi.heads.push_back(ae::build_decoder_head(acfg.n_tx, acfg.n, acfg.k));
            nn::load_params(sys.multi.heads.back(), dir + "/head_" + std::to_string(u) + ".cwnet");
        }
    } else {
        sys.single.encoder = ae::build_encoder(acfg.n, acfg.k);
        nn::load_params(sys.single.encoder, dir + "/encoder.cwnet");
        if (acfg.fading()) {
            sys.single.estimator = ae::build_estimator(acfg.n);
            nn::load_params(sys.single.estimator, dir + "/estimator.cwnet");
        }
        sys.single.decoder = ae::build_decoder(acfg.n, acfg.k);
        nn::load_params(sys.single.decoder, dir + "/decoder.cwnet");
    }
    return sys;
}

void save_triple(const covert::CovertTriple& t, const std::string& dir) {
    ensure_dir(dir);
    nn::save_params(t.alice, dir + "/alice.cwnet");
    nn::save_params(t.bob, dir + "/bob.cwnet");
    nn::save_params(t.willie, dir + "/willie.cwnet");
}

covert::CovertTriple load_triple(const ExperimentConfig& cfg, const std::string& dir) {
    if (!triple_weights_present(dir)) {
        throw PrerequisiteError("no covert weights under " + dir +
                                "; run `cwnet train-covert` first");
    }
    covert::CovertTriple t;
    const ae::AeConfig acfg = cfg.ae_config();
    const covert::CovertConfig ccfg = cfg.covert_config();
    t.alice = covert::build_alice(acfg, ccfg);
    nn::load_params(t.alice, dir + "/alice.cwnet");
    t.bob = covert::build_bob(acfg.n, ccfg.k_c);
    nn::load_params(t.bob, dir + "/bob.cwnet");
    t.willie = covert::build_willie(acfg.n);
    nn::load_params(t.willie, dir + "/willie.cwnet");
    return t;
}

std::string bler_rows_csv(const std::vector<ae::BlerRow>& rows) {
    csv::Writer w({"snr_db", "user_id", "blocks", "errors", "bler"});
    for (const auto& r : rows) {
        w.add_row({csv::Writer::cell(r.snr_db), csv::Writer::cell(r.user_id),
                   csv::Writer::cell(r.blocks), csv::Writer::cell(r.errors),
                   csv::Writer::cell(r.bler)});
    }
    return w.str();
}

std::string curve_csv(const std::vector<ae::CurvePoint>& curve) {
    csv::Writer w({"epoch", "loss", "accuracy"});
    for (const auto& p : curve) {
        w.add_row({csv::Writer::cell(p.epoch), csv::Writer::cell(p.loss),
                   csv::Writer::cell(p.accuracy)});
    }
    return w.str();
}

std::string covert_records_csv(const std::vector<covert::EpochRecord>& recs) {
    csv::Writer w({"epoch", "snr_db", "loss_w", "loss_b", "loss_u", "loss_a", "acc_user",
                   "acc_bob", "acc_willie"});
    for (const auto& r : recs) {
        w.add_row({csv::Writer::cell(r.epoch), csv::Writer::cell(r.snr_db),
                   csv::Writer::cell(r.loss_w), csv::Writer::cell(r.loss_b),
                   csv::Writer::cell(r.loss_u), csv::Writer::cell(r.loss_a),
                   csv::Writer::cell(r.acc_user), csv::Writer::cell(r.acc_bob),
                   csv::Writer::cell(r.acc_willie)});
    }
    return w.str();
}

std::string covert_sweep_csv(const std::vector<covert::CovertSweepRow>& rows) {
    csv::Writer w({"snr_db", "bob_bler", "user_bler_covert", "user_bler_clean", "willie_acc"});
    for (const auto& r : rows) {
        w.add_row({csv::Writer::cell(r.snr_db), csv::Writer::cell(r.bob_bler),
                   csv::Writer::cell(r.user_bler_covert), csv::Writer::cell(r.user_bler_clean),
                   csv::Writer::cell(r.willie_acc)});
    }
    return w.str();
}

std::string audit_csv(const std::vector<covert::AuditRow>& rows) {
    csv::Writer w({"snr_db", "best_acc", "final_acc"});
    for (const auto& r : rows) {
        w.add_row({csv::Writer::cell(r.snr_db), csv::Writer::cell(r.best_acc),
                   csv::Writer::cell(r.final_acc)});
    }
    return w.str();
}

CommandResult cmd_train_ae(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunScope scope(cfg, out_dir, "train-ae");
    const StreamFactory streams(cfg.seed);
    ae::TrainResult res = ae::train_autoencoder(cfg.ae_config(), streams);

    RunPaths paths{out_dir};
    save_system(res.system, paths.ae_dir());
    write_text(paths.ae_dir() + "/training_curve.csv", curve_csv(res.curve));
    scope.add_output(paths.ae_dir());

    const auto& last = res.curve.back();
    std::string summary = "train-ae: final loss " + csv::format_double(last.loss) +
                          ", train accuracy " + csv::format_double(last.accuracy);
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_train_covert(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunScope scope(cfg, out_dir, "train-covert");
    RunPaths paths{out_dir};
    ae::System sys = load_system(cfg, paths.ae_dir());
    sys.freeze_all();

    const StreamFactory streams(cfg.seed);
    covert::CovertTrainResult res = covert::train_covert(sys, cfg.covert_config(), streams);

    save_triple(res.triple, paths.covert_dir());
    write_text(paths.covert_dir() + "/training_record.csv", covert_records_csv(res.records));
    scope.add_output(paths.covert_dir());

    const auto& last = res.records.back();
    std::string summary = "train-covert: acc_user " + csv::format_double(last.acc_user) +
                          ", acc_bob " + csv::format_double(last.acc_bob) + ", acc_willie " +
                          csv::format_double(last.acc_willie);
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                        bool require_covert) {
    RunScope scope(cfg, out_dir, "sweep");
    RunPaths paths{out_dir};
    ae::System sys = load_system(cfg, paths.ae_dir());
    sys.freeze_all();
    const StreamFactory streams(cfg.seed);

    ensure_dir(paths.sweep_dir());
    const auto rows = ae::evaluate_bler(sys, cfg.sweep_snrs, cfg.trials_per_snr, streams);
    write_text(paths.sweep_dir() + "/bler.csv", bler_rows_csv(rows));
    scope.add_output(paths.sweep_dir() + "/bler.csv");

    std::string summary = "sweep: " + std::to_string(cfg.sweep_snrs.size()) + " points";
    const bool have_triple = triple_weights_present(paths.covert_dir());
    if (require_covert && !have_triple) {
        throw PrerequisiteError("no covert weights under " + paths.covert_dir() +
                                "; run `cwnet train-covert` first");
    }
    if (have_triple) {
        covert::CovertTriple triple = load_triple(cfg, paths.covert_dir());
        const auto crows = covert::evaluate_covert(triple, sys, cfg.covert_config(),
                                                   cfg.sweep_snrs, cfg.trials_per_snr, streams);
        write_text(paths.sweep_dir() + "/covert_sweep.csv", covert_sweep_csv(crows));
        scope.add_output(paths.sweep_dir() + "/covert_sweep.csv");
        summary += " (with covert sweep)";
    }
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_snr_search(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunScope scope(cfg, out_dir, "snr-search");
    RunPaths paths{out_dir};
    ae::System sys = load_system(cfg, paths.ae_dir());
    sys.freeze_all();
    const StreamFactory streams(cfg.seed);

    const covert::RangeSearchResult res = covert::snr_range_search(
        sys, cfg.covert_config(), streams, cfg.range_search_max_candidates);

    ensure_dir(paths.search_dir());
    csv::Writer w({"snr_low_db", "snr_high_db", "objective", "accepted"});
    for (const auto& s : res.log) {
        w.add_row({csv::Writer::cell(s.snr_low), csv::Writer::cell(s.snr_high),
                   csv::Writer::cell(s.objective), csv::Writer::cell(int(s.accepted))});
    }
    w.write_file(paths.search_dir() + "/log.csv");
    std::string result_text = "snr_low_db = " + csv::format_double(res.snr_low) +
                              "\nsnr_high_db = " + csv::format_double(res.snr_high) + "\n";
    if (res.budget_exhausted) result_text += "# warning: candidate budget exhausted\n";
    write_text(paths.search_dir() + "/result.txt", result_text);
    scope.add_output(paths.search_dir());

    std::string summary = "snr-search: [" + csv::format_double(res.snr_low) + ", " +
                          csv::format_double(res.snr_high) + "] dB" +
                          (res.budget_exhausted ? " (budget exhausted)" : "");
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_constellation(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunScope scope(cfg, out_dir, "constellation");
    RunPaths paths{out_dir};
    ae::System sys = load_system(cfg, paths.ae_dir());
    sys.freeze_all();
    const bool have_triple = triple_weights_present(paths.covert_dir());
    covert::CovertTriple triple;
    if (have_triple) triple = load_triple(cfg, paths.covert_dir());

    const ae::AeConfig acfg = cfg.ae_config();
    const covert::CovertConfig ccfg = cfg.covert_config();
    const StreamFactory streams(cfg.seed);
    const std::size_t n_users = acfg.multi() ? acfg.n_tx : 1;

    csv::Writer w({"use_index", "kind", "re", "im", "snr_db"});
    for (std::size_t pi = 0; pi < cfg.constellation_snrs.size(); ++pi) {
        const double snr_db = cfg.constellation_snrs[pi];
        // Encoder symbols of the sample message (receiver's reference points).
        const auto book = ae::codebook(
            acfg.multi() ? sys.multi.encoders[0] : sys.single.encoder, acfg.M());
        const ae::SignalBlock& sym = book[cfg.constellation_message];
        for (std::size_t u = 0; u < acfg.n; ++u) {
            w.add_row({csv::Writer::cell(u), "symbol", csv::Writer::cell(sym[u].real()),
                       csv::Writer::cell(sym[u].imag()), csv::Writer::cell(snr_db)});
        }

        Rng covmsg_rng = streams.stream("constellation.covmsg", pi);
        Rng trigger_rng = streams.stream("constellation.trigger", pi);
        Rng chan_rng = streams.stream("constellation.chan", pi);
        Rng noise_rng = streams.stream("constellation.noise", pi);
        Rng bob_noise_rng = streams.stream("constellation.noise.bob", pi);

        const std::size_t trials = cfg.constellation_trials;
        std::vector<std::size_t> s(trials * n_users, cfg.constellation_message);
        std::vector<std::size_t> m(trials);
        for (auto& v : m) v = covmsg_rng.uniform_index(ccfg.Mc());

        covert::CovertBatch batch =
            covert::draw_covert_batch(acfg, ccfg, s.data(), m.data(), trials, snr_db,
                                      trigger_rng, chan_rng, noise_rng, bob_noise_rng);
        covert::PipelineState st;
        covert::ForwardParts parts;
        parts.user = have_triple;
        parts.clean_user = true;
        parts.bob = false;
        parts.willie = false;
        parts.silence_alice = !have_triple;
        covert::CovertTriple probe;
        if (have_triple) {
            probe = triple;
        } else {
            // Generator evaluated but silenced; any initialized triple works.
            Rng tmp_rng(0);
            probe = covert::make_triple(acfg, ccfg, tmp_rng);
        }
        covert::pipeline_forward(sys, probe, ccfg, batch, parts, st);

        // Receiver's post-equalization view of user 0.
        auto emit_cloud = [&](const char* kind, bool covert_path) {
            const std::size_t width = 2 * acfg.n;
            for (std::size_t t = 0; t < trials; ++t) {
                const double* row;
                if (acfg.multi()) {
                    const auto& rx = covert_path ? st.rx_cov_m : st.rx_clean_m;
                    row = rx.dec_in.ptr() + t * acfg.n_tx * width;  // user 0 slice
                } else {
                    const auto& rx = covert_path ? st.rx_cov_s : st.rx_clean_s;
                    row = rx.dec_in.ptr() + t * width;
                }
                for (std::size_t u = 0; u < acfg.n; ++u) {
                    w.add_row({csv::Writer::cell(u), kind, csv::Writer::cell(row[2 * u]),
                               csv::Writer::cell(row[2 * u + 1]), csv::Writer::cell(snr_db)});
                }
            }
        };
        emit_cloud("normal", false);
        if (have_triple) emit_cloud("covert", true);
    }

    ensure_dir(paths.constellation_dir());
    w.write_file(paths.constellation_dir() + "/constellation.csv");
    scope.add_output(paths.constellation_dir() + "/constellation.csv");

    std::string summary = "constellation: " + std::to_string(cfg.constellation_snrs.size()) +
                          " snr point(s)" + (have_triple ? " with covert clouds" : "");
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_audit(const ExperimentConfig& cfg, const std::string& out_dir,
                        bool untrained_alice) {
    RunScope scope(cfg, out_dir, "audit");
    RunPaths paths{out_dir};
    ae::System sys = load_system(cfg, paths.ae_dir());
    sys.freeze_all();
    const ae::AeConfig acfg = cfg.ae_config();
    const covert::CovertConfig ccfg = cfg.covert_config();
    const StreamFactory streams(cfg.seed);

    nn::Network alice;
    if (untrained_alice) {
        Rng rng = streams.stream("audit.alice.fresh");
        alice = covert::build_alice(acfg, ccfg);
        alice.init_params(rng);
    } else {
        alice = load_triple(cfg, paths.covert_dir()).alice;
    }
    alice.freeze();

    const auto rows = covert::audit_detector(alice, sys, ccfg, cfg.sweep_snrs, cfg.audit_epochs,
                                             cfg.audit_eval_blocks, streams);
    ensure_dir(paths.audit_dir());
    write_text(paths.audit_dir() + "/audit.csv", audit_csv(rows));
    scope.add_output(paths.audit_dir() + "/audit.csv");

    double best = 0.0;
    for (const auto& r : rows) best = std::max(best, r.best_acc);
    std::string summary = std::string("audit (") +
                          (untrained_alice ? "untrained" : "trained") +
                          " generator): max balanced accuracy " + csv::format_double(best);
    scope.finish(summary);
    return {0, summary};
}

CommandResult cmd_baseline(const ExperimentConfig& cfg, const std::string& out_dir,
                           const std::string& scheme_name) {
    RunScope scope(cfg, out_dir, "baseline");
    baseline::ModScheme scheme;
    if (scheme_name == "bpsk") scheme.kind = baseline::ModKind::BPSK;
    else if (scheme_name == "qpsk") scheme.kind = baseline::ModKind::QPSK;
    else throw ConfigError("baseline: scheme must be bpsk|qpsk");

    const StreamFactory streams(cfg.seed);
    Rng rng = streams.stream("baseline", scheme.kind == baseline::ModKind::BPSK ? 0 : 1);
    const auto sweep = baseline::simulate_baseline(scheme, cfg.model, cfg.sweep_snrs, cfg.k,
                                                   cfg.trials_per_snr, rng);

    csv::Writer w({"snr_db", "snr_per_bit_db", "scheme", "channel", "ber", "bler", "trials"});
    for (const auto& p : sweep.points) {
        w.add_row({csv::Writer::cell(p.snr_db), csv::Writer::cell(p.snr_per_bit_db),
                   scheme.name(), channel::fading_name(cfg.model.kind), csv::Writer::cell(p.ber),
                   csv::Writer::cell(p.bler), csv::Writer::cell(p.trials)});
    }
    RunPaths paths{out_dir};
    ensure_dir(paths.baseline_dir());
    w.write_file(paths.baseline_dir() + "/baseline.csv");
    scope.add_output(paths.baseline_dir() + "/baseline.csv");

    std::string summary = "baseline " + scheme_name + ": " +
                          std::to_string(sweep.points.size()) + " points";
    scope.finish(summary);
    return {0, summary};
}

}  // namespace cwnet::harness
