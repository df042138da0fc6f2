#include "cwnet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cwnet/csv.hpp"
#include "cwnet/errors.hpp"

namespace cwnet::harness {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_pairs(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> bad;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            bad.push_back("line " + std::to_string(lineno) + " ('" + line + "': missing '=')");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) {
            bad.push_back("line " + std::to_string(lineno) + " (empty key)");
            continue;
        }
        if (out.count(key)) bad.push_back(key + " (duplicate)");
        out[key] = val;
    }
    if (!bad.empty()) {
        std::string msg = "config: malformed entries:";
        for (const auto& b : bad) msg += " " + b + ";";
        throw ConfigError(msg);
    }
    return out;
}

struct Reader {
    const std::map<std::string, std::string>& raw;
    std::vector<std::string> errors;
    std::vector<std::string> consumed;

    bool has(const std::string& key) {
        return raw.count(key) > 0;
    }

    template <typename F>
    void take(const std::string& key, F&& apply) {
        auto it = raw.find(key);
        if (it == raw.end()) return;
        consumed.push_back(key);
        try {
            apply(it->second);
        } catch (const std::exception& e) {
            errors.push_back(key + " (" + e.what() + ")");
        }
    }

    static double to_double(const std::string& v) {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::runtime_error("not a number: " + v);
        return d;
    }
    static std::size_t to_size(const std::string& v) {
        const double d = to_double(v);
        if (d < 0 || d != std::floor(d)) throw std::runtime_error("not a nonneg integer: " + v);
        return static_cast<std::size_t>(d);
    }
    static std::uint64_t to_u64(const std::string& v) {
        std::size_t pos = 0;
        const auto u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::runtime_error("not an integer: " + v);
        return u;
    }
};

std::vector<double> parse_snr_list(const std::string& v) {
    // "lo:step:hi" (inclusive) or a comma list.
    if (v.find(':') != std::string::npos) {
        double parts[3];
        std::size_t idx = 0;
        std::string cur;
        std::istringstream in(v);
        while (std::getline(in, cur, ':')) {
            if (idx >= 3) throw std::runtime_error("expected lo:step:hi");
            parts[idx++] = Reader::to_double(cur);
        }
        if (idx != 3) throw std::runtime_error("expected lo:step:hi");
        if (parts[1] <= 0) throw std::runtime_error("step must be positive");
        std::vector<double> out;
        for (double x = parts[0]; x <= parts[2] + 1e-9; x += parts[1]) out.push_back(x);
        if (out.empty()) throw std::runtime_error("empty grid");
        return out;
    }
    std::vector<double> out;
    std::istringstream in(v);
    std::string cur;
    while (std::getline(in, cur, ',')) out.push_back(Reader::to_double(trim(cur)));
    if (out.empty()) throw std::runtime_error("empty list");
    return out;
}

const std::vector<std::string> kKnownKeys = {
    "seed", "scenario", "channel", "rician_k", "n", "k", "k_c", "n_tx", "n_rx",
    "ae_epochs", "ae_batch", "ae_lr", "ae_train_snr_db", "train_size", "test_size",
    "covert_epochs", "covert_lr", "covert_lr_late", "covert_lr_drop_epoch",
    "lambda_b", "lambda_u", "lambda_w", "snr_low_db", "snr_high_db",
    "update_order", "range_objective", "range_search_epochs", "range_search_max_candidates",
    "audit_epochs", "audit_eval_blocks", "sweep_snrs", "trials_per_snr",
    "constellation_snrs", "constellation_trials", "constellation_message", "fast",
};

}  // namespace

std::map<std::string, std::string> read_raw_pairs(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_pairs(ss.str());
}

ExperimentConfig parse_config_text(const std::string& text) {
    const auto raw = parse_pairs(text);

    std::vector<std::string> unknown;
    for (const auto& [key, _] : raw) {
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "config: unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    ExperimentConfig cfg;
    Reader r{raw, {}, {}};

    r.take("seed", [&](const std::string& v) { cfg.seed = Reader::to_u64(v); });
    r.take("scenario", [&](const std::string& v) {
        if (v == "single") cfg.scenario = channel::Scenario::Single;
        else if (v == "multi") cfg.scenario = channel::Scenario::Multi;
        else throw std::runtime_error("expected single|multi");
    });
    r.take("channel", [&](const std::string& v) {
        if (v == "awgn") cfg.model.kind = channel::FadingKind::AWGN;
        else if (v == "rayleigh") cfg.model.kind = channel::FadingKind::Rayleigh;
        else if (v == "rician") cfg.model.kind = channel::FadingKind::Rician;
        else throw std::runtime_error("expected awgn|rayleigh|rician");
    });
    r.take("rician_k", [&](const std::string& v) {
        cfg.model.rician_k = Reader::to_double(v);
        if (cfg.model.rician_k < 0) throw std::runtime_error("must be >= 0");
    });
    r.take("n", [&](const std::string& v) { cfg.n = Reader::to_size(v); });
    r.take("k", [&](const std::string& v) { cfg.k = Reader::to_size(v); });
    r.take("k_c", [&](const std::string& v) { cfg.k_c = Reader::to_size(v); });

    const bool multi = cfg.scenario == channel::Scenario::Multi;
    const bool fading = cfg.model.kind != channel::FadingKind::AWGN;

    cfg.n_tx = multi ? 2 : 1;
    r.take("n_tx", [&](const std::string& v) { cfg.n_tx = Reader::to_size(v); });
    cfg.n_rx = cfg.n_tx;
    r.take("n_rx", [&](const std::string& v) { cfg.n_rx = Reader::to_size(v); });

    r.take("ae_epochs", [&](const std::string& v) { cfg.ae_epochs = Reader::to_size(v); });
    r.take("ae_batch", [&](const std::string& v) { cfg.ae_batch = Reader::to_size(v); });
    r.take("ae_lr", [&](const std::string& v) { cfg.ae_lr = Reader::to_double(v); });

    // Training SNR defaults follow the experiment recipes per channel.
    if (multi) {
        switch (cfg.model.kind) {
            case channel::FadingKind::AWGN: cfg.ae_train_snr_db = 8.0; break;
            case channel::FadingKind::Rayleigh: cfg.ae_train_snr_db = 16.0; break;
            case channel::FadingKind::Rician: cfg.ae_train_snr_db = 14.0; break;
        }
    } else {
        cfg.ae_train_snr_db = fading ? 16.0 : 4.0;
    }
    r.take("ae_train_snr_db",
           [&](const std::string& v) { cfg.ae_train_snr_db = Reader::to_double(v); });

    r.take("train_size", [&](const std::string& v) { cfg.train_size = Reader::to_size(v); });
    r.take("test_size", [&](const std::string& v) { cfg.test_size = Reader::to_size(v); });
    r.take("covert_epochs", [&](const std::string& v) { cfg.covert_epochs = Reader::to_size(v); });
    r.take("covert_lr", [&](const std::string& v) { cfg.covert_lr = Reader::to_double(v); });
    r.take("covert_lr_late",
           [&](const std::string& v) { cfg.covert_lr_late = Reader::to_double(v); });
    r.take("covert_lr_drop_epoch",
           [&](const std::string& v) { cfg.covert_lr_drop_epoch = Reader::to_size(v); });

    // Loss-weight ratios: single-user lambda_w = 2 lambda_b = 4 lambda_u,
    // multi-user lambda_w = 3 lambda_b = 6 lambda_u.
    cfg.lambda_u = 1.0;
    cfg.lambda_b = 2.0;
    cfg.lambda_w = multi ? 6.0 : 4.0;
    r.take("lambda_b", [&](const std::string& v) { cfg.lambda_b = Reader::to_double(v); });
    r.take("lambda_u", [&](const std::string& v) { cfg.lambda_u = Reader::to_double(v); });
    r.take("lambda_w", [&](const std::string& v) { cfg.lambda_w = Reader::to_double(v); });
    {
        const double wb = multi ? 3.0 : 2.0;
        const double wu = multi ? 6.0 : 4.0;
        cfg.lambda_ratio_default =
            std::abs(cfg.lambda_w - wb * cfg.lambda_b) < 1e-12 &&
            std::abs(cfg.lambda_w - wu * cfg.lambda_u) < 1e-12;
    }

    // Covert training SNR ranges per scenario/channel.
    if (multi) {
        switch (cfg.model.kind) {
            case channel::FadingKind::AWGN: cfg.snr_low_db = 0.0; cfg.snr_high_db = 10.0; break;
            case channel::FadingKind::Rician: cfg.snr_low_db = 0.0; cfg.snr_high_db = 20.0; break;
            case channel::FadingKind::Rayleigh: cfg.snr_low_db = 10.0; cfg.snr_high_db = 30.0; break;
        }
    } else if (fading) {
        cfg.snr_low_db = 10.0;
        cfg.snr_high_db = 30.0;
    } else {
        cfg.snr_low_db = -2.0;
        cfg.snr_high_db = 8.0;
    }
    r.take("snr_low_db", [&](const std::string& v) { cfg.snr_low_db = Reader::to_double(v); });
    r.take("snr_high_db", [&](const std::string& v) { cfg.snr_high_db = Reader::to_double(v); });

    r.take("update_order", [&](const std::string& v) {
        if (v != "willie-alice-bob" && v != "willie-bob-alice") {
            throw std::runtime_error("expected willie-alice-bob|willie-bob-alice");
        }
        cfg.update_order = v;
    });
    r.take("range_objective", [&](const std::string& v) {
        if (v != "literal" && v != "covert") throw std::runtime_error("expected literal|covert");
        cfg.range_objective = v;
    });
    r.take("range_search_epochs",
           [&](const std::string& v) { cfg.range_search_epochs = Reader::to_size(v); });
    r.take("range_search_max_candidates",
           [&](const std::string& v) { cfg.range_search_max_candidates = Reader::to_size(v); });
    r.take("audit_epochs", [&](const std::string& v) { cfg.audit_epochs = Reader::to_size(v); });
    r.take("audit_eval_blocks",
           [&](const std::string& v) { cfg.audit_eval_blocks = Reader::to_size(v); });

    if (fading) {
        cfg.sweep_snrs = parse_snr_list("0:2:30");
    } else {
        cfg.sweep_snrs = parse_snr_list(multi ? "-4:1:10" : "-4:1:8");
    }
    r.take("sweep_snrs", [&](const std::string& v) { cfg.sweep_snrs = parse_snr_list(v); });
    r.take("trials_per_snr",
           [&](const std::string& v) { cfg.trials_per_snr = Reader::to_size(v); });

    switch (cfg.model.kind) {
        case channel::FadingKind::AWGN: cfg.constellation_snrs = {6.0}; break;
        case channel::FadingKind::Rayleigh: cfg.constellation_snrs = {15.0}; break;
        case channel::FadingKind::Rician: cfg.constellation_snrs = {16.0}; break;
    }
    r.take("constellation_snrs",
           [&](const std::string& v) { cfg.constellation_snrs = parse_snr_list(v); });
    r.take("constellation_trials",
           [&](const std::string& v) { cfg.constellation_trials = Reader::to_size(v); });
    r.take("constellation_message",
           [&](const std::string& v) { cfg.constellation_message = Reader::to_size(v); });
    r.take("fast", [&](const std::string& v) {
        if (v == "true" || v == "1") cfg.fast = true;
        else if (v == "false" || v == "0") cfg.fast = false;
        else throw std::runtime_error("expected true|false");
    });

    // Semantic validation; collect everything before failing.
    if (cfg.k == 0 || cfg.k > 16) r.errors.push_back("k (need 1..16)");
    if (cfg.k_c == 0 || cfg.k_c > cfg.k) r.errors.push_back("k_c (need 1..k)");
    if (cfg.n == 0 || cfg.n > 64) r.errors.push_back("n (need 1..64)");
    if (cfg.snr_low_db > cfg.snr_high_db) r.errors.push_back("snr_low_db > snr_high_db");
    if (multi && cfg.n_tx < 2) r.errors.push_back("n_tx (multi scenario needs >= 2)");
    if (multi && cfg.n_rx < cfg.n_tx) r.errors.push_back("n_rx (need >= n_tx)");
    if (multi && !fading && cfg.n_rx != cfg.n_tx) {
        r.errors.push_back("n_rx (multi awgn needs n_rx == n_tx)");
    }
    if (!multi && (raw.count("n_tx") || raw.count("n_rx"))) {
        if (cfg.n_tx != 1 || cfg.n_rx != 1) r.errors.push_back("n_tx/n_rx (single scenario uses 1)");
    }
    if (cfg.ae_batch == 0 || cfg.train_size == 0) r.errors.push_back("ae_batch/train_size");
    if (cfg.constellation_message >= (std::size_t{1} << cfg.k)) {
        r.errors.push_back("constellation_message (need < 2^k)");
    }

    if (!r.errors.empty()) {
        std::string msg = "config: invalid values:";
        for (const auto& e : r.errors) msg += " " + e + ";";
        throw ConfigError(msg);
    }

    if (cfg.fast) apply_fast_profile(cfg, raw);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_fast_profile(ExperimentConfig& cfg, const std::map<std::string, std::string>& raw) {
    cfg.fast = true;
    if (!raw.count("ae_epochs")) cfg.ae_epochs = 60;
    if (!raw.count("covert_epochs")) cfg.covert_epochs = 500;
    if (!raw.count("trials_per_snr")) cfg.trials_per_snr = 10000;
}

ae::AeConfig ExperimentConfig::ae_config() const {
    ae::AeConfig a;
    a.n = n;
    a.k = k;
    a.scenario = scenario;
    a.model = model;
    a.n_tx = n_tx;
    a.n_rx = n_rx;
    a.train_snr_db = ae_train_snr_db;
    a.epochs = ae_epochs;
    a.batch = ae_batch;
    a.lr = ae_lr;
    a.train_size = train_size;
    a.test_size = test_size;
    return a;
}

covert::CovertConfig ExperimentConfig::covert_config() const {
    covert::CovertConfig c;
    c.k_c = k_c;
    c.lambda_b = lambda_b;
    c.lambda_u = lambda_u;
    c.lambda_w = lambda_w;
    c.snr_low_db = snr_low_db;
    c.snr_high_db = snr_high_db;
    c.epochs = covert_epochs;
    c.batch = ae_batch;
    c.train_size = train_size;
    c.lr_initial = covert_lr;
    c.lr_late = covert_lr_late;
    c.lr_drop_epoch = covert_lr_drop_epoch;
    c.order = update_order == "willie-bob-alice"
                  ? covert::CovertConfig::UpdateOrder::WillieBobAlice
                  : covert::CovertConfig::UpdateOrder::WillieAliceBob;
    c.range_objective = range_objective == "literal"
                            ? covert::CovertConfig::RangeObjective::Literal
                            : covert::CovertConfig::RangeObjective::Covert;
    c.range_search_epochs = range_search_epochs;
    return c;
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    auto fmt = [](double v) { return csv::format_double(v); };
    kv["seed"] = std::to_string(cfg.seed);
    kv["scenario"] = cfg.scenario == channel::Scenario::Multi ? "multi" : "single";
    kv["channel"] = channel::fading_name(cfg.model.kind);
    kv["rician_k"] = fmt(cfg.model.rician_k);
    kv["n"] = std::to_string(cfg.n);
    kv["k"] = std::to_string(cfg.k);
    kv["k_c"] = std::to_string(cfg.k_c);
    kv["n_tx"] = std::to_string(cfg.n_tx);
    kv["n_rx"] = std::to_string(cfg.n_rx);
    kv["ae_epochs"] = std::to_string(cfg.ae_epochs);
    kv["ae_batch"] = std::to_string(cfg.ae_batch);
    kv["ae_lr"] = fmt(cfg.ae_lr);
    kv["ae_train_snr_db"] = fmt(cfg.ae_train_snr_db);
    kv["train_size"] = std::to_string(cfg.train_size);
    kv["test_size"] = std::to_string(cfg.test_size);
    kv["covert_epochs"] = std::to_string(cfg.covert_epochs);
    kv["covert_lr"] = fmt(cfg.covert_lr);
    kv["covert_lr_late"] = fmt(cfg.covert_lr_late);
    kv["covert_lr_drop_epoch"] = std::to_string(cfg.covert_lr_drop_epoch);
    kv["lambda_b"] = fmt(cfg.lambda_b);
    kv["lambda_u"] = fmt(cfg.lambda_u);
    kv["lambda_w"] = fmt(cfg.lambda_w);
    kv["snr_low_db"] = fmt(cfg.snr_low_db);
    kv["snr_high_db"] = fmt(cfg.snr_high_db);
    kv["update_order"] = cfg.update_order;
    kv["range_objective"] = cfg.range_objective;
    kv["range_search_epochs"] = std::to_string(cfg.range_search_epochs);
    kv["range_search_max_candidates"] = std::to_string(cfg.range_search_max_candidates);
    kv["audit_epochs"] = std::to_string(cfg.audit_epochs);
    kv["audit_eval_blocks"] = std::to_string(cfg.audit_eval_blocks);
    {
        std::string s;
        for (std::size_t i = 0; i < cfg.sweep_snrs.size(); ++i) {
            if (i) s += ",";
            s += fmt(cfg.sweep_snrs[i]);
        }
        kv["sweep_snrs"] = s;
    }
    kv["trials_per_snr"] = std::to_string(cfg.trials_per_snr);
    {
        std::string s;
        for (std::size_t i = 0; i < cfg.constellation_snrs.size(); ++i) {
            if (i) s += ",";
            s += fmt(cfg.constellation_snrs[i]);
        }
        kv["constellation_snrs"] = s;
    }
    kv["constellation_trials"] = std::to_string(cfg.constellation_trials);
    kv["constellation_message"] = std::to_string(cfg.constellation_message);
    kv["fast"] = cfg.fast ? "true" : "false";

    std::string out = "# resolved configuration\n";
    out += cfg.lambda_ratio_default ? "# lambda ratios: scenario defaults\n"
                                    : "# lambda ratios: OVERRIDDEN from scenario defaults\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

}  // namespace cwnet::harness
