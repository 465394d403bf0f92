#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "aptbm/sim.hpp"

// Flat INI-style experiment configuration: [section] headers, key = value
// lines, '#' or ';' comments. Unknown sections and keys are rejected so typos
// fail loudly instead of silently running the wrong experiment.

namespace aptbm {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    return d;
}

inline long parse_long(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    long n;
    try {
        n = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
    return n;
}

/// Accepts "a", "a+bi", "a-bi".
inline cplx parse_complex(const std::string& v, const std::string& key) {
    std::string s = trim(v);
    if (s.empty()) throw std::invalid_argument("config: empty complex in " + key);
    if (s.back() == 'i' || s.back() == 'j') {
        s.pop_back();
        // Split at the last +/- that is not a leading sign or exponent sign.
        std::size_t split = std::string::npos;
        for (std::size_t i = s.size(); i-- > 1;) {
            if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
                split = i;
                break;
            }
        }
        if (split == std::string::npos) return {0.0, parse_double(s, key)};
        const double re = parse_double(s.substr(0, split), key);
        std::string im_s = s.substr(split);
        if (im_s == "+") im_s = "1";
        if (im_s == "-") im_s = "-1";
        return {re, parse_double(im_s, key)};
    }
    return {parse_double(s, key), 0.0};
}

inline std::vector<cplx> parse_complex_list(const std::string& v, const std::string& key) {
    std::vector<cplx> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_complex(item, key));
    }
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

}  // namespace detail

/// Applies one key from a config file or command line to the config.
/// `section` is one of experiment, pa, waveform, channel.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& section,
                             const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_long;
    if (section == "experiment") {
        if (key == "method") { cfg.method = method_from_name(value); return; }
        if (key == "mo") { cfg.mo = static_cast<int>(parse_long(value, key)); return; }
        if (key == "m") { cfg.m = static_cast<int>(parse_long(value, key)); return; }
        if (key == "l") { cfg.l = static_cast<int>(parse_long(value, key)); return; }
        if (key == "trials") { cfg.trials = parse_long(value, key); return; }
        if (key == "snr_db") { cfg.snr_db = parse_double(value, key); return; }
        if (key == "ibo_db") {
            cfg.ibo_db = parse_double(value, key);
            cfg.pin_dbm = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        if (key == "pin_dbm") {
            cfg.pin_dbm = parse_double(value, key);
            cfg.ibo_db = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        if (key == "seed") { cfg.seed = static_cast<std::uint64_t>(parse_long(value, key)); return; }
        if (key == "k_iters") { cfg.k_iters = static_cast<int>(parse_long(value, key)); return; }
        if (key == "equalizer") {
            if (value == "known-gain") cfg.equalizer = EqualizerMode::KnownGain;
            else if (value == "blind-avg-power") cfg.equalizer = EqualizerMode::BlindAvgPower;
            else throw std::invalid_argument("config: unknown equalizer '" + value + "'");
            return;
        }
        if (key == "output") { cfg.output = value; return; }
        if (key == "batch_blocks") { cfg.batch_blocks = static_cast<int>(parse_long(value, key)); return; }
        if (key == "workers") { cfg.workers = static_cast<int>(parse_long(value, key)); return; }
    } else if (section == "pa") {
        if (key == "kind") {
            if (value == "modified-rapp") cfg.pa = RappParams{};
            else if (value == "soft-limiter") cfg.pa = SoftLimiterParams{};
            else if (value == "ideal-linear") cfg.pa = IdealLinearParams{};
            else if (value == "table-driven") cfg.pa = PaTable{};
            else throw std::invalid_argument("config: unknown pa kind '" + value + "'");
            cfg.pa_kind = value;
            return;
        }
        if (key == "eta_max") { cfg.eta_max = parse_double(value, key); return; }
        if (key == "table") {
            cfg.pa = load_pa_table_file(value);
            cfg.pa_kind = "table-driven";
            return;
        }
        if (auto* rapp = std::get_if<RappParams>(&cfg.pa)) {
            if (key == "g0") { rapp->g0 = parse_double(value, key); return; }
            if (key == "a_sat") { rapp->a_sat = parse_double(value, key); return; }
            if (key == "alpha0") { rapp->alpha0 = parse_double(value, key); return; }
            if (key == "beta0") { rapp->beta0 = parse_double(value, key); return; }
            if (key == "q0") { rapp->q0 = parse_double(value, key); return; }
            if (key == "q1") { rapp->q1 = parse_double(value, key); return; }
            if (key == "q2") { rapp->q2 = parse_double(value, key); return; }
        }
        if (auto* lim = std::get_if<SoftLimiterParams>(&cfg.pa)) {
            if (key == "gain") { lim->gain = parse_double(value, key); return; }
            if (key == "a_clip") { lim->a_clip = parse_double(value, key); return; }
        }
        if (auto* lin = std::get_if<IdealLinearParams>(&cfg.pa)) {
            if (key == "gain") { lin->gain = parse_double(value, key); return; }
        }
    } else if (section == "waveform") {
        if (key == "rolloff") { cfg.rolloff = parse_double(value, key); return; }
        if (key == "sps") { cfg.sps = static_cast<int>(parse_long(value, key)); return; }
        if (key == "span") { cfg.span = static_cast<int>(parse_long(value, key)); return; }
    } else if (section == "channel") {
        if (key == "mode") {
            if (value == "awgn") cfg.channel_mode = ChannelMode::Awgn;
            else if (value == "fir") cfg.channel_mode = ChannelMode::Fir;
            else throw std::invalid_argument("config: unknown channel mode '" + value + "'");
            return;
        }
        if (key == "fir_taps") { cfg.fir_taps = detail::parse_complex_list(value, key); return; }
    } else {
        throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    throw std::invalid_argument("config: unknown key '" + key + "' in section [" + section + "]");
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::string section = "experiment";
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            }
            section = detail::trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        try {
            apply_config_key(cfg, section, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path);
    return parse_config(f);
}

}  // namespace aptbm
