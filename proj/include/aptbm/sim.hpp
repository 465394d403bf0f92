#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "aptbm/alphabet.hpp"
#include "aptbm/channel.hpp"
#include "aptbm/demod.hpp"
#include "aptbm/pa.hpp"
#include "aptbm/reconstruct.hpp"
#include "aptbm/rng.hpp"
#include "aptbm/waveform.hpp"

// End-to-end Monte Carlo experiments: bits -> blocks -> RRC shaping -> PA ->
// channel -> matched filter -> equalizer -> reconstruction -> demapping, with
// BER/SER/MSE/PAE accounting. Trials run in fixed-size batches, each with an
// independently derived seed stream, so results are reproducible and do not
// depend on the worker count.

namespace aptbm {

enum class Method { None, Baseline, PcBaseline, Proposed };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::None: return "none";
        case Method::Baseline: return "baseline";
        case Method::PcBaseline: return "pc-baseline";
        case Method::Proposed: return "proposed";
    }
    return "?";
}

inline Method method_from_name(const std::string& s) {
    if (s == "none") return Method::None;
    if (s == "baseline") return Method::Baseline;
    if (s == "pc-baseline") return Method::PcBaseline;
    if (s == "proposed") return Method::Proposed;
    throw std::invalid_argument("unknown method '" + s + "'");
}

struct ExperimentConfig {
    int mo = 16;
    int m = 0, l = 0;  // 0 = derive the default split from mo
    Method method = Method::Proposed;

    PaModel pa = RappParams{};
    std::string pa_kind = "modified-rapp";
    double eta_max = 0.5;

    // Operating point: exactly one of ibo_db / pin_dbm.
    double ibo_db = 8.0;
    double pin_dbm = std::numeric_limits<double>::quiet_NaN();

    double snr_db = 20.0;

    double rolloff = 0.25;
    int sps = 4;
    int span = 16;

    long trials = 100000;  // blocks
    int k_iters = 2;
    std::uint64_t seed = 1;
    EqualizerMode equalizer = EqualizerMode::KnownGain;
    ChannelMode channel_mode = ChannelMode::Awgn;
    std::vector<cplx> fir_taps;

    std::string output;      // CSV path; empty = no file
    int batch_blocks = 2048;
    int workers = 0;  // 0 = hardware concurrency (capped by APTBM_WORKERS)

    std::uint64_t seed_salt = 0;  // set by run_sweep for per-point streams
};

/// One CSV row of a Monte Carlo experiment.
struct SweepRecord {
    std::string method;
    int mo = 0;
    double ibo_db = 0.0;
    double snr_db = 0.0;
    long trials = 0;
    long long bit_errors = 0;
    double ber = 0.0;
    long long block_errors = 0;
    double ser = 0.0;
    double mse_coarse = 0.0;
    std::vector<double> mse_fine;  // one entry per fine iteration (proposed only)
    double pout_dbm = 0.0;
    double pae = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Everything derived once per experiment and shared read-only by workers.
struct ExperimentContext {
    ExperimentConfig cfg;
    Alphabet alphabet;
    RrcFilter rrc;
    AmPmTable ampm;
    CoarseConfig coarse;
    FineConfig fine;
    ChannelConfig channel;
    double p_in_mw = 0.0;
    double block_power = 0.0;
    double ibo_record = 0.0;  // IBO written to the record (NaN when unknown)
    cplx known_gain;
};

// Default phase/sphere splits keep the phase ring dense relative to the
// sphere grid; the reconstruction methods differentiate through the
// AM-PM-driven phase errors these alphabets expose.
inline void derive_split(int mo, int& m, int& l) {
    switch (mo) {
        case 16: m = 8; l = 2; break;
        case 32: m = 8; l = 4; break;
        case 64: m = 16; l = 4; break;
        default:
            throw std::invalid_argument(
                "no default phase/sphere split for this modulation order; set m and l");
    }
}

inline ExperimentContext make_context(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.batch_blocks < 1) throw std::invalid_argument("config: batch_blocks must be >= 1");
    if (cfg.k_iters < 1) throw std::invalid_argument("config: k_iters must be >= 1");
    if (cfg.m == 0 && cfg.l == 0) derive_split(cfg.mo, cfg.m, cfg.l);
    if (cfg.m * cfg.l != cfg.mo) throw std::invalid_argument("config: m*l must equal mo");
    if (cfg.channel_mode == ChannelMode::Fir && cfg.fir_taps.empty()) {
        throw std::invalid_argument("config: fir channel mode needs fir_taps");
    }

    const bool have_ibo = std::isfinite(cfg.ibo_db);
    const bool have_pin = std::isfinite(cfg.pin_dbm);
    if (have_ibo == have_pin) {
        throw std::invalid_argument("config: set exactly one of ibo_db / pin_dbm");
    }

    ExperimentContext ctx;
    double pin_dbm;
    double ibo_record = std::numeric_limits<double>::quiet_NaN();
    if (have_ibo) {
        const double psat_dbm = input_saturation_power_dbm(cfg.pa);
        pin_dbm = psat_dbm - cfg.ibo_db;
        ibo_record = cfg.ibo_db;
    } else {
        pin_dbm = cfg.pin_dbm;
        if (std::holds_alternative<RappParams>(cfg.pa)) {
            ibo_record = input_saturation_power_dbm(cfg.pa) - pin_dbm;
        }
    }
    ctx.p_in_mw = dbm_to_mw(pin_dbm);
    ctx.block_power = 2.0 * ctx.p_in_mw;
    ctx.ibo_record = ibo_record;

    ctx.alphabet = make_alphabet(cfg.m, cfg.l, ctx.block_power);
    ctx.rrc = rrc_design(cfg.rolloff, cfg.sps, cfg.span);
    ctx.ampm = default_ampm_table(cfg.pa);
    ctx.coarse = {ctx.ampm, pin_dbm, PhaseSign::Plus};
    ctx.fine.k_iters = cfg.k_iters;
    ctx.channel.snr_db = cfg.snr_db;
    ctx.channel.mode = cfg.channel_mode;
    ctx.channel.fir_taps = cfg.fir_taps;
    ctx.channel.equalizer = cfg.equalizer;
    ctx.channel.block_power = ctx.block_power;
    ctx.known_gain = cplx(small_signal_gain(cfg.pa), 0.0);
    ctx.cfg = cfg;
    return ctx;
}

struct BatchResult {
    long blocks = 0;
    long long bit_errors = 0;
    long long block_errors = 0;
    double pout_sum = 0.0;  // sum |pa output|^2
    long long pout_count = 0;
    std::vector<double> mse_sums;  // coarse + per fine iteration (method-dependent)
};

inline BatchResult run_batch(const ExperimentContext& ctx, long nblocks, std::uint64_t batch_seed) {
    const ExperimentConfig& cfg = ctx.cfg;
    Rng rng(batch_seed);

    // Source bits and transmitted blocks.
    std::vector<BitWord> words(static_cast<std::size_t>(nblocks));
    std::vector<Block> tx(static_cast<std::size_t>(nblocks));
    const int kb = ctx.alphabet.bits_per_block;
    for (long i = 0; i < nblocks; ++i) {
        words[static_cast<std::size_t>(i)] = {rng.bits(kb), kb};
        tx[static_cast<std::size_t>(i)] = bits_to_block(words[static_cast<std::size_t>(i)], ctx.alphabet);
    }

    // Transmit chain.
    const std::vector<cplx> shaped = shape(tx, ctx.rrc);
    std::vector<cplx> amplified = pa_apply(shaped, cfg.pa);

    BatchResult res;
    res.blocks = nblocks;
    for (const auto& s : amplified) res.pout_sum += std::norm(s);
    res.pout_count = static_cast<long long>(amplified.size());
    const double ref_power = res.pout_sum / static_cast<double>(res.pout_count);

    if (cfg.channel_mode == ChannelMode::Fir) {
        amplified = apply_fir(amplified, cfg.fir_taps, cfg.sps);
    }
    const std::vector<cplx> received =
        add_awgn(std::move(amplified), cfg.snr_db, ref_power, cfg.sps,
                 derive_seed(batch_seed, fnv1a("noise", 5)));

    // Receive chain. The genie equalizer gain is the magnitude of the
    // batch's effective linear (Bussgang) gain: amplitudes come out at the
    // true scale, while the common AM-PM rotation is left in for the
    // reconstruction stages to handle.
    const std::vector<Block> rx = matched_filter(received, ctx.rrc);
    cplx known_gain = ctx.known_gain;
    if (ctx.channel.equalizer == EqualizerMode::KnownGain) {
        cplx cross{};
        double energy = 0.0;
        for (long i = 0; i < nblocks; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            cross += std::conj(tx[idx].a) * rx[idx].a + std::conj(tx[idx].b) * rx[idx].b;
            energy += std::norm(tx[idx].a) + std::norm(tx[idx].b);
        }
        const double g_eff = std::abs(cross) / energy;
        if (g_eff > 0.0) known_gain = cplx(g_eff, 0.0);
    }
    const std::vector<Block> eq = equalize(rx, ctx.channel, known_gain);

    // Reconstruction.
    ReconResult recon;
    switch (cfg.method) {
        case Method::None:
            recon.blocks = eq;
            break;
        case Method::Baseline:
            recon = baseline_reconstruct(eq, ctx.block_power, 1.0, cfg.m);
            break;
        case Method::PcBaseline:
            recon = pc_baseline_reconstruct(eq, ctx.block_power, ctx.coarse, 1.0, cfg.m);
            break;
        case Method::Proposed:
            recon = two_stage_reconstruct(eq, ctx.block_power, ctx.coarse, ctx.fine,
                                          ctx.alphabet, &tx);
            break;
    }

    // MSE accounting: the proposed method reports its trace; the single-shot
    // methods report the final MSE in the coarse slot.
    if (cfg.method == Method::Proposed) {
        res.mse_sums.resize(recon.trace.size());
        for (std::size_t i = 0; i < recon.trace.size(); ++i) {
            res.mse_sums[i] = recon.trace[i] * static_cast<double>(nblocks);
        }
    } else {
        double acc = 0.0;
        for (long i = 0; i < nblocks; ++i) {
            acc += block_distance_sq(recon.blocks[static_cast<std::size_t>(i)],
                                     tx[static_cast<std::size_t>(i)]);
        }
        res.mse_sums.assign(1, acc);
    }

    // Demap and count. The proposed path uses the O(L) per-phase search.
    for (long i = 0; i < nblocks; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const Decision d =
            cfg.method == Method::Proposed
                ? demap_with_phase(recon.blocks[idx], ctx.alphabet, recon.phase_estimates[idx])
                : demap_full(recon.blocks[idx], ctx.alphabet);
        const std::uint32_t diff = d.bits.bits ^ words[idx].bits;
        if (diff) {
            res.bit_errors += std::popcount(diff);
            ++res.block_errors;
        }
    }
    return res;
}

inline int effective_workers(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("APTBM_WORKERS")) {
        const int c = std::atoi(cap);
        if (c > 0 && c < n) n = c;
    }
    return n;
}

}  // namespace detail

inline SweepRecord run_experiment(const ExperimentConfig& cfg_in) {
    const detail::ExperimentContext ctx = detail::make_context(cfg_in);
    const ExperimentConfig& cfg = ctx.cfg;

    const long nbatches =
        (cfg.trials + cfg.batch_blocks - 1) / static_cast<long>(cfg.batch_blocks);
    std::vector<detail::BatchResult> partials(static_cast<std::size_t>(nbatches));

    const int nworkers =
        static_cast<int>(std::min<long>(detail::effective_workers(cfg.workers), nbatches));
    std::atomic<long> next{0};
    auto worker = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= nbatches) return;
            const long begin = b * cfg.batch_blocks;
            const long nblocks = std::min<long>(cfg.batch_blocks, cfg.trials - begin);
            const std::uint64_t seed =
                derive_seed(cfg.seed, cfg.seed_salt, static_cast<std::uint64_t>(b));
            partials[static_cast<std::size_t>(b)] = detail::run_batch(ctx, nblocks, seed);
        }
    };
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nworkers));
        for (int t = 0; t < nworkers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Reduce in batch order: integer sums for counts, ordered float sums for
    // the power/MSE accumulators, so output bytes are worker-count invariant.
    SweepRecord rec;
    rec.method = method_name(cfg.method);
    rec.mo = cfg.mo;
    rec.ibo_db = ctx.ibo_record;
    rec.snr_db = cfg.snr_db;
    rec.trials = cfg.trials;
    double pout_sum = 0.0;
    long long pout_count = 0;
    std::vector<double> mse_sums;
    for (const auto& part : partials) {
        rec.bit_errors += part.bit_errors;
        rec.block_errors += part.block_errors;
        pout_sum += part.pout_sum;
        pout_count += part.pout_count;
        if (mse_sums.size() < part.mse_sums.size()) mse_sums.resize(part.mse_sums.size(), 0.0);
        for (std::size_t i = 0; i < part.mse_sums.size(); ++i) mse_sums[i] += part.mse_sums[i];
    }
    const double total_bits =
        static_cast<double>(cfg.trials) * static_cast<double>(ctx.alphabet.bits_per_block);
    rec.ber = static_cast<double>(rec.bit_errors) / total_bits;
    rec.ser = static_cast<double>(rec.block_errors) / static_cast<double>(cfg.trials);
    if (!mse_sums.empty()) {
        rec.mse_coarse = mse_sums[0] / static_cast<double>(cfg.trials);
        for (std::size_t i = 1; i < mse_sums.size(); ++i) {
            rec.mse_fine.push_back(mse_sums[i] / static_cast<double>(cfg.trials));
        }
    }
    const double pout_mw = pout_sum / static_cast<double>(pout_count);
    rec.pout_dbm = mw_to_dbm(pout_mw);
    if (const auto p_max = max_output_power_mw(cfg.pa)) {
        rec.pae = pae(std::min(pout_mw, *p_max), *p_max, cfg.eta_max);
    }
    return rec;
}

/// One record per axis value; per-point seed streams are derived from
/// (master seed, axis, value) so points are independent yet reproducible.
inline std::vector<SweepRecord> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                          const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("run_sweep: empty value list");
    if (axis != "ibo" && axis != "snr" && axis != "k") {
        throw std::invalid_argument("run_sweep: axis must be ibo, snr, or k");
    }
    std::vector<SweepRecord> out;
    out.reserve(values.size());
    for (const double v : values) {
        ExperimentConfig cfg = base;
        if (axis == "ibo") {
            cfg.ibo_db = v;
            cfg.pin_dbm = std::numeric_limits<double>::quiet_NaN();
        } else if (axis == "snr") {
            cfg.snr_db = v;
        } else {
            const int k = static_cast<int>(v);
            if (k < 1 || static_cast<double>(k) != v) {
                throw std::invalid_argument("run_sweep: k values must be positive integers");
            }
            cfg.k_iters = k;
        }
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        cfg.seed_salt = derive_seed(fnv1a(axis.data(), axis.size()), bits);
        out.push_back(run_experiment(cfg));
    }
    return out;
}

/// Minimal IBO reaching the target BER, by log-linear interpolation of
/// log10(BER) against IBO. BERs below the resolution floor 3/(trials*bits)
/// are censored to that floor. Throws when the target is not bracketed.
inline double ibo_at_target(const std::vector<SweepRecord>& records, double target_ber) {
    if (records.size() < 2) throw std::invalid_argument("ibo_at_target: need >= 2 records");
    if (!(target_ber > 0.0)) throw std::invalid_argument("ibo_at_target: bad target");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].ibo_db < records[b].ibo_db;
    });
    auto censored = [](const SweepRecord& r) {
        const double bits_per_block = ilog2(r.mo);
        const double floor = 3.0 / (static_cast<double>(r.trials) * bits_per_block);
        return std::max(r.ber, floor);
    };
    for (std::size_t k = 0; k < order.size(); ++k) {
        const SweepRecord& cur = records[order[k]];
        const double bc = censored(cur);
        if (bc <= target_ber) {
            if (k == 0) return cur.ibo_db;
            const SweepRecord& prev = records[order[k - 1]];
            const double bp = censored(prev);
            if (bp <= target_ber) return prev.ibo_db;  // unreachable given scan order
            if (bc == bp) return cur.ibo_db;
            const double t = (std::log10(target_ber) - std::log10(bp)) /
                             (std::log10(bc) - std::log10(bp));
            return prev.ibo_db + t * (cur.ibo_db - prev.ibo_db);
        }
    }
    throw std::runtime_error("ibo_at_target: target BER not achieved on this sweep");
}

/// PAE improvement from backing the drive off less: PAE(ibo_b)/PAE(ibo_a) - 1,
/// with the output powers measured on long shaped waveforms through the model.
/// Models without a defined input saturation point use a 0 dBm reference;
/// only the IBO difference matters for the ratio.
inline double pae_report(const ExperimentConfig& base, double ibo_a_db, double ibo_b_db) {
    if (!(ibo_b_db < ibo_a_db)) {
        throw std::invalid_argument("pae_report: ibo_b must be below ibo_a");
    }
    double psat_dbm = 0.0;
    if (std::holds_alternative<RappParams>(base.pa)) {
        psat_dbm = input_saturation_power_dbm(base.pa);
    } else if (const auto* lim = std::get_if<SoftLimiterParams>(&base.pa)) {
        psat_dbm = mw_to_dbm((lim->a_clip / lim->gain) * (lim->a_clip / lim->gain));
    }
    auto mean_pout = [&base, psat_dbm](double ibo) {
        ExperimentConfig cfg = base;
        cfg.pin_dbm = psat_dbm - ibo;
        cfg.ibo_db = std::numeric_limits<double>::quiet_NaN();
        const detail::ExperimentContext ctx = detail::make_context(cfg);
        Rng rng(derive_seed(cfg.seed, fnv1a("pae", 3)));
        const long nblocks = std::min<long>(cfg.trials, 20000);
        std::vector<Block> tx(static_cast<std::size_t>(nblocks));
        for (auto& blk : tx) {
            const BitWord w{rng.bits(ctx.alphabet.bits_per_block), ctx.alphabet.bits_per_block};
            blk = bits_to_block(w, ctx.alphabet);
        }
        const std::vector<cplx> out = pa_apply(shape(tx, ctx.rrc), cfg.pa);
        double acc = 0.0;
        for (const auto& s : out) acc += std::norm(s);
        return acc / static_cast<double>(out.size());
    };
    return mean_pout(ibo_b_db) / mean_pout(ibo_a_db) - 1.0;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string csv_header() {
    return "method,mo,ibo_db,snr_db,trials,bit_errors,ber,block_errors,ser,"
           "mse_coarse,mse_fine,pout_dbm,pae";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

inline std::string csv_row(const SweepRecord& r) {
    std::string line = r.method;
    line += ',' + std::to_string(r.mo);
    line += ',' + detail::format_double(r.ibo_db);
    line += ',' + detail::format_double(r.snr_db);
    line += ',' + std::to_string(r.trials);
    line += ',' + std::to_string(r.bit_errors);
    line += ',' + detail::format_double(r.ber);
    line += ',' + std::to_string(r.block_errors);
    line += ',' + detail::format_double(r.ser);
    line += ',' + detail::format_double(r.mse_coarse);
    line += ',';
    for (std::size_t i = 0; i < r.mse_fine.size(); ++i) {
        if (i) line += ';';
        line += detail::format_double(r.mse_fine[i]);
    }
    line += ',' + detail::format_double(r.pout_dbm);
    line += ',' + detail::format_double(r.pae);
    return line;
}

/// Canonical key=value serialization of a config, used for the metadata hash.
inline std::string describe_config(const ExperimentConfig& c) {
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("method", method_name(c.method));
    kv("mo", std::to_string(c.mo));
    kv("m", std::to_string(c.m));
    kv("l", std::to_string(c.l));
    kv("pa_kind", c.pa_kind);
    kv("eta_max", detail::format_double(c.eta_max));
    kv("ibo_db", detail::format_double(c.ibo_db));
    kv("pin_dbm", detail::format_double(c.pin_dbm));
    kv("snr_db", detail::format_double(c.snr_db));
    kv("rolloff", detail::format_double(c.rolloff));
    kv("sps", std::to_string(c.sps));
    kv("span", std::to_string(c.span));
    kv("trials", std::to_string(c.trials));
    kv("k_iters", std::to_string(c.k_iters));
    kv("equalizer", c.equalizer == EqualizerMode::KnownGain ? "known-gain" : "blind-avg-power");
    kv("channel", c.channel_mode == ChannelMode::Awgn ? "awgn" : "fir");
    kv("batch_blocks", std::to_string(c.batch_blocks));
    return s;
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = describe_config(c);
    return fnv1a(s.data(), s.size());
}

inline void write_csv(std::ostream& out, const ExperimentConfig& cfg,
                      const std::vector<SweepRecord>& records) {
    char meta[64];
    std::snprintf(meta, sizeof(meta), "# config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash(cfg)),
                  static_cast<unsigned long long>(cfg.seed));
    out << meta << '\n' << csv_header() << '\n';
    for (const auto& r : records) out << csv_row(r) << '\n';
}

inline void write_csv_file(const std::string& path, const ExperimentConfig& cfg,
                           const std::vector<SweepRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    write_csv(f, cfg, records);
}

}  // namespace aptbm
