#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aptbm/alphabet.hpp"
#include "aptbm/rng.hpp"
#include "aptbm/waveform.hpp"

// AWGN channel plus post-matched-filter equalization. SNR is defined at
// symbol level (Es/N0 after matched filtering): the per-sample noise variance
// is sps * Es / 10^(SNR/10), and the unit-energy matched filter reduces noise
// power by sps.

namespace aptbm {

enum class ChannelMode { Awgn, Fir };
enum class EqualizerMode { KnownGain, BlindAvgPower };

struct ChannelConfig {
    double snr_db = 20.0;
    ChannelMode mode = ChannelMode::Awgn;
    std::vector<cplx> fir_taps;  // symbol-spaced; required in Fir mode
    EqualizerMode equalizer = EqualizerMode::KnownGain;
    double block_power = 0.0;  // target P for the blind equalizer
};

/// Adds circular complex Gaussian noise calibrated to the post-matched-filter
/// symbol SNR. An infinite snr_db passes the samples through unchanged.
inline std::vector<cplx> add_awgn(std::vector<cplx> samples, double snr_db,
                                  double ref_symbol_power_mw, int sps, std::uint64_t seed) {
    if (!(ref_symbol_power_mw > 0.0)) throw std::invalid_argument("add_awgn: bad reference power");
    if (std::isinf(snr_db) && snr_db > 0.0) return samples;
    const double variance = sps * ref_symbol_power_mw / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(variance / 2.0);
    Rng rng(seed);
    for (auto& x : samples) x += cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
    return samples;
}

/// Symbol-spaced FIR channel applied at the waveform level: tap m acts at a
/// delay of m*sps samples, so the post-matched-filter symbol stream sees
/// exactly the declared taps.
inline std::vector<cplx> apply_fir(const std::vector<cplx>& samples,
                                   const std::vector<cplx>& taps, int sps) {
    if (taps.empty()) throw std::invalid_argument("apply_fir: empty taps");
    std::vector<cplx> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        cplx acc{};
        for (std::size_t m = 0; m < taps.size(); ++m) {
            const std::size_t d = m * static_cast<std::size_t>(sps);
            if (d > i) break;
            acc += taps[m] * samples[i - d];
        }
        out[i] = acc;
    }
    return out;
}

namespace detail {

/// Zero-forcing inverse of a symbol-spaced FIR: recursive deconvolution.
/// Exact for minimum-phase taps.
inline void zf_invert(std::vector<cplx>& syms, const std::vector<cplx>& taps) {
    if (taps.empty() || taps.front() == cplx{}) {
        throw std::invalid_argument("equalize: FIR taps need a nonzero leading tap");
    }
    for (std::size_t i = 0; i < syms.size(); ++i) {
        cplx acc = syms[i];
        for (std::size_t m = 1; m < taps.size() && m <= i; ++m) acc -= taps[m] * syms[i - m];
        syms[i] = acc / taps.front();
    }
}

}  // namespace detail

inline std::vector<Block> equalize(const std::vector<Block>& blocks, const ChannelConfig& cfg,
                                   cplx known_gain) {
    std::vector<cplx> syms = serialize_blocks(blocks);
    if (cfg.mode == ChannelMode::Fir) detail::zf_invert(syms, cfg.fir_taps);
    if (cfg.equalizer == EqualizerMode::KnownGain) {
        if (known_gain == cplx{}) throw std::invalid_argument("equalize: zero gain");
        for (auto& s : syms) s /= known_gain;
    } else {
        if (!(cfg.block_power > 0.0)) {
            throw std::invalid_argument("equalize: blind mode needs a target block power");
        }
        double mean_block_power = 0.0;
        for (const auto& s : syms) mean_block_power += std::norm(s);
        mean_block_power /= static_cast<double>(blocks.size());
        const double scale = std::sqrt(cfg.block_power / mean_block_power);
        for (auto& s : syms) s *= scale;
    }
    return pair_blocks(syms);
}

}  // namespace aptbm
