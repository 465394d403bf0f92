#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "aptbm/alphabet.hpp"

// Root-raised-cosine pulse shaping and matched filtering in complex baseband.
// Taps are unit-energy; shape() scales by sqrt(sps) so the waveform carries
// the same average power as the symbol stream, and matched_filter() undoes
// that factor, making the shape -> matched cascade unit-gain at the symbol
// instants.

namespace aptbm {

struct RrcFilter {
    double rolloff = 0.25;
    int sps = 4;
    int span = 16;                // symbols; even
    std::vector<double> taps;     // length span*sps + 1, unit energy
};

namespace detail {

/// RRC impulse response at t symbol periods, with the two removable
/// singularities evaluated by their limits.
inline double rrc_impulse(double t, double b) {
    if (std::abs(t) < 1e-12) return 1.0 - b + 4.0 * b / pi;
    const double quarter = 1.0 / (4.0 * b);
    if (std::abs(std::abs(t) - quarter) < 1e-9) {
        const double arg = pi * quarter;
        return (b / std::sqrt(2.0)) *
               ((1.0 + 2.0 / pi) * std::sin(arg) + (1.0 - 2.0 / pi) * std::cos(arg));
    }
    const double fbt = 4.0 * b * t;
    return (std::sin(pi * t * (1.0 - b)) + fbt * std::cos(pi * t * (1.0 + b))) /
           (pi * t * (1.0 - fbt * fbt));
}

}  // namespace detail

inline RrcFilter rrc_design(double rolloff, int sps, int span) {
    if (!(rolloff > 0.0) || rolloff > 1.0) throw std::invalid_argument("rrc_design: bad rolloff");
    if (sps < 2) throw std::invalid_argument("rrc_design: sps must be >= 2");
    if (span < 8 || span % 2 != 0) throw std::invalid_argument("rrc_design: span must be even, >= 8");
    RrcFilter f{rolloff, sps, span, {}};
    const int n = span * sps + 1;
    const int mid = span * sps / 2;
    f.taps.resize(static_cast<std::size_t>(n));
    double energy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i - mid) / sps;
        f.taps[static_cast<std::size_t>(i)] = detail::rrc_impulse(t, rolloff);
        energy += f.taps[static_cast<std::size_t>(i)] * f.taps[static_cast<std::size_t>(i)];
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (double& tap : f.taps) tap *= scale;
    return f;
}

/// Blocks serialized to the symbol stream a1, b1, a2, b2, ...
inline std::vector<cplx> serialize_blocks(const std::vector<Block>& blocks) {
    std::vector<cplx> syms;
    syms.reserve(2 * blocks.size());
    for (const auto& blk : blocks) {
        syms.push_back(blk.a);
        syms.push_back(blk.b);
    }
    return syms;
}

inline std::vector<Block> pair_blocks(const std::vector<cplx>& syms) {
    std::vector<Block> blocks(syms.size() / 2);
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] = {syms[2 * i], syms[2 * i + 1]};
    return blocks;
}

/// Upsample by zero insertion and convolve with the taps.
/// Output length = (2N + span) * sps for N blocks.
inline std::vector<cplx> shape(const std::vector<Block>& blocks, const RrcFilter& f) {
    if (blocks.empty()) throw std::invalid_argument("shape: empty block sequence");
    const std::vector<cplx> syms = serialize_blocks(blocks);
    const std::size_t nsym = syms.size();
    const std::size_t ntaps = f.taps.size();
    std::vector<cplx> out((nsym + static_cast<std::size_t>(f.span)) * static_cast<std::size_t>(f.sps));
    const double amp = std::sqrt(static_cast<double>(f.sps));
    for (std::size_t k = 0; k < nsym; ++k) {
        const cplx s = amp * syms[k];
        if (s == cplx{}) continue;
        cplx* dst = out.data() + k * static_cast<std::size_t>(f.sps);
        for (std::size_t j = 0; j < ntaps; ++j) dst[j] += s * f.taps[j];
    }
    return out;
}

/// Matched filter, deterministic group-delay compensation, symbol-rate
/// sampling, and re-pairing into blocks. declared_delay accounts for samples
/// known to precede the shaped stream.
inline std::vector<Block> matched_filter(const std::vector<cplx>& samples, const RrcFilter& f,
                                         std::size_t declared_delay = 0) {
    const std::size_t sps = static_cast<std::size_t>(f.sps);
    if (samples.size() < declared_delay) throw std::invalid_argument("matched_filter: short input");
    const std::size_t len = samples.size() - declared_delay;
    if (len % sps != 0) throw std::invalid_argument("matched_filter: length not a multiple of sps");
    const std::size_t total_syms = len / sps;
    if (total_syms < static_cast<std::size_t>(f.span) + 2) {
        throw std::invalid_argument("matched_filter: input too short for filter span");
    }
    const std::size_t nsym = total_syms - static_cast<std::size_t>(f.span);
    if (nsym % 2 != 0) throw std::invalid_argument("matched_filter: odd symbol count");

    const std::size_t ntaps = f.taps.size();
    const std::size_t group_delay = static_cast<std::size_t>(f.span) * sps;
    const double amp = 1.0 / std::sqrt(static_cast<double>(f.sps));
    std::vector<cplx> syms(nsym);
    const cplx* in = samples.data() + declared_delay;
    for (std::size_t k = 0; k < nsym; ++k) {
        // Full-convolution output index group_delay + k*sps; taps are
        // real-symmetric so the matched taps equal the taps themselves.
        const std::size_t pos = group_delay + k * sps;
        cplx acc{};
        const std::size_t j_lo = pos >= len - 1 ? pos - (len - 1) : 0;
        const std::size_t j_hi = std::min(ntaps - 1, pos);
        for (std::size_t j = j_lo; j <= j_hi; ++j) acc += f.taps[j] * in[pos - j];
        syms[k] = amp * acc;
    }
    return pair_blocks(syms);
}

}  // namespace aptbm
