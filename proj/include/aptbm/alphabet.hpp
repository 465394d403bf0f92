#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

// Block modulation on the Poincare sphere: each block carries two consecutive
// complex symbols (a, b) with constant total power P and symbol phases summing
// to twice the block's initial phase. Amplitudes are in sqrt-milliwatts
// throughout, so instantaneous power in mW is |x|^2.

namespace aptbm {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Point on the sphere of radius p (power units); s1^2+s2^2+s3^2 = p^2.
struct SphereState {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
};

/// One of the M initial phases; value = 2*pi*index/M.
struct InitialPhase {
    int index = 0;
    double value = 0.0;
};

/// Two consecutive time-domain symbols forming one modulation block.
struct Block {
    cplx a{}, b{};
};

/// Fixed-length bit word, most significant bit first.
struct BitWord {
    std::uint32_t bits = 0;
    int length = 0;

    bool operator==(const BitWord&) const = default;
    int bit(int i) const { return static_cast<int>((bits >> (length - 1 - i)) & 1u); }
};

inline bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline int ilog2(int v) {
    int n = 0;
    while ((1 << n) < v) ++n;
    return n;
}

inline std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

inline std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t v = 0;
    for (; g; g >>= 1) v ^= g;
    return v;
}

/// Fold x to the centered interval [-period/2, period/2].
inline double fold_centered(double x, double period) {
    return x - period * std::round(x / period);
}

/// The m uniform initial phases {2*pi*k/m}, sorted ascending.
inline std::vector<InitialPhase> build_phase_alphabet(int m) {
    if (!is_pow2(m)) throw std::invalid_argument("build_phase_alphabet: m must be a power of two");
    std::vector<InitialPhase> out(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] = {k, two_pi * k / m};
    return out;
}

/// l points on the sphere of radius p via a Fibonacci lattice. Deterministic,
/// near-uniform, and pole-free (no point has s1 = +-p).
inline std::vector<SphereState> build_sphere_alphabet(int l, double p) {
    if (!is_pow2(l) || l < 2) {
        throw std::invalid_argument("build_sphere_alphabet: l must be a power of two >= 2");
    }
    if (!(p > 0.0)) throw std::invalid_argument("build_sphere_alphabet: p must be positive");
    constexpr double golden_ratio = 1.6180339887498948482;
    const double azimuth_step = two_pi * (1.0 - 1.0 / golden_ratio);
    std::vector<SphereState> out(static_cast<std::size_t>(l));
    for (int k = 0; k < l; ++k) {
        const double s1 = p * (1.0 - (2.0 * k + 1.0) / l);
        const double r = std::sqrt(p * p - s1 * s1);
        const double az = azimuth_step * k;
        out[static_cast<std::size_t>(k)] = {s1, r * std::cos(az), r * std::sin(az)};
    }
    return out;
}

/// Builds the block for (phase, state): a = e^{j phi} sqrt((p+s1)/2) e^{-j theta/2},
/// b = e^{j phi} sqrt((p-s1)/2) e^{+j theta/2} with theta = atan2(s3, s2)/2.
/// atan2 (rather than arctan of the ratio) keeps antipodal (s2, s3) pairs
/// distinct, so the map stays injective over the whole sphere. The half-angle
/// split keeps every block's symbols within a quarter turn of e^{j phi}, so
/// no sphere state degrades the phase-sum direction or collapses pairwise
/// block distances.
inline Block map_block(const InitialPhase& phase, const SphereState& state, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("map_block: p must be positive");
    if (std::abs(state.s1) >= p) {
        throw std::invalid_argument("map_block: degenerate pole state (|s1| >= p)");
    }
    const double half_theta = 0.25 * std::atan2(state.s3, state.s2);
    const double ra = std::sqrt((p + state.s1) / 2.0);
    const double rb = std::sqrt((p - state.s1) / 2.0);
    return {std::polar(ra, phase.value - half_theta), std::polar(rb, phase.value + half_theta)};
}

/// The full ML-block alphabet plus its bit labeling: Gray code on the phase
/// ring (adjacent phases differ in one bit), natural binary on sphere indices.
struct Alphabet {
    int m = 0, l = 0;
    double p = 0.0;
    int phase_bits = 0, sphere_bits = 0, bits_per_block = 0;
    std::vector<InitialPhase> phases;
    std::vector<SphereState> sphere;
    std::vector<Block> blocks;  // phase-major: index = phase_index * l + sphere_index

    const Block& block(int phase_index, int sphere_index) const {
        return blocks[static_cast<std::size_t>(phase_index * l + sphere_index)];
    }

    BitWord word_for(int phase_index, int sphere_index) const {
        const std::uint32_t w =
            (gray_encode(static_cast<std::uint32_t>(phase_index)) << sphere_bits) |
            static_cast<std::uint32_t>(sphere_index);
        return {w, bits_per_block};
    }
};

inline Alphabet make_alphabet(int m, int l, double p) {
    if (!is_pow2(m) || !is_pow2(l)) {
        throw std::invalid_argument("make_alphabet: m and l must be powers of two");
    }
    if (m * l < 4) throw std::invalid_argument("make_alphabet: need at least 4 blocks");
    Alphabet al;
    al.m = m;
    al.l = l;
    al.p = p;
    al.phase_bits = ilog2(m);
    al.sphere_bits = ilog2(l);
    al.bits_per_block = al.phase_bits + al.sphere_bits;
    al.phases = build_phase_alphabet(m);
    al.sphere = build_sphere_alphabet(l, p);
    al.blocks.reserve(static_cast<std::size_t>(m * l));
    for (const auto& ph : al.phases) {
        for (const auto& st : al.sphere) al.blocks.push_back(map_block(ph, st, p));
    }
    // All ML blocks must be pairwise distinct for the labeling to be invertible.
    for (std::size_t i = 0; i < al.blocks.size(); ++i) {
        for (std::size_t j = i + 1; j < al.blocks.size(); ++j) {
            const double d2 = std::norm(al.blocks[i].a - al.blocks[j].a) +
                              std::norm(al.blocks[i].b - al.blocks[j].b);
            if (d2 <= 1e-9 * p * p) throw std::logic_error("make_alphabet: colliding blocks");
        }
    }
    return al;
}

/// First log2(M) bits pick the phase via Gray decoding, remaining log2(L)
/// bits pick the sphere point via natural binary.
inline const Block& bits_to_block(const BitWord& word, const Alphabet& al) {
    if (word.length != al.bits_per_block) {
        throw std::invalid_argument("bits_to_block: word length mismatch");
    }
    const std::uint32_t phase_label = word.bits >> al.sphere_bits;
    const std::uint32_t sphere_index = word.bits & ((1u << al.sphere_bits) - 1u);
    const std::uint32_t phase_index = gray_decode(phase_label);
    return al.block(static_cast<int>(phase_index), static_cast<int>(sphere_index));
}

}  // namespace aptbm
