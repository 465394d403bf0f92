#pragma once

#include <limits>

#include "aptbm/alphabet.hpp"

// Nearest-neighbor demapping in the two-symbol complex space (squared
// Euclidean distance, the ML metric under AWGN). With a phase estimate the
// search is restricted to the L candidates sharing that phase; without one it
// covers all ML blocks. Ties break toward lower indices, phase before sphere.

namespace aptbm {

struct Decision {
    int phase_index = 0;
    int sphere_index = 0;
    BitWord bits;
    double distance = 0.0;
};

inline double block_distance_sq(const Block& x, const Block& y) {
    return std::norm(x.a - y.a) + std::norm(x.b - y.b);
}

inline Decision demap_with_phase(const Block& blk, const Alphabet& al,
                                 const InitialPhase& phase_est) {
    Decision d;
    d.phase_index = phase_est.index;
    d.distance = std::numeric_limits<double>::infinity();
    for (int si = 0; si < al.l; ++si) {
        const double dist = block_distance_sq(blk, al.block(phase_est.index, si));
        if (dist < d.distance) {
            d.distance = dist;
            d.sphere_index = si;
        }
    }
    d.bits = al.word_for(d.phase_index, d.sphere_index);
    return d;
}

inline Decision demap_full(const Block& blk, const Alphabet& al) {
    Decision d;
    d.distance = std::numeric_limits<double>::infinity();
    for (int pi = 0; pi < al.m; ++pi) {
        for (int si = 0; si < al.l; ++si) {
            const double dist = block_distance_sq(blk, al.block(pi, si));
            if (dist < d.distance) {
                d.distance = dist;
                d.phase_index = pi;
                d.sphere_index = si;
            }
        }
    }
    d.bits = al.word_for(d.phase_index, d.sphere_index);
    return d;
}

}  // namespace aptbm
