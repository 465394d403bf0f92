#include <doctest.h>

#include "aptbm/demod.hpp"
#include "aptbm/rng.hpp"

using namespace aptbm;

namespace {

/// Smallest distance between two alphabet blocks sharing a phase index.
double min_intra_phase_distance(const Alphabet& al) {
    double best = 1e300;
    for (int pi_idx = 0; pi_idx < al.m; ++pi_idx) {
        for (int i = 0; i < al.l; ++i) {
            for (int j = i + 1; j < al.l; ++j) {
                best = std::min(best, std::sqrt(block_distance_sq(al.block(pi_idx, i),
                                                                  al.block(pi_idx, j))));
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("demap_with_phase") {
    const auto al = make_alphabet(4, 4, 2.0);

    SUBCASE("exact block decodes with zero distance") {
        for (int pi_idx = 0; pi_idx < al.m; ++pi_idx) {
            for (int si = 0; si < al.l; ++si) {
                const Decision d = demap_with_phase(al.block(pi_idx, si), al,
                                                    al.phases[static_cast<std::size_t>(pi_idx)]);
                CHECK(d.phase_index == pi_idx);
                CHECK(d.sphere_index == si);
                CHECK(d.distance == 0.0);
                CHECK(d.bits == al.word_for(pi_idx, si));
            }
        }
    }
    SUBCASE("perturbations below half the intra-phase minimum distance keep the decision") {
        const double radius = 0.49 * min_intra_phase_distance(al);
        Rng rng(17);
        for (int t = 0; t < 2000; ++t) {
            const int pi_idx = static_cast<int>(rng.bits(2));
            const int si = static_cast<int>(rng.bits(2));
            cplx na(rng.gaussian(), rng.gaussian());
            cplx nb(rng.gaussian(), rng.gaussian());
            const double nn = std::sqrt(std::norm(na) + std::norm(nb));
            na *= radius / nn;
            nb *= radius / nn;
            const Block& ref = al.block(pi_idx, si);
            const Decision d = demap_with_phase({ref.a + na, ref.b + nb}, al,
                                                al.phases[static_cast<std::size_t>(pi_idx)]);
            CHECK(d.sphere_index == si);
        }
    }
    SUBCASE("the decision is the argmin over exactly the L same-phase candidates") {
        Rng rng(19);
        const Block probe{cplx(rng.gaussian(), rng.gaussian()), cplx(rng.gaussian(), rng.gaussian())};
        const Decision d = demap_with_phase(probe, al, al.phases[2]);
        for (int si = 0; si < al.l; ++si) {
            CHECK(d.distance <= block_distance_sq(probe, al.block(2, si)) + 1e-15);
        }
        CHECK(d.phase_index == 2);
    }
}

TEST_CASE("demap_full") {
    const auto al = make_alphabet(8, 4, 2.0);

    SUBCASE("never beaten by the restricted search") {
        Rng rng(23);
        for (int t = 0; t < 10000; ++t) {
            const int pi_idx = static_cast<int>(rng.bits(3));
            const int si = static_cast<int>(rng.bits(2));
            const Block& ref = al.block(pi_idx, si);
            const Block noisy{ref.a + 0.3 * cplx(rng.gaussian(), rng.gaussian()),
                              ref.b + 0.3 * cplx(rng.gaussian(), rng.gaussian())};
            const Decision full = demap_full(noisy, al);
            const Decision restricted =
                demap_with_phase(noisy, al, al.phases[static_cast<std::size_t>(pi_idx)]);
            CHECK(full.distance <= restricted.distance + 1e-15);
            if (full.phase_index == pi_idx) {
                CHECK(full.sphere_index == restricted.sphere_index);
                CHECK(full.distance == restricted.distance);
            }
        }
    }
    SUBCASE("all-zero block picks the smallest-norm candidate, lowest index first") {
        // All alphabet blocks share the same nominal power, so this exercises
        // the deterministic tie-break at floating-point resolution.
        const Decision d = demap_full(Block{}, al);
        double best = 1e300;
        int first_pi = -1, first_si = -1;
        for (int pi_idx = 0; pi_idx < al.m; ++pi_idx) {
            for (int si = 0; si < al.l; ++si) {
                const double n = block_distance_sq(Block{}, al.block(pi_idx, si));
                if (n < best) {
                    best = n;
                    first_pi = pi_idx;
                    first_si = si;
                }
            }
        }
        CHECK(d.phase_index == first_pi);
        CHECK(d.sphere_index == first_si);
        CHECK(d.distance == doctest::Approx(al.p).epsilon(1e-12));
    }
}
