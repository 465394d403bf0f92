#include <doctest.h>

#include "aptbm/reconstruct.hpp"
#include "aptbm/rng.hpp"
#include "oracles.hpp"

using namespace aptbm;

namespace {

std::vector<Block> random_clean_blocks(const Alphabet& al, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Block> out(n);
    for (auto& b : out) {
        b = al.block(static_cast<int>(rng.bits(al.phase_bits ? al.phase_bits : 1)) % al.m,
                     static_cast<int>(rng.bits(al.sphere_bits)) % al.l);
    }
    return out;
}

AmPmTable constant_table(double phase_rad) {
    return {{-100.0, 100.0}, {phase_rad, phase_rad}};
}

double block_err(const Block& x, const Block& y) {
    return std::sqrt(std::norm(x.a - y.a) + std::norm(x.b - y.b));
}

}  // namespace

TEST_CASE("amplitude recombination coefficient xi") {
    const double p = 2.0;
    const double floor = 1e-6;

    SUBCASE("balanced block gives xi = 1/2 for any mu") {
        for (const double mu : {0.3, 1.0, 5.0}) {
            const auto r = detail::recombine_amplitudes(0.7, 0.7, p, mu, floor);
            CHECK(r.xi == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("P_d = 0.5 evaluates to 1/(1+e)") {
        // |a|^2 = 3, |b|^2 = 1 gives P_d = 0.5.
        const auto r = detail::recombine_amplitudes(std::sqrt(3.0), 1.0, 4.0, 1.0, floor);
        CHECK(r.xi == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
    }
    SUBCASE("limits as the imbalance saturates") {
        const auto hi = detail::recombine_amplitudes(1.0, 1e-9, p, 1.0, 1e-12);
        CHECK(hi.xi < 1e-10);  // P_d -> 1 drives xi to 0
        const auto lo = detail::recombine_amplitudes(1e-9, 1.0, p, 1.0, 1e-12);
        CHECK(lo.xi > 1.0 - 1e-10);  // P_d -> -1 drives xi to 1
    }
    SUBCASE("phase-correction weights always sum to one") {
        for (const double xi : {0.0, 0.25, 0.5, 0.9, 1.0}) {
            CHECK((0.75 - 0.5 * xi) + (0.25 + 0.5 * xi) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("baseline_reconstruct") {
    const auto al = make_alphabet(4, 4, 2.0);
    const auto clean = random_clean_blocks(al, 10000, 21);

    SUBCASE("noiseless loopback: zero shift estimate, output equals input") {
        const ReconResult r = baseline_reconstruct(clean, al.p, 1.0, al.m);
        CHECK(std::abs(r.phase_shift_estimate) < 1e-3);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            CHECK(block_err(r.blocks[i], clean[i]) < 1e-6);
        }
    }
    SUBCASE("a uniform phase rotation is removed from the phase sum") {
        const double delta = 0.1;
        std::vector<Block> rotated;
        for (const auto& b : clean) {
            rotated.push_back({b.a * std::polar(1.0, delta), b.b * std::polar(1.0, delta)});
        }
        const ReconResult r = baseline_reconstruct(rotated, al.p, 1.0, al.m);
        CHECK(r.phase_shift_estimate == doctest::Approx(2.0 * delta).epsilon(1e-6));
        for (std::size_t i = 0; i < clean.size(); ++i) {
            const double sum_out = std::arg(r.blocks[i].a) + std::arg(r.blocks[i].b);
            const double sum_ref = std::arg(clean[i].a) + std::arg(clean[i].b);
            CHECK(std::abs(fold_centered(sum_out - sum_ref, two_pi)) < 1e-6);
        }
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(baseline_reconstruct({}, 1.0, 1.0, 4), std::invalid_argument);
        CHECK_THROWS_AS(baseline_reconstruct(clean, al.p, 0.0, 4), std::invalid_argument);
    }
}

TEST_CASE("coarse_reconstruct") {
    const auto al = make_alphabet(4, 4, 2.0);
    const auto clean = random_clean_blocks(al, 2000, 5);

    SUBCASE("identity with a zero AM-PM table") {
        CoarseConfig cfg{constant_table(0.0), -3.0, PhaseSign::Plus};
        const auto out = coarse_reconstruct(clean, al.p, cfg);
        for (std::size_t i = 0; i < clean.size(); ++i) CHECK(block_err(out[i], clean[i]) < 1e-10);
    }
    SUBCASE("pure rotation cancelled exactly by a matching table") {
        const double delta = 0.35;
        std::vector<Block> rotated;
        for (const auto& b : clean) {
            rotated.push_back({b.a * std::polar(1.0, delta), b.b * std::polar(1.0, delta)});
        }
        CoarseConfig cfg{constant_table(delta), -3.0, PhaseSign::Plus};
        const auto out = coarse_reconstruct(rotated, al.p, cfg);
        for (std::size_t i = 0; i < clean.size(); ++i) CHECK(block_err(out[i], clean[i]) < 1e-10);
    }
    SUBCASE("over-power symbols clamp the constraint root and get flagged") {
        const double p = 2.0;
        std::vector<Block> hot{{cplx(1.7, 0.0), cplx(0.2, 0.0)}};  // |a|^2 = 2.89 > P
        CoarseConfig cfg{constant_table(0.0), -3.0, PhaseSign::Plus};
        int clamped = 0;
        const auto out = coarse_reconstruct(hot, p, cfg, &clamped);
        CHECK(clamped == 1);
        CHECK(std::isfinite(out[0].a.real()));
        CHECK(std::isfinite(out[0].b.real()));
    }
}

TEST_CASE("initial phase estimation") {
    SUBCASE("isosceles vector sum bisects") {
        const Block b{std::polar(1.0, 0.1), std::polar(1.0, 0.3)};
        const auto raw = raw_phase_estimate(b);
        REQUIRE(raw.has_value());
        CHECK(*raw == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("wrapped pair resolves to pi, not zero") {
        const Block b{std::polar(1.0, pi - 0.05), std::polar(1.0, -pi + 0.05)};
        const auto raw = raw_phase_estimate(b);
        REQUIRE(raw.has_value());
        CHECK(std::abs(fold_centered(*raw - pi, two_pi)) < 1e-12);
    }
    SUBCASE("antipodal symbols are degenerate") {
        const Block b{std::polar(1.0, 0.3), std::polar(1.0, 0.3 + pi)};
        CHECK(!raw_phase_estimate(b).has_value());
        CHECK(std::isfinite(fallback_phase_angle(b)));
    }
    SUBCASE("clean alphabet sweep returns the true phase for every entry") {
        for (const int m : {4, 8, 16}) {
            const auto al = make_alphabet(m, 8, 2.0);
            for (int pi_idx = 0; pi_idx < al.m; ++pi_idx) {
                for (int si = 0; si < al.l; ++si) {
                    const auto est = estimate_initial_phase(al.block(pi_idx, si), al.phases);
                    REQUIRE(est.has_value());
                    CHECK(est->index == pi_idx);
                }
            }
        }
    }
    SUBCASE("quantization ties break toward the lower index") {
        const auto phases = build_phase_alphabet(4);
        // pi/4 is equidistant from phase 0 and phase pi/2.
        CHECK(quantize_phase(pi / 4.0, phases).index == 0);
    }
}

TEST_CASE("trs_solve closed form") {
    const double p = 2.0;

    SUBCASE("feasible w is a fixed point with lambda = 0") {
        // w orthogonal to u with ||w||^2 = p.
        const std::array<double, 4> u{1.0, 0.0, 0.0, 0.0};
        const std::array<double, 4> w{0.0, std::sqrt(p), 0.0, 0.0};
        const auto sol = trs_solve(w, u, p);
        REQUIRE(!sol.degenerate);
        CHECK(sol.lambda == doctest::Approx(0.0).epsilon(1e-12));
        for (int i = 0; i < 4; ++i) CHECK(sol.z[i] == doctest::Approx(w[i]).epsilon(1e-12));
    }
    SUBCASE("orthogonal w of any norm is purely rescaled") {
        const std::array<double, 4> u{0.0, 2.0, 0.0, 0.0};
        const std::array<double, 4> w{3.0, 0.0, 4.0, 0.0};  // ||w|| = 5
        const auto sol = trs_solve(w, u, p);
        REQUIRE(!sol.degenerate);
        const double k = std::sqrt(p) / 5.0;
        CHECK(sol.z[0] == doctest::Approx(3.0 * k).epsilon(1e-12));
        CHECK(sol.z[2] == doctest::Approx(4.0 * k).epsilon(1e-12));
    }
    SUBCASE("randomized instances: feasibility, multiplier sign, projection equivalence") {
        Rng rng(77);
        for (int trial = 0; trial < 500; ++trial) {
            std::array<double, 4> w{}, u{};
            for (int i = 0; i < 4; ++i) {
                w[i] = rng.gaussian();
                u[i] = rng.gaussian();
            }
            const double pp = 0.5 + 2.0 * rng.uniform();
            const auto sol = trs_solve(w, u, pp);
            REQUIRE(!sol.degenerate);
            double zz = 0.0, zu = 0.0, nz = 0.0, nu = 0.0;
            for (int i = 0; i < 4; ++i) {
                zz += sol.z[i] * sol.z[i];
                zu += sol.z[i] * u[i];
                nu += u[i] * u[i];
            }
            nz = std::sqrt(zz);
            nu = std::sqrt(nu);
            CHECK(std::abs(zz - pp) <= 1e-10 * pp);
            CHECK(std::abs(zu) <= 1e-10 * nz * nu);
            CHECK(1.0 - sol.lambda >= 0.0);

            // Projection route: z = sqrt(p) * proj(w) / ||proj(w)||.
            double uw = 0.0, uu = 0.0;
            for (int i = 0; i < 4; ++i) {
                uw += u[i] * w[i];
                uu += u[i] * u[i];
            }
            std::array<double, 4> proj{};
            double np = 0.0;
            for (int i = 0; i < 4; ++i) {
                proj[i] = w[i] - uw / uu * u[i];
                np += proj[i] * proj[i];
            }
            np = std::sqrt(np);
            for (int i = 0; i < 4; ++i) {
                CHECK(std::abs(sol.z[i] - std::sqrt(pp) * proj[i] / np) <= 1e-10);
            }
        }
    }
    SUBCASE("objective ties the brute-force feasible-set oracle") {
        Rng rng(101);
        for (int trial = 0; trial < 60; ++trial) {
            std::array<double, 4> w{}, u{};
            for (int i = 0; i < 4; ++i) {
                w[i] = rng.gaussian();
                u[i] = rng.gaussian();
            }
            const double pp = 0.5 + 2.0 * rng.uniform();
            const auto sol = trs_solve(w, u, pp);
            REQUIRE(!sol.degenerate);
            double obj = 0.0;
            for (int i = 0; i < 4; ++i) obj += (w[i] - sol.z[i]) * (w[i] - sol.z[i]);
            const double oracle = oracles::trs_brute_force_objective(w, u, pp, 400);
            CHECK(std::abs(obj - oracle) <= 1e-6);
            CHECK(obj <= oracle + 1e-9);  // closed form can never beat the feasible set
        }
    }
    SUBCASE("degenerate when w is parallel to u") {
        const std::array<double, 4> u{1.0, 1.0, 0.0, 0.0};
        const std::array<double, 4> w{2.0, 2.0, 0.0, 0.0};
        CHECK(trs_solve(w, u, p).degenerate);
        CHECK_THROWS_AS(trs_solve(w, {0, 0, 0, 0}, p), std::invalid_argument);
        CHECK_THROWS_AS(trs_solve(w, u, 0.0), std::invalid_argument);
    }
}

TEST_CASE("fine_reconstruct") {
    const auto al = make_alphabet(4, 4, 2.0);
    const FineConfig cfg{.k_iters = 3};

    SUBCASE("clean block with the right phase is a fixed point") {
        for (int pi_idx = 0; pi_idx < al.m; ++pi_idx) {
            for (int si = 0; si < al.l; ++si) {
                const Block& b = al.block(pi_idx, si);
                const auto r =
                    fine_reconstruct(b, al.phases[static_cast<std::size_t>(pi_idx)], al.p, cfg);
                CHECK(block_err(r.block, b) < 1e-10);
            }
        }
    }
    SUBCASE("output power equals P for arbitrary inputs") {
        Rng rng(3);
        for (int t = 0; t < 200; ++t) {
            const Block noisy{cplx(rng.gaussian(), rng.gaussian()),
                              cplx(rng.gaussian(), rng.gaussian())};
            const auto r = fine_reconstruct(noisy, al.phases[1], al.p, cfg);
            if (r.degenerate) continue;
            const double power = std::norm(r.block.a) + std::norm(r.block.b);
            CHECK(std::abs(power - al.p) <= 1e-10 * al.p);
        }
    }
    SUBCASE("update norms contract across iterations") {
        Rng rng(4);
        FineConfig deep{.k_iters = 6, .tol = 1e-300, .record_iterates = true};
        for (int t = 0; t < 50; ++t) {
            Block noisy = al.block(static_cast<int>(rng.bits(2)), static_cast<int>(rng.bits(2)));
            noisy.a += 0.2 * cplx(rng.gaussian(), rng.gaussian());
            noisy.b += 0.2 * cplx(rng.gaussian(), rng.gaussian());
            const auto est = estimate_initial_phase(noisy, al.phases);
            REQUIRE(est.has_value());
            const auto r = fine_reconstruct(noisy, *est, al.p, deep);
            Block prev = noisy;
            double prev_step = 1e300;
            for (const auto& it : r.iterates) {
                const double step = block_err(it, prev);
                CHECK(step <= prev_step + 1e-12);
                prev_step = step;
                prev = it;
            }
        }
    }
}

TEST_CASE("two_stage_reconstruct and pc_baseline_reconstruct") {
    const auto al = make_alphabet(4, 4, 2.0);
    const auto clean = random_clean_blocks(al, 10000, 31);
    const CoarseConfig coarse{constant_table(0.0), -3.0, PhaseSign::Plus};
    const FineConfig fine{.k_iters = 2};

    SUBCASE("ideal loopback: identity, exact phases, aligned ordering") {
        const ReconResult r = two_stage_reconstruct(clean, al.p, coarse, fine, al, &clean);
        REQUIRE(r.blocks.size() == clean.size());
        REQUIRE(r.phase_estimates.size() == clean.size());
        for (std::size_t i = 0; i < clean.size(); ++i) {
            CHECK(block_err(r.blocks[i], clean[i]) < 1e-8);
        }
        REQUIRE(r.trace.size() == 3);  // coarse + 2 iterations
        CHECK(r.trace[0] < 1e-16);
    }
    SUBCASE("pc-baseline with a zero table equals the baseline") {
        const ReconResult a = pc_baseline_reconstruct(clean, al.p, coarse, 1.0, al.m);
        const ReconResult b = baseline_reconstruct(clean, al.p, 1.0, al.m);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            CHECK(block_err(a.blocks[i], b.blocks[i]) < 1e-12);
        }
    }
    SUBCASE("pc-baseline ideal loopback") {
        const ReconResult r = pc_baseline_reconstruct(clean, al.p, coarse, 1.0, al.m);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            CHECK(block_err(r.blocks[i], clean[i]) < 1e-6);
        }
    }
    SUBCASE("ground truth size mismatch rejected") {
        const std::vector<Block> wrong(3);
        CHECK_THROWS_AS(two_stage_reconstruct(clean, al.p, coarse, fine, al, &wrong),
                        std::invalid_argument);
    }
}
