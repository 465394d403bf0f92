#include <doctest.h>

#include "aptbm/alphabet.hpp"
#include "aptbm/rng.hpp"
#include "aptbm/waveform.hpp"

using namespace aptbm;

namespace {

std::vector<Block> random_blocks(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Block> out(n);
    for (auto& b : out) {
        b.a = std::polar(0.5 + rng.uniform(), two_pi * rng.uniform());
        b.b = std::polar(0.5 + rng.uniform(), two_pi * rng.uniform());
    }
    return out;
}

}  // namespace

TEST_CASE("rrc_design tap properties") {
    const RrcFilter f = rrc_design(0.25, 4, 16);
    REQUIRE(f.taps.size() == 16u * 4u + 1u);

    SUBCASE("mirror symmetric") {
        for (std::size_t i = 0; i < f.taps.size(); ++i) {
            CHECK(std::abs(f.taps[i] - f.taps[f.taps.size() - 1 - i]) <= 1e-12);
        }
    }
    SUBCASE("unit energy") {
        double e = 0.0;
        for (const double t : f.taps) e += t * t;
        CHECK(std::abs(e - 1.0) <= 1e-10);
    }
    SUBCASE("Nyquist cascade: RRC * RRC sampled at symbol instants") {
        const std::size_t n = f.taps.size();
        std::vector<double> cascade(2 * n - 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) cascade[i + j] += f.taps[i] * f.taps[j];
        }
        const std::size_t center = n - 1;
        CHECK(cascade[center] == doctest::Approx(1.0).epsilon(1e-10));
        for (int k = 1; k <= f.span; ++k) {
            CHECK(std::abs(cascade[center + static_cast<std::size_t>(k * f.sps)]) < 1e-3);
            CHECK(std::abs(cascade[center - static_cast<std::size_t>(k * f.sps)]) < 1e-3);
        }
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(rrc_design(0.0, 4, 16), std::invalid_argument);
        CHECK_THROWS_AS(rrc_design(1.5, 4, 16), std::invalid_argument);
        CHECK_THROWS_AS(rrc_design(0.25, 1, 16), std::invalid_argument);
        CHECK_THROWS_AS(rrc_design(0.25, 4, 15), std::invalid_argument);
        CHECK_THROWS_AS(rrc_design(0.25, 4, 6), std::invalid_argument);
    }
}

TEST_CASE("shape basics") {
    const RrcFilter f = rrc_design(0.25, 4, 16);

    SUBCASE("output length is (2N + span) * sps") {
        const auto blocks = random_blocks(10, 1);
        CHECK(shape(blocks, f).size() == (20u + 16u) * 4u);
    }
    SUBCASE("impulse response: one unit symbol reproduces the tap shape") {
        const std::vector<Block> one{{cplx(1.0, 0.0), cplx(0.0, 0.0)}};
        const auto out = shape(one, f);
        const double scale = std::sqrt(4.0);
        for (std::size_t i = 0; i < f.taps.size(); ++i) {
            CHECK(std::abs(out[i] - scale * f.taps[i]) <= 1e-12);
        }
    }
    SUBCASE("all-zero symbols give all-zero samples") {
        const std::vector<Block> zero(5);
        for (const auto& s : shape(zero, f)) CHECK(s == cplx{});
    }
    SUBCASE("average waveform power matches average symbol power") {
        const auto blocks = random_blocks(1000, 2);
        double sym_power = 0.0;
        for (const auto& b : blocks) sym_power += std::norm(b.a) + std::norm(b.b);
        sym_power /= 2.0 * static_cast<double>(blocks.size());
        const auto wave = shape(blocks, f);
        double wav_power = 0.0;
        for (const auto& s : wave) wav_power += std::norm(s);
        wav_power /= static_cast<double>(wave.size());
        CHECK(wav_power == doctest::Approx(sym_power).epsilon(0.02));
    }
    SUBCASE("linearity") {
        const auto x = random_blocks(20, 3);
        const auto y = random_blocks(20, 4);
        std::vector<Block> sum(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) sum[i] = {x[i].a + y[i].a, x[i].b + y[i].b};
        const auto sx = shape(x, f), sy = shape(y, f), ss = shape(sum, f);
        for (std::size_t i = 0; i < ss.size(); ++i) {
            CHECK(std::abs(ss[i] - sx[i] - sy[i]) <= 1e-12);
        }
    }
    SUBCASE("empty input rejected") { CHECK_THROWS_AS(shape({}, f), std::invalid_argument); }
}

TEST_CASE("matched filter loopback") {
    const RrcFilter f = rrc_design(0.25, 4, 16);
    const auto blocks = random_blocks(1000, 5);
    const auto wave = shape(blocks, f);
    const auto rx = matched_filter(wave, f);
    REQUIRE(rx.size() == blocks.size());

    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        err += std::norm(rx[i].a - blocks[i].a) + std::norm(rx[i].b - blocks[i].b);
        ref += std::norm(blocks[i].a) + std::norm(blocks[i].b);
    }
    const double evm_db = 10.0 * std::log10(err / ref);
    CHECK(evm_db < -40.0);

    SUBCASE("zero input gives zero blocks") {
        const std::vector<cplx> silence(wave.size());
        for (const auto& b : matched_filter(silence, f)) {
            CHECK(b.a == cplx{});
            CHECK(b.b == cplx{});
        }
    }
    SUBCASE("declared delay compensates an offset input") {
        std::vector<cplx> delayed(4, cplx{});
        delayed.insert(delayed.end(), wave.begin(), wave.end());
        const auto rx2 = matched_filter(delayed, f, 4);
        for (std::size_t i = 0; i < rx.size(); ++i) {
            CHECK(std::abs(rx2[i].a - rx[i].a) <= 1e-12);
            CHECK(std::abs(rx2[i].b - rx[i].b) <= 1e-12);
        }
    }
    SUBCASE("length validation") {
        CHECK_THROWS_AS(matched_filter(std::vector<cplx>(13), f), std::invalid_argument);
        CHECK_THROWS_AS(matched_filter(std::vector<cplx>(4), f), std::invalid_argument);
    }
}
