#include <doctest.h>

#include <sstream>

#include "aptbm/config.hpp"

using namespace aptbm;

TEST_CASE("config parsing") {
    SUBCASE("full file round trip") {
        std::istringstream in(
            "# comment\n"
            "[experiment]\n"
            "method = pc-baseline\n"
            "mo = 32\n"
            "m = 8\n"
            "l = 4\n"
            "trials = 5000\n"
            "snr_db = 18.5\n"
            "ibo_db = 12\n"
            "seed = 99\n"
            "k_iters = 3\n"
            "equalizer = blind-avg-power\n"
            "batch_blocks = 512\n"
            "workers = 2\n"
            "output = run.csv\n"
            "\n"
            "[pa]\n"
            "kind = modified-rapp\n"
            "g0 = 4.0\n"
            "eta_max = 0.4\n"
            "\n"
            "[waveform]\n"
            "rolloff = 0.3\n"
            "sps = 8\n"
            "span = 12\n"
            "\n"
            "[channel]\n"
            "mode = fir\n"
            "fir_taps = 1.0, 0.2-0.1i\n");
        const ExperimentConfig cfg = parse_config(in);
        CHECK(cfg.method == Method::PcBaseline);
        CHECK(cfg.mo == 32);
        CHECK(cfg.m == 8);
        CHECK(cfg.l == 4);
        CHECK(cfg.trials == 5000);
        CHECK(cfg.snr_db == doctest::Approx(18.5));
        CHECK(cfg.ibo_db == doctest::Approx(12.0));
        CHECK(cfg.seed == 99);
        CHECK(cfg.k_iters == 3);
        CHECK(cfg.equalizer == EqualizerMode::BlindAvgPower);
        CHECK(cfg.batch_blocks == 512);
        CHECK(cfg.workers == 2);
        CHECK(cfg.output == "run.csv");
        CHECK(std::get<RappParams>(cfg.pa).g0 == doctest::Approx(4.0));
        CHECK(cfg.eta_max == doctest::Approx(0.4));
        CHECK(cfg.rolloff == doctest::Approx(0.3));
        CHECK(cfg.sps == 8);
        CHECK(cfg.span == 12);
        CHECK(cfg.channel_mode == ChannelMode::Fir);
        REQUIRE(cfg.fir_taps.size() == 2);
        CHECK(cfg.fir_taps[1] == cplx(0.2, -0.1));
    }
    SUBCASE("snr accepts inf") {
        std::istringstream in("snr_db = inf\n");
        CHECK(std::isinf(parse_config(in).snr_db));
    }
    SUBCASE("pin overrides ibo and vice versa") {
        std::istringstream in("ibo_db = 8\npin_dbm = -13\n");
        const auto cfg = parse_config(in);
        CHECK(std::isfinite(cfg.pin_dbm));
        CHECK(!std::isfinite(cfg.ibo_db));
    }
    SUBCASE("unknown key rejected") {
        std::istringstream in("[experiment]\nbogus = 1\n");
        CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
    }
    SUBCASE("unknown section rejected") {
        std::istringstream in("[nonsense]\nmo = 16\n");
        CHECK_THROWS_AS(parse_config(in), std::invalid_argument);
    }
    SUBCASE("kind-specific keys must match the selected PA kind") {
        std::istringstream in("[pa]\nkind = soft-limiter\na_clip = 0.9\ngain = 2.0\n");
        const auto cfg = parse_config(in);
        CHECK(std::get<SoftLimiterParams>(cfg.pa).a_clip == doctest::Approx(0.9));
        std::istringstream bad("[pa]\nkind = soft-limiter\ng0 = 3\n");
        CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);
    }
    SUBCASE("malformed numbers rejected with line info") {
        std::istringstream in("[experiment]\ntrials = ten\n");
        try {
            parse_config(in);
            FAIL("expected throw");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
}
