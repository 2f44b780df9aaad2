#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "longrad/experiment.hpp"

using namespace longrad;

namespace {

std::string tiny_config_json(const std::string& out_dir) {
    return R"({
      "name": "tiny",
      "grid_size": 24,
      "coils": 2,
      "samples_per_spoke": 25,
      "noise_sigma": 0.05,
      "phantom": {
        "ellipses": [
          {"center": [0, 0], "semi": [8.5, 9.0], "intensity": 0.5, "motion_gain": 0.1},
          {"center": [-2, 1], "semi": [3.5, 2.5], "intensity": 0.85, "motion_gain": 1.0},
          {"center": [0, 6.5], "semi": [4.0, 1.2], "intensity": 0.3, "fat": true}
        ],
        "respiration": {"amplitude": 1.2, "period": 10, "drift": 0}
      },
      "session_spokes": [40, 24, 16],
      "reference_spokes": 80,
      "policy": "non_repeating",
      "variations": [
        {"respiration_phase_offset": 0},
        {"respiration_phase_offset": 3},
        {"respiration_phase_offset": 6}
      ],
      "recon": {"K": 3, "max_iters": 12},
      "seeds": [1, 2],
      "modes": ["reference", "single_session", "longitudinal"],
      "output": {"dir": ")" +
           out_dir + R"("}
    })";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parsing honors fields and rejects bad input") {
    const auto cfg = parse_config(tiny_config_json("/tmp/longrad_cfg_test"));
    CHECK(cfg.name == "tiny");
    CHECK(cfg.coils == 2);
    CHECK(cfg.phantom.grid_size == 24);
    CHECK(cfg.phantom.ellipses.size() == 3);
    CHECK(cfg.phantom.ellipses[2].fat);
    CHECK(cfg.session_spokes == std::vector<std::int64_t>{40, 24, 16});
    CHECK(cfg.variations[1].respiration_phase_offset == 3.0);
    CHECK(cfg.recon.K == 3);
    CHECK(cfg.seeds.size() == 2);

    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"session_spokes": [41]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"session_spokes": [40], "seeds": []})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(
            R"({"session_spokes": [40], "modes": ["pseudo_longitudinal"], "variations": [{}]})"),
        ConfigError);
}

TEST_CASE("standard phantom shortcut with a lesion override") {
    const auto cfg = parse_config(R"({
        "phantom": {"standard": true, "lesion": {"center": [-12, 4], "radius": 3, "delta": 0.25}},
        "session_spokes": [10],
        "variations": [{}],
        "seeds": [1]
    })");
    CHECK(cfg.phantom.ellipses.size() == 7);
    REQUIRE(cfg.phantom.lesion.has_value());
    CHECK(cfg.phantom.lesion->radius == 3.0);
}

TEST_CASE("slice_plan rejects ranges outside the acquisition") {
    const auto spec = standard_phantom(16);
    const auto cm = simulate_coil_maps(2, 16, 1);
    const auto op = make_operator(cm, {}, 17);
    const auto full = acquire_session(spec, {}, full_session_plan(0, 40), op, 0.0, 1);
    CHECK_THROWS_AS(slice_plan(full, {0, 20, 30, SpokePolicy::non_repeating}),
                    std::invalid_argument);
    const auto part = slice_plan(full, {0, 20, 10, SpokePolicy::non_repeating});
    CHECK(part.frame_count() == 10);
    part.validate();
    CHECK(part.trajectory.entries.front().global_index == 10);
}

TEST_CASE("run_experiment writes the artifact tree and deterministic metrics") {
    const auto out1 = std::filesystem::temp_directory_path() / "longrad_pipe_a";
    const auto out2 = std::filesystem::temp_directory_path() / "longrad_pipe_b";
    std::filesystem::remove_all(out1);
    std::filesystem::remove_all(out2);

    auto cfg = parse_config(tiny_config_json(out1.string()));
    const auto report = run_experiment(cfg);

    // 2 seeds x 2 compared modes x (20 + 12 + 8) frames
    CHECK(report.per_frame.size() == 2 * 2 * 40);
    CHECK(std::filesystem::exists(out1 / "metrics.csv"));
    CHECK(std::filesystem::exists(out1 / "summary.txt"));
    CHECK(std::filesystem::exists(out1 / "seed_1" / "reference" / "session_1" / "objective.csv"));
    CHECK(std::filesystem::exists(out1 / "seed_1" / "longitudinal" / "coefficients.lra"));
    CHECK(std::filesystem::exists(out1 / "seed_2" / "single_session" / "session_3" /
                                  "coefficients.lra"));
    CHECK_FALSE(report.tests.empty());

    // identical config and seeds give bit-identical metrics
    cfg.output.dir = out2;
    run_experiment(cfg);
    CHECK(slurp(out1 / "metrics.csv") == slurp(out2 / "metrics.csv"));

    // every ssim is a valid value
    for (const auto& row : report.per_frame) {
        CHECK(row.ssim >= -1.0);
        CHECK(row.ssim <= 1.0);
        CHECK(row.nrmse >= 0.0);
    }

    std::filesystem::remove_all(out1);
    std::filesystem::remove_all(out2);
}

TEST_CASE("reference-only runs emit no comparison tests") {
    const auto out = std::filesystem::temp_directory_path() / "longrad_pipe_ref";
    std::filesystem::remove_all(out);
    auto cfg = parse_config(tiny_config_json(out.string()));
    cfg.modes = {RunMode::reference};
    cfg.seeds = {1};
    const auto report = run_experiment(cfg);
    CHECK(report.per_frame.empty());
    CHECK(report.tests.empty());
    CHECK(std::filesystem::exists(out / "seed_1" / "reference" / "session_2" / "basis_uk.lra"));
    std::filesystem::remove_all(out);
}

TEST_CASE("emit_frames writes ceil(T/stride) frames plus the x-t profile") {
    DynamicSeries series;
    series.grid_size = 12;
    series.session_boundaries = {0};
    series.m = CMat::Zero(144, 10);
    for (int f = 0; f < 10; ++f) series.m(70, f) = cplx(f + 1, 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "longrad_frames";
    std::filesystem::remove_all(dir);

    SUBCASE("stride equal to T emits exactly one frame") {
        emit_frames(series, dir, 10);
        int count = 0;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().filename().string().starts_with("frame_")) ++count;
        CHECK(count == 1);
        CHECK(std::filesystem::exists(dir / "xt_profile.png"));
    }
    SUBCASE("stride 3 emits ceil(10/3) = 4 frames") {
        emit_frames(series, dir, 3);
        int count = 0;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().filename().string().starts_with("frame_")) ++count;
        CHECK(count == 4);
    }
    SUBCASE("zero series emits black frames without error") {
        series.m.setZero();
        emit_frames(series, dir, 5);
        CHECK(std::filesystem::exists(dir / "frame_00000.png"));
    }
    std::filesystem::remove_all(dir);
}
