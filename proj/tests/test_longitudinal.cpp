#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "longrad/experiment.hpp"
#include "longrad/longitudinal.hpp"
#include "longrad/metrics.hpp"

using namespace longrad;

namespace {

PhantomSpec mid_spec(int n) {
    PhantomSpec spec;
    spec.grid_size = n;
    spec.ellipses = {{0.0, 0.0, 0.36 * n, 0.40 * n, 0.0, 0.5, 0.1, false},
                     {-0.12 * n, 0.03 * n, 0.17 * n, 0.13 * n, 0.3, 0.8, 1.0, false},
                     {0.16 * n, -0.06 * n, 0.08 * n, 0.07 * n, -0.2, 0.65, 0.6, false}};
    spec.respiration = {0.045 * n, 12.0, 0.0};
    return spec;
}

SessionDataset acquire(const PhantomSpec& spec, const SessionVariation& var, int id,
                       std::int64_t spokes, std::int64_t first, double sigma, std::uint64_t seed,
                       const CoilMaps& cm) {
    const auto op = make_operator(cm, {}, spec.grid_size + 1);
    SessionSpokePlan plan{id, spokes, first, SpokePolicy::non_repeating};
    return acquire_session(spec, var, plan, op, sigma, seed);
}

} // namespace

TEST_CASE("time averages of identical sessions are identical and close to the truth") {
    const int n = 32;
    PhantomSpec spec = mid_spec(n);
    spec.respiration.amplitude = 0.0;  // static for the oracle comparison
    const auto cm = simulate_coil_maps(4, n, 3);
    const auto ds = acquire(spec, {}, 0, 120, 0, 0.0, 1, cm);
    const CVec avg = time_average(ds, cm);

    const RVec truth = render_frame(spec, {}, 0.0);
    RMat truth_img(n, n), avg_img(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            truth_img(i, j) = truth[static_cast<Eigen::Index>(i) * n + j];
            avg_img(i, j) = std::abs(avg[static_cast<Eigen::Index>(i) * n + j]);
        }
    CHECK(nrmse(avg_img, truth_img) < 0.1);

    auto twin = ds;
    twin.plan.session_id = 1;
    const CVec avg2 = time_average(twin, cm);
    CHECK((avg - avg2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fewer spokes leave more background energy in the average") {
    const int n = 32;
    const PhantomSpec spec = mid_spec(n);
    const auto cm = simulate_coil_maps(4, n, 3);
    const RVec truth = render_frame(spec, {}, 0.0);

    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto dense = acquire(spec, {}, 0, 200, 0, 0.02, seed, cm);
        const auto sparse = slice_plan(dense, {0, 40, 0, SpokePolicy::non_repeating});
        const CVec avg_dense = time_average(dense, cm);
        const CVec avg_sparse = time_average(sparse, cm);

        double bg_dense = 0.0, bg_sparse = 0.0, tot_dense = 0.0, tot_sparse = 0.0;
        for (Eigen::Index r = 0; r < truth.size(); ++r) {
            const double d = std::norm(avg_dense[r]);
            const double s = std::norm(avg_sparse[r]);
            tot_dense += d;
            tot_sparse += s;
            if (truth[r] == 0.0) {
                bg_dense += d;
                bg_sparse += s;
            }
        }
        if (bg_sparse / tot_sparse > bg_dense / tot_dense) ++wins;
    }
    CHECK(wins >= 9);
}

TEST_CASE("estimate_rigid recovers translations") {
    const int n = 32;
    const PhantomSpec spec = mid_spec(n);
    const auto cm = simulate_coil_maps(4, n, 3);

    SUBCASE("identical images give the identity") {
        const auto ds = acquire(spec, {}, 0, 60, 0, 0.01, 2, cm);
        const CVec avg = time_average(ds, cm);
        const auto t = estimate_rigid(avg, avg, n);
        CHECK(t.dx == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(t.dy == doctest::Approx(0.0).epsilon(1e-9));
        CHECK_FALSE(t.low_confidence);
    }

    SUBCASE("integer shift is recovered within a quarter pixel") {
        SessionVariation moved;
        moved.dx = 3.0;
        moved.dy = -2.0;
        const auto ref = acquire(spec, {}, 0, 60, 0, 0.01, 2, cm);
        const auto mov = acquire(spec, moved, 1, 60, 0, 0.01, 3, cm);
        const auto t = estimate_rigid(time_average(ref, cm), time_average(mov, cm), n);
        CHECK(std::abs(t.dx - 3.0) < 0.25);
        CHECK(std::abs(t.dy - (-2.0)) < 0.25);
        CHECK_FALSE(t.low_confidence);
    }

    SUBCASE("pure noise falls back to identity with the flag set") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, 1.0);
        CVec a(static_cast<Eigen::Index>(n) * n), b(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a[i] = cplx(g(rng), g(rng));
            b[i] = cplx(g(rng), g(rng));
        }
        const auto t = estimate_rigid(a, b, n);
        CHECK(t.low_confidence);
        CHECK(t.dx == 0.0);
        CHECK(t.dy == 0.0);
    }
}

TEST_CASE("estimate_rigid recovers rotation when enabled") {
    const int n = 32;
    const PhantomSpec base = mid_spec(n);
    const double theta = 6.0 * std::numbers::pi_v<double> / 180.0;

    // Rotating every ellipse about the grid center renders an exactly
    // rotated phantom.
    PhantomSpec rotated = base;
    for (auto& e : rotated.ellipses) {
        const double cx = e.cx * std::cos(theta) - e.cy * std::sin(theta);
        const double cy = e.cx * std::sin(theta) + e.cy * std::cos(theta);
        e.cx = cx;
        e.cy = cy;
        e.rotation += theta;
    }
    const auto cm = simulate_coil_maps(4, n, 3);
    const auto ref = acquire(base, {}, 0, 80, 0, 0.0, 2, cm);
    const auto mov = acquire(rotated, {}, 1, 80, 0, 0.0, 3, cm);

    RigidOptions opts;
    opts.enable_rotation = true;
    const auto t = estimate_rigid(time_average(ref, cm), time_average(mov, cm), n, opts);
    CHECK(std::abs(t.dtheta - theta) < 2.0 * std::numbers::pi_v<double> / 180.0);

    RigidOptions off;
    const auto t0 = estimate_rigid(time_average(ref, cm), time_average(mov, cm), n, off);
    CHECK(t0.dtheta == 0.0);
}

TEST_CASE("apply_rigid_kspace phase ramps") {
    const int n = 32;
    const PhantomSpec spec = mid_spec(n);
    const auto cm = simulate_coil_maps(3, n, 3);
    const auto ds = acquire(spec, {}, 0, 20, 0, 0.02, 4, cm);

    SUBCASE("identity transform leaves the dataset bit-identical") {
        const auto out = apply_rigid_kspace(ds, RigidTransform{});
        for (std::int64_t f = 0; f < ds.frame_count(); ++f) {
            CHECK((out.kspace[f] - ds.kspace[f]).cwiseAbs().maxCoeff() == 0.0);
            CHECK((out.navigators[f] - ds.navigators[f]).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    SUBCASE("shift followed by its inverse cancels") {
        RigidTransform t;
        t.dx = 2.3;
        t.dy = -1.7;
        const auto shifted = apply_rigid_kspace(ds, t);
        const auto back = apply_rigid_kspace(shifted, t.inverse());
        for (std::int64_t f = 0; f < ds.frame_count(); ++f)
            CHECK((back.kspace[f] - ds.kspace[f]).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("k-space shift matches shifting the phantom") {
        SessionVariation moved;
        moved.dx = 2.0;
        moved.dy = 3.0;
        const auto truth_moved = acquire(spec, moved, 0, 20, 0, 0.0, 4, cm);
        const auto clean = acquire(spec, {}, 0, 20, 0, 0.0, 4, cm);
        RigidTransform t;
        t.dx = 2.0;
        t.dy = 3.0;
        const auto ramped = apply_rigid_kspace(clean, t);
        for (std::int64_t f = 0; f < clean.frame_count(); ++f) {
            const double scale = truth_moved.kspace[f].cwiseAbs().maxCoeff();
            CHECK((ramped.kspace[f] - truth_moved.kspace[f]).cwiseAbs().maxCoeff() / scale <
                  1e-10);
        }
    }

    SUBCASE("correcting a shifted session re-aligns its time average") {
        SessionVariation moved;
        moved.dx = 3.0;
        moved.dy = -2.0;
        const auto ref = acquire(spec, {}, 0, 80, 0, 0.01, 5, cm);
        const auto mov = acquire(spec, moved, 1, 80, 0, 0.01, 6, cm);
        const auto t = estimate_rigid(time_average(ref, cm), time_average(mov, cm), n);
        const auto corrected = apply_rigid_kspace(mov, t.inverse());
        const auto residual =
            estimate_rigid(time_average(ref, cm), time_average(corrected, cm), n);
        CHECK(std::abs(residual.dx) < 0.3);
        CHECK(std::abs(residual.dy) < 0.3);
    }
}

TEST_CASE("concatenate and split round-trip") {
    const int n = 16;
    PhantomSpec spec;
    spec.grid_size = n;
    spec.ellipses = {{0.0, 0.0, 6.0, 6.0, 0.0, 0.6, 0.0, false},
                     {1.0, 0.0, 2.0, 2.0, 0.0, 0.9, 1.0, false}};
    spec.respiration = {1.5, 10.0, 0.0};
    const auto cm = simulate_coil_maps(2, n, 3);
    const auto d1 = acquire(spec, {}, 0, 20, 0, 0.01, 7, cm);
    const auto d2 = acquire(spec, {}, 1, 12, 20, 0.01, 7, cm);
    const auto d3 = acquire(spec, {}, 2, 8, 32, 0.01, 7, cm);

    std::vector<SessionDataset> all{d1, d2, d3};
    const auto ext = concatenate(all, 3);
    CHECK(ext.frame_boundaries == std::vector<std::int64_t>{0, 10, 16});
    CHECK(ext.joint_basis.frame_count() == 20);
    CHECK(ext.sessions.size() == 3);

    SUBCASE("single session degenerates to the solo pipeline") {
        const auto solo = concatenate(std::span<const SessionDataset>(&d1, 1), 3);
        const auto direct =
            estimate_basis(navigator_projections(std::span<const SessionDataset>(&d1, 1)), 3);
        CHECK((solo.joint_basis.U_K - direct.U_K).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("split slices and re-concatenation reproduces the series") {
        DynamicSeries series;
        series.grid_size = n;
        series.session_boundaries = ext.frame_boundaries;
        std::mt19937_64 rng(9);
        std::normal_distribution<double> g(0.0, 1.0);
        series.m.resize(static_cast<Eigen::Index>(n) * n, 20);
        for (Eigen::Index i = 0; i < series.m.size(); ++i)
            series.m.data()[i] = cplx(g(rng), g(rng));

        const auto parts = split_series(series);
        REQUIRE(parts.size() == 3);
        CHECK(parts[0].m.cols() == 10);
        CHECK(parts[1].m.cols() == 6);
        CHECK(parts[2].m.cols() == 4);
        CMat glued(series.m.rows(), 20);
        glued << parts[0].m, parts[1].m, parts[2].m;
        CHECK((glued - series.m).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("whole series returned for a single boundary") {
        DynamicSeries series;
        series.grid_size = n;
        series.session_boundaries = {0};
        series.m = CMat::Ones(4, 5);
        const auto parts = split_series(series);
        REQUIRE(parts.size() == 1);
        CHECK(parts[0].m.cols() == 5);
        DynamicSeries empty;
        empty.m = series.m;
        CHECK_THROWS_AS(split_series(empty), std::invalid_argument);
    }
}

TEST_CASE("geometry mismatch across sessions is rejected") {
    const int n = 16;
    PhantomSpec spec;
    spec.grid_size = n;
    spec.ellipses = {{0.0, 0.0, 6.0, 6.0, 0.0, 0.6, 0.0, false}};
    const auto cm2 = simulate_coil_maps(2, n, 3);
    const auto cm3 = simulate_coil_maps(3, n, 3);
    const auto a = acquire(spec, {}, 0, 8, 0, 0.0, 1, cm2);
    const auto b = acquire(spec, {}, 1, 8, 8, 0.0, 1, cm3);
    std::vector<SessionDataset> both{a, b};
    CHECK_THROWS_AS(navigator_projections(both), std::invalid_argument);
}
