#include <doctest.h>

#include <cmath>

#include "longrad/phantom.hpp"

using namespace longrad;

namespace {

PhantomSpec tiny_spec() {
    PhantomSpec spec;
    spec.grid_size = 32;
    spec.ellipses = {
        {0.0, 0.0, 12.0, 13.0, 0.0, 0.5, 0.0, false},
        {-3.0, 1.0, 5.0, 4.0, 0.2, 0.8, 1.0, false},   // moving organ
        {0.0, 10.0, 6.0, 2.0, 0.0, 0.3, 0.0, true},    // fat pad
    };
    spec.respiration = {3.0, 50.0, 0.0};
    return spec;
}

} // namespace

TEST_CASE("static phantom renders identically at any time") {
    PhantomSpec spec = tiny_spec();
    spec.respiration.amplitude = 0.0;
    spec.respiration.drift = 0.0;
    const RVec f0 = render_frame(spec, {}, 0.0);
    const RVec f9 = render_frame(spec, {}, 9.0);
    CHECK((f0 - f9).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("motion is periodic without drift") {
    const PhantomSpec spec = tiny_spec();
    const RVec a = render_frame(spec, {}, 7.0);
    const RVec b = render_frame(spec, {}, 7.0 + 50.0);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quarter-period displacement shifts the moving ellipse by the full amplitude") {
    // At t = period/4 the sinusoid is exactly 1, so a motion_gain-1 ellipse
    // sits amplitude pixels lower; rendering a spec with the center moved by
    // that amount at t=0-phase matches bit for bit.
    PhantomSpec spec = tiny_spec();
    const RVec moved = render_frame(spec, {}, 12.5);

    PhantomSpec shifted = spec;
    shifted.ellipses[1].cy += 3.0;  // amplitude * gain
    shifted.respiration.amplitude = 0.0;
    const RVec expect = render_frame(shifted, {}, 12.5);
    CHECK((moved - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fat factor zero removes fat ellipses") {
    const PhantomSpec spec = tiny_spec();
    SessionVariation no_fat;
    no_fat.fat_intensity_factor = 0.0;
    const RVec with_fat = render_frame(spec, {}, 0.0);
    const RVec without = render_frame(spec, no_fat, 0.0);

    PhantomSpec bare = spec;
    bare.ellipses.pop_back();
    const RVec expect = render_frame(bare, {}, 0.0);
    CHECK((without - expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK((with_fat - without).cwiseAbs().maxCoeff() == doctest::Approx(0.3));
}

TEST_CASE("fat factor scales the additive contribution linearly") {
    const PhantomSpec spec = tiny_spec();
    SessionVariation v1, v2;
    v1.fat_intensity_factor = 1.0;
    v2.fat_intensity_factor = 1.8;
    const RVec a = render_frame(spec, v1, 3.0);
    const RVec b = render_frame(spec, v2, 3.0);
    const RVec mask = fat_mask(spec, v1, 3.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (mask[i] > 0.0)
            CHECK(b[i] - a[i] == doctest::Approx(0.8 * 0.3));
        else
            CHECK(b[i] == a[i]);
    }
}

TEST_CASE("lesion toggle changes pixels only inside the lesion disc") {
    PhantomSpec spec = tiny_spec();
    const RVec base = render_frame(spec, {}, 4.0);
    spec.lesion = Lesion{-3.0, 1.0, 2.0, 0.25};
    const RVec with_lesion = render_frame(spec, {}, 4.0);
    const RVec mask = lesion_mask(spec, {}, 4.0);
    REQUIRE(mask.sum() > 0.0);
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        if (mask[i] > 0.0)
            CHECK(with_lesion[i] - base[i] == doctest::Approx(0.25));
        else
            CHECK(with_lesion[i] == base[i]);
    }
}

TEST_CASE("ellipse leaving the field of view is rejected") {
    PhantomSpec spec = tiny_spec();
    spec.ellipses[1].motion_gain = 10.0;  // amplitude 3 -> 30 px swing
    CHECK_THROWS(render_frame(spec, {}, 12.5));
}

TEST_CASE("session variation translates every ellipse") {
    const PhantomSpec spec = tiny_spec();
    SessionVariation var;
    var.dx = 2.0;
    var.dy = -1.0;
    const RVec shifted = render_frame(spec, var, 0.0);

    PhantomSpec manual = spec;
    for (auto& e : manual.ellipses) {
        e.cx += 2.0;
        e.cy += -1.0;
    }
    const RVec expect = render_frame(manual, {}, 0.0);
    CHECK((shifted - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coil maps are normalized and deterministic") {
    SUBCASE("single coil has unit magnitude") {
        const auto cm = simulate_coil_maps(1, 32, 5);
        for (Eigen::Index r = 0; r < cm.maps.rows(); ++r)
            CHECK(std::abs(cm.maps(r, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("rss is one inside the support disc") {
        const auto cm = simulate_coil_maps(8, 64, 5);
        const int n = 64;
        for (int i = 0; i < n; i += 3)
            for (int j = 0; j < n; j += 3) {
                const double x = j - n / 2;
                const double y = i - n / 2;
                if (x * x + y * y > 0.45 * n * 0.45 * n) continue;
                const double rss =
                    std::sqrt(cm.maps.row(static_cast<Eigen::Index>(i) * n + j).squaredNorm());
                CHECK(rss > 0.999);
                CHECK(rss < 1.001);
            }
    }
    SUBCASE("same seed reproduces bit-identical maps") {
        const auto a = simulate_coil_maps(4, 24, 9);
        const auto b = simulate_coil_maps(4, 24, 9);
        CHECK((a.maps - b.maps).cwiseAbs().maxCoeff() == 0.0);
        const auto c = simulate_coil_maps(4, 24, 10);
        CHECK((a.maps - c.maps).cwiseAbs().maxCoeff() > 0.0);
    }
    CHECK_THROWS_AS(simulate_coil_maps(0, 16, 1), std::invalid_argument);
}

TEST_CASE("standard phantom validates and stays inside the FOV over a breathing cycle") {
    const auto spec = standard_phantom(64);
    for (double t = 0.0; t < 50.0; t += 5.0) CHECK_NOTHROW(render_frame(spec, {}, t));
}
