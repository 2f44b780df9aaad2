#include <doctest.h>

#include <cmath>
#include <random>

#include "longrad/metrics.hpp"

using namespace longrad;

namespace {

// Independent sliding-window implementation used as the SSIM oracle.
double ssim_bruteforce(const RMat& x, const RMat& ref) {
    const int w = 7;
    const double L = ref.maxCoeff();
    const double c1 = std::pow(0.01 * L, 2);
    const double c2 = std::pow(0.03 * L, 2);
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i + w <= x.rows(); ++i)
        for (int j = 0; j + w <= x.cols(); ++j) {
            double mx = 0, my = 0;
            for (int a = 0; a < w; ++a)
                for (int b = 0; b < w; ++b) {
                    mx += x(i + a, j + b);
                    my += ref(i + a, j + b);
                }
            mx /= w * w;
            my /= w * w;
            double vx = 0, vy = 0, cxy = 0;
            for (int a = 0; a < w; ++a)
                for (int b = 0; b < w; ++b) {
                    const double dx = x(i + a, j + b) - mx;
                    const double dy = ref(i + a, j + b) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            vx /= w * w;
            vy /= w * w;
            cxy /= w * w;
            acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / count;
}

RMat random_image(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    RMat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
    return m;
}

} // namespace

TEST_CASE("ssim equals one for identical images") {
    const RMat img = random_image(12, 12, 1);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches the sliding-window oracle") {
    for (std::uint64_t seed : {2, 3, 4}) {
        const RMat ref = random_image(8, 8, seed);
        const RMat x = random_image(8, 8, seed + 100);
        CHECK(ssim(x, ref) == doctest::Approx(ssim_bruteforce(x, ref)).epsilon(1e-10));
    }
    // larger non-square case
    const RMat ref = random_image(11, 9, 77);
    const RMat x = 0.8 * ref + 0.2 * random_image(11, 9, 78);
    CHECK(ssim(x, ref) == doctest::Approx(ssim_bruteforce(x, ref)).epsilon(1e-10));
}

TEST_CASE("constant offset reduces ssim through the luminance term only") {
    const RMat ref = random_image(10, 10, 5);
    const double c = 0.01 * ref.maxCoeff();
    const RMat x = ref.array() + c;
    // With identical variance and covariance the contrast-structure factor
    // is exactly one, so SSIM is the mean luminance factor.
    const double L = ref.maxCoeff();
    const double c1 = std::pow(0.01 * L, 2);
    double expect = 0.0;
    int count = 0;
    for (int i = 0; i + 7 <= 10; ++i)
        for (int j = 0; j + 7 <= 10; ++j) {
            double my = 0.0;
            for (int a = 0; a < 7; ++a)
                for (int b = 0; b < 7; ++b) my += ref(i + a, j + b);
            my /= 49.0;
            const double mx = my + c;
            expect += (2 * mx * my + c1) / (mx * mx + my * my + c1);
            ++count;
        }
    expect /= count;
    CHECK(ssim(x, ref) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ssim(x, ref) < 1.0);
}

TEST_CASE("negated image drives ssim negative") {
    const RMat ref = random_image(8, 8, 9);
    const RMat x = -ref;
    CHECK(ssim(x, ref) < 0.0);
    CHECK(ssim(x, ref) == doctest::Approx(ssim_bruteforce(x, ref)).epsilon(1e-10));
}

TEST_CASE("ssim rejects degenerate input") {
    const RMat flat = RMat::Constant(8, 8, 0.5);
    const RMat img = random_image(8, 8, 3);
    CHECK_THROWS_AS(ssim(img, flat), std::invalid_argument);
    CHECK_THROWS_AS(ssim(img.topRows(5), flat.topRows(5)), std::invalid_argument);
}

TEST_CASE("nrmse identities") {
    const RMat ref = random_image(9, 9, 11);
    CHECK(nrmse(ref, ref) == 0.0);
    CHECK(nrmse(RMat::Zero(9, 9), ref) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nrmse(1.1 * ref, ref) == doctest::Approx(0.1).epsilon(1e-12));
    // scale covariance
    const RMat x = random_image(9, 9, 12);
    CHECK(nrmse(3.7 * x, 3.7 * ref) == doctest::Approx(nrmse(x, ref)).epsilon(1e-12));
    CHECK_THROWS_AS(nrmse(ref, RMat::Zero(9, 9)), std::invalid_argument);
}

TEST_CASE("paired one-tail t-test matches reference values") {
    SUBCASE("equal samples give p = 0.5") {
        const std::vector<double> a{1.0, 2.0, 3.0};
        const auto r = paired_ttest_onetail(a, a);
        CHECK(r.t == 0.0);
        CHECK(r.p == doctest::Approx(0.5));
        CHECK(r.degenerate);
    }
    SUBCASE("differences {1,2,3,4,5}") {
        const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
        const std::vector<double> b{0.0, 0.0, 0.0, 0.0, 0.0};
        const auto r = paired_ttest_onetail(a, b);
        CHECK(r.t == doctest::Approx(4.242640687).epsilon(1e-9));
        CHECK(r.dof == 4);
        // frozen from an independent statistical implementation
        CHECK(r.p == doctest::Approx(0.006617799782).epsilon(1e-8));
    }
    SUBCASE("swapping the samples maps p to 1-p") {
        const std::vector<double> a{2.0, 3.1, 2.5, 4.0};
        const std::vector<double> b{1.5, 3.0, 2.6, 3.1};
        const auto fwd = paired_ttest_onetail(a, b);
        const auto rev = paired_ttest_onetail(b, a);
        CHECK(fwd.p + rev.p == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fwd.t == doctest::Approx(-rev.t));
    }
    SUBCASE("adding a positive constant to a strictly decreases p") {
        std::vector<double> a{1.0, 1.2, 0.9, 1.4, 1.1};
        const std::vector<double> b{1.0, 1.1, 1.0, 1.2, 1.0};
        const double p0 = paired_ttest_onetail(a, b).p;
        for (auto& v : a) v += 0.05;
        const double p1 = paired_ttest_onetail(a, b).p;
        CHECK(p1 < p0);
    }
    SUBCASE("zero-variance nonzero differences are flagged") {
        const std::vector<double> a{2.0, 2.0, 2.0};
        const std::vector<double> b{1.0, 1.0, 1.0};
        const auto r = paired_ttest_onetail(a, b);
        CHECK(r.degenerate);
        CHECK(r.p < 1e-12);
        const auto rr = paired_ttest_onetail(b, a);
        CHECK(rr.p > 1.0 - 1e-10);
    }
    CHECK_THROWS_AS(paired_ttest_onetail({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(paired_ttest_onetail({1.0, 2.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("student upper tail agrees with symmetry and tabulated points") {
    CHECK(student_t_upper_tail(0.0, 7) == doctest::Approx(0.5));
    // t distribution with 1 dof is Cauchy: P(T > 1) = 0.25
    CHECK(student_t_upper_tail(1.0, 1) == doctest::Approx(0.25).epsilon(1e-10));
    // standard table: t_{0.05, 10} = 1.812461
    CHECK(student_t_upper_tail(1.8124611228107335, 10) == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(student_t_upper_tail(-2.0, 5) ==
          doctest::Approx(1.0 - student_t_upper_tail(2.0, 5)).epsilon(1e-12));
}

TEST_CASE("significance stars follow the reporting convention") {
    CHECK(significance_stars(0.2) == "");
    CHECK(significance_stars(0.049) == "*");
    CHECK(significance_stars(0.009) == "**");
}
