#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "longrad/array_io.hpp"
#include "longrad/png_io.hpp"

using namespace longrad;

namespace {
std::filesystem::path tmp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}
}

TEST_CASE("LRA1 round-trips real and complex arrays") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-10.0, 10.0);

    SUBCASE("real") {
        std::vector<double> data(3 * 5 * 2);
        for (auto& v : data) v = uni(rng);
        const auto path = tmp_file("longrad_io_real.lra");
        save_array(path, data.data(), {3, 5, 2});
        std::vector<double> back;
        ArrayHeader h;
        load_array(path, back, h);
        CHECK(h.dtype == Dtype::f64);
        REQUIRE(h.dims == std::vector<std::uint64_t>{3, 5, 2});
        CHECK(back == data);
        std::filesystem::remove(path);
    }
    SUBCASE("complex matrix via Eigen helpers") {
        CMat m(4, 3);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = cplx(uni(rng), uni(rng));
        const auto path = tmp_file("longrad_io_cplx.lra");
        save_matrix(path, m);
        const CMat back = load_cmat(path);
        CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
        const auto h = peek_header(path);
        CHECK(h.dtype == Dtype::c128);
        CHECK(h.dims == std::vector<std::uint64_t>{4, 3});
        std::filesystem::remove(path);
    }
    SUBCASE("bad magic rejected") {
        const auto path = tmp_file("longrad_io_bad.lra");
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOPE", f);
        std::fclose(f);
        CHECK_THROWS(peek_header(path));
        std::filesystem::remove(path);
    }
}

TEST_CASE("grayscale png writer emits a decodable signature") {
    std::vector<std::uint8_t> pix(16 * 8);
    for (std::size_t i = 0; i < pix.size(); ++i) pix[i] = static_cast<std::uint8_t>(i * 2);
    const auto path = tmp_file("longrad_io_test.png");
    write_gray_png(path, pix.data(), 16, 8);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    unsigned char sig[8];
    REQUIRE(std::fread(sig, 1, 8, f) == 8);
    std::fclose(f);
    CHECK(sig[0] == 0x89);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
    std::filesystem::remove(path);
}
