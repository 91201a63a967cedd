#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vrd/dst.hpp"
#include "vrd/field.hpp"
#include "vrd/io.hpp"
#include "vrd/kernels.hpp"
#include "vrd/ref.hpp"
#include "vrd/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace vrd;

namespace {

const double kPi = 3.14159265358979323846;

Field random_field(Xoshiro256pp& rng, int h, int w, int c) {
    Field f(h, w, c);
    for (double& v : f.data) v = rng.gaussian();
    return f;
}

double max_abs_diff(const Field& a, const Field& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        m = std::max(m, std::fabs(a.data[k] - b.data[k]));
    }
    return m;
}

}  // namespace

TEST_CASE("laplacian of zeros is zero") {
    const Field f(4, 6, 2);
    const Field out = laplacian_apply(f);
    CHECK(max_abs(out) == 0.0);
}

TEST_CASE("laplacian of all-ones 3x3 matches the stencil by hand") {
    Field f(3, 3, 1);
    for (double& v : f.data) v = 1.0;
    const Field out = laplacian_apply(f);
    CHECK(out.at(1, 1, 0) == doctest::Approx(0.0));
    for (int i : {0, 2})
        for (int j : {0, 2}) CHECK(out.at(i, j, 0) == doctest::Approx(-2.0));
    CHECK(out.at(0, 1, 0) == doctest::Approx(-1.0));
    CHECK(out.at(1, 0, 0) == doctest::Approx(-1.0));
    CHECK(out.at(1, 2, 0) == doctest::Approx(-1.0));
    CHECK(out.at(2, 1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("sine modes are laplacian eigenfunctions") {
    const int h = 4, w = 5;
    Field f(h, w, 1);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            f.at(i, j, 0) = std::sin(kPi * (i + 1) / (h + 1)) * std::sin(kPi * (j + 1) / (w + 1));
    const double mu = 2.0 * std::cos(kPi / 5.0) + 2.0 * std::cos(kPi / 6.0) - 4.0;
    const Field out = laplacian_apply(f);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            CHECK(out.at(i, j, 0) == doctest::Approx(mu * f.at(i, j, 0)).epsilon(1e-12));
}

TEST_CASE("laplacian is linear") {
    Xoshiro256pp rng(11);
    const Field f = random_field(rng, 9, 7, 3);
    const Field g = random_field(rng, 9, 7, 3);
    const double alpha = 0.37, beta = -1.91;
    Field combo(9, 7, 3);
    for (std::size_t k = 0; k < combo.data.size(); ++k) {
        combo.data[k] = alpha * f.data[k] + beta * g.data[k];
    }
    const Field lhs = laplacian_apply(combo);
    const Field lf = laplacian_apply(f);
    const Field lg = laplacian_apply(g);
    for (std::size_t k = 0; k < lhs.data.size(); ++k) {
        CHECK(lhs.data[k] ==
              doctest::Approx(alpha * lf.data[k] + beta * lg.data[k]).epsilon(1e-12));
    }
}

TEST_CASE("laplacian is self-adjoint under the inner product") {
    Xoshiro256pp rng(12);
    const Field f = random_field(rng, 8, 13, 1);
    const Field g = random_field(rng, 8, 13, 1);
    const double lhs = inner_product(laplacian_apply(f), g, 0, 0);
    const double rhs = inner_product(f, laplacian_apply(g), 0, 0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("laplacian rejects non-finite input") {
    Field f(3, 3, 1);
    f.at(1, 1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(laplacian_apply(f), std::invalid_argument);
}

TEST_CASE("parallel kernels match the serial reference") {
    Xoshiro256pp rng(13);
    for (auto [h, w] : {std::pair{9, 11}, {1, 7}, {6, 1}, {1, 1}}) {
        const Field f = random_field(rng, h, w, 3);
        // Addition order differs between the two paths; reordering slack only.
        CHECK(max_abs_diff(laplacian_apply(f), ref::laplacian_apply(f)) <= 1e-12);

        Mat a(2, 3);
        for (double& v : a.m) v = rng.uniform(-1, 1);
        CHECK(max_abs_diff(channel_matvec(a, f), ref::channel_matvec(a, f)) == 0.0);

        const Field g = random_field(rng, h, w, 2);
        const Mat direct = gram(f, g);
        const Mat naive = ref::gram(f, g);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK(direct(i, j) == doctest::Approx(naive(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("dst of zeros is zero") {
    const Field f(5, 4, 2);
    CHECK(max_abs(dst1_2d(f, DstDirection::forward)) == 0.0);
}

TEST_CASE("dst on a single cell is the single-mode kernel") {
    Field f(1, 1, 1);
    f.at(0, 0, 0) = 1.0;
    const Field out = dst1_2d(f, DstDirection::forward);
    // sin(pi/2)^2 = 1
    CHECK(out.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fft dst matches direct summation and inverts exactly") {
    Xoshiro256pp rng(14);
    const Field f = random_field(rng, 3, 4, 1);
    const Field fast = dst1_2d(f, DstDirection::forward);
    const Field direct = ref::dst1_forward_direct(f);
    CHECK(max_abs_diff(fast, direct) <= 1e-12);
    const Field round = dst1_2d(fast, DstDirection::inverse);
    CHECK(max_abs_diff(round, f) <= 1e-12);
}

TEST_CASE("dst roundtrip holds on random shapes including degenerate rows") {
    Xoshiro256pp rng(15);
    for (auto [h, w] : {std::pair{16, 16}, {7, 31}, {1, 9}, {12, 1}, {2, 2}}) {
        const Field f = random_field(rng, h, w, 2);
        const Field round = dst1_2d(dst1_2d(f, DstDirection::forward), DstDirection::inverse);
        CHECK(max_abs_diff(round, f) <= 1e-12 * std::max(1.0, max_abs(f)));
    }
}

TEST_CASE("dst lengths with prime n+1 agree with direct summation") {
    // 17, 107, and 257 are prime, so these lengths take the Rader route.
    Xoshiro256pp rng(19);
    for (auto [h, w] : {std::pair{1, 106}, {16, 16}, {3, 256}, {106, 5}}) {
        const Field f = random_field(rng, h, w, 1);
        const Field fast = dst1_2d(f, DstDirection::forward);
        const Field direct = ref::dst1_forward_direct(f);
        const double scale = std::max(1.0, max_abs(direct));
        CHECK(max_abs_diff(fast, direct) <= 1e-11 * scale);
        const Field round = dst1_2d(fast, DstDirection::inverse);
        CHECK(max_abs_diff(round, f) <= 1e-12 * std::max(1.0, max_abs(f)));
    }
}

TEST_CASE("dst diagonalizes the laplacian") {
    Xoshiro256pp rng(16);
    for (auto [h, w] : {std::pair{10, 12}, {5, 5}, {1, 8}}) {
        const Field f = random_field(rng, h, w, 1);
        const Field lhs = dst1_2d(laplacian_apply(f), DstDirection::forward);
        Field rhs = dst1_2d(f, DstDirection::forward);
        for (int k = 0; k < h; ++k)
            for (int l = 0; l < w; ++l)
                rhs.at(k, l, 0) *= 2.0 * std::cos(kPi * (k + 1) / (h + 1)) +
                                   2.0 * std::cos(kPi * (l + 1) / (w + 1)) - 4.0;
        CHECK(max_abs_diff(lhs, rhs) <= 1e-10);
    }
}

TEST_CASE("inner product basics") {
    Xoshiro256pp rng(17);
    const Field g = random_field(rng, 4, 4, 1);
    const Field zero(4, 4, 1);
    CHECK(inner_product(zero, g, 0, 0) == 0.0);
    CHECK(inner_product(g, g, 0, 0) > 0.0);

    Field f(2, 2, 1), e(2, 2, 1);
    f.at(0, 0, 0) = 1;
    f.at(0, 1, 0) = 2;
    f.at(1, 0, 0) = 3;
    f.at(1, 1, 0) = 4;
    e.at(0, 0, 0) = 1;
    e.at(1, 1, 0) = 1;
    CHECK(inner_product(f, e, 0, 0) == doctest::Approx(5.0));

    const Field mismatched(3, 4, 1);
    CHECK_THROWS_AS(inner_product(f, mismatched, 0, 0), ShapeError);
}

TEST_CASE("vrdt files roundtrip and report truncation offsets") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vrd_lattice_test";
    fs::create_directories(dir);
    const std::string path = (dir / "t.vrdt").string();

    Xoshiro256pp rng(18);
    const Field f = random_field(rng, 6, 5, 3);
    write_vrdt(path, f);
    const Field back = read_vrdt(path);
    CHECK(back.height == f.height);
    CHECK(back.width == f.width);
    CHECK(back.channels == f.channels);
    CHECK(max_abs_diff(back, f) == 0.0);

    // Truncate mid-payload; the error must name an offset.
    std::error_code ec;
    fs::resize_file(path, 64, ec);
    REQUIRE(!ec);
    try {
        read_vrdt(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    const std::string bad = (dir / "bad.vrdt").string();
    std::ofstream(bad, std::ios::binary) << "NOPE data";
    CHECK_THROWS_AS(read_vrdt(bad), FormatError);
    fs::remove_all(dir);
}
