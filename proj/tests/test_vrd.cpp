#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vrd/io.hpp"
#include "vrd/kernels.hpp"
#include "vrd/oracle.hpp"
#include "vrd/rng.hpp"
#include "vrd/vrd.hpp"

#include <cmath>
#include <filesystem>
#include <vector>

using namespace vrd;

namespace {

Field random_field(Xoshiro256pp& rng, int h, int w, int c) {
    Field f(h, w, c);
    for (double& v : f.data) v = rng.gaussian();
    return f;
}

Mat random_mat(Xoshiro256pp& rng, int r, int c, double amp = 1.0) {
    Mat m(r, c);
    for (double& v : m.m) v = rng.uniform(-amp, amp);
    return m;
}

VrdParams random_params(Xoshiro256pp& rng, int n_in, int n_out, double amp = 0.5) {
    VrdParams p;
    p.n_in = n_in;
    p.n_out = n_out;
    p.r_b = random_mat(rng, n_out, n_out, amp);
    p.r_q = random_mat(rng, n_out, n_out, amp);
    p.q_i = random_mat(rng, n_out, n_in);
    p.b_i = random_mat(rng, n_out, n_in);
    return p;
}

double max_abs_diff(const Field& a, const Field& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        m = std::max(m, std::fabs(a.data[k] - b.data[k]));
    }
    return m;
}

double rel_l2(const Field& a, const Field& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        num += d * d;
        den += b.data[k] * b.data[k];
    }
    return std::sqrt(num / den);
}

// Max-norm of B^o lap(s_o) - Q^o s_o - s_p.
double pde_residual(const Mat& b_o, const Mat& q_o, const Field& s_o, const Field& s_p) {
    Mat neg_q_o = scale(q_o, -1.0);
    const Field lap = laplacian_apply(s_o);
    Field resid = channel_matvec(b_o, lap, &neg_q_o, &s_o);
    for (std::size_t k = 0; k < resid.data.size(); ++k) resid.data[k] -= s_p.data[k];
    return max_abs(resid);
}

VrdParams scalar_params(double b, double q) {
    // N_i = N_o = 1 with B^i = 0, Q^i = -1: the pure smoothing configuration.
    VrdParams p;
    p.n_in = 1;
    p.n_out = 1;
    p.r_b = Mat(1, 1);
    p.r_b(0, 0) = 0.5 * std::log(b);
    p.r_q = Mat(1, 1);
    p.r_q(0, 0) = 0.5 * std::log(q);
    p.q_i = Mat(1, 1);
    p.q_i(0, 0) = -1.0;
    p.b_i = Mat(1, 1);
    return p;
}

}  // namespace

TEST_CASE("assemble_sp basic cases") {
    Xoshiro256pp rng(31);
    VrdParams p = random_params(rng, 3, 2);
    const Field s_i = random_field(rng, 5, 4, 3);

    SUBCASE("zero cross blocks give a zero source") {
        p.q_i = Mat(2, 3);
        p.b_i = Mat(2, 3);
        CHECK(max_abs(assemble_sp(s_i, p)) == 0.0);
    }

    SUBCASE("with b_i = 0 the source is the pointwise product") {
        p.b_i = Mat(2, 3);
        const Field sp = assemble_sp(s_i, p);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j)
                for (int r = 0; r < 2; ++r) {
                    double expect = 0.0;
                    for (int k = 0; k < 3; ++k) expect += p.q_i(r, k) * s_i.at(i, j, k);
                    CHECK(sp.at(i, j, r) == doctest::Approx(expect).epsilon(1e-12));
                }
    }

    SUBCASE("matches the direct per-pixel stencil evaluation") {
        const Field sp = assemble_sp(s_i, p);
        auto value = [&](int i, int j, int k) {
            if (i < 0 || i >= 5 || j < 0 || j >= 4) return 0.0;
            return s_i.at(i, j, k);
        };
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j)
                for (int r = 0; r < 2; ++r) {
                    double expect = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        const double lap = value(i - 1, j, k) + value(i + 1, j, k) +
                                           value(i, j - 1, k) + value(i, j + 1, k) -
                                           4.0 * s_i.at(i, j, k);
                        expect += p.q_i(r, k) * s_i.at(i, j, k) - p.b_i(r, k) * lap;
                    }
                    CHECK(sp.at(i, j, r) == doctest::Approx(expect).epsilon(1e-12));
                }
    }

    SUBCASE("channel mismatch is rejected") {
        const Field wrong = random_field(rng, 5, 4, 2);
        CHECK_THROWS_AS(assemble_sp(wrong, p), ShapeError);
    }
}

TEST_CASE("helmholtz_solve basics") {
    CHECK(max_abs(helmholtz_solve(Field(4, 5, 1), 0.3)) == 0.0);

    Field one(1, 1, 1);
    one.at(0, 0, 0) = 2.0;
    const double lambda = 0.7;
    const Field z = helmholtz_solve(one, lambda);
    CHECK(z.at(0, 0, 0) == doctest::Approx(2.0 / (-4.0 - lambda)));

    CHECK_THROWS_AS(helmholtz_solve(one, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(helmholtz_solve(one, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(helmholtz_solve(Field(2, 2, 3), 1.0), ShapeError);
}

TEST_CASE("helmholtz_solve satisfies the PDE") {
    Xoshiro256pp rng(32);
    const Field f = random_field(rng, 6, 7, 1);
    const double lambda = 0.5;
    const Field z = helmholtz_solve(f, lambda);
    Field resid = laplacian_apply(z);
    for (std::size_t k = 0; k < resid.data.size(); ++k) {
        resid.data[k] -= lambda * z.data[k] + f.data[k];
    }
    CHECK(max_abs(resid) <= 1e-10 * max_abs(f));
}

TEST_CASE("vrd_solve reduces to helmholtz for a single channel") {
    Xoshiro256pp rng(33);
    const Field s_p = random_field(rng, 7, 6, 1);
    const double lambda = 2.3;
    Mat b_o = Mat::identity(1);
    Mat q_o(1, 1);
    q_o(0, 0) = lambda;
    SolveOps ops = prepare_solve(b_o, q_o);
    const Field via_schur = vrd_solve(s_p, ops.schur, ops.b_o_inv);
    const Field direct = helmholtz_solve(s_p, lambda);
    CHECK(max_abs_diff(via_schur, direct) <= 1e-12 * std::max(1.0, max_abs(direct)));

    CHECK(max_abs(vrd_solve(Field(7, 6, 1), ops.schur, ops.b_o_inv)) == 0.0);
}

TEST_CASE("vrd_solve matches the dense oracle") {
    Xoshiro256pp rng(34);
    const VrdParams p = random_params(rng, 2, 3);
    const Field s_i = random_field(rng, 6, 5, 2);
    const Field s_p = assemble_sp(s_i, p);
    SolveOps ops = prepare_solve(expm_sym(p.bbar()), expm_sym(p.qbar()));
    const Field fast = vrd_solve(s_p, ops.schur, ops.b_o_inv);
    const Field dense = oracle::dense_solve_oracle(p, s_p);
    CHECK(rel_l2(fast, dense) <= 1e-8);
}

TEST_CASE("vrd_forward trivial and smoothing configurations") {
    Xoshiro256pp rng(35);

    SUBCASE("zero input gives zero output") {
        const VrdParams p = random_params(rng, 2, 2);
        auto [s_o, cache] = vrd_forward(Field(5, 5, 2), p);
        CHECK(max_abs(s_o) == 0.0);
    }

    SUBCASE("identity parameters smooth the input") {
        const VrdParams p = scalar_params(1.0, 1.0);
        const Field s_i = random_field(rng, 8, 9, 1);
        auto [s_o, cache] = vrd_forward(s_i, p);
        // s^p = -s_i, so the output solves lap s_o - s_o = -s_i.
        Field resid = laplacian_apply(s_o);
        for (std::size_t k = 0; k < resid.data.size(); ++k) {
            resid.data[k] -= s_o.data[k] - s_i.data[k];
        }
        CHECK(max_abs(resid) <= 1e-10 * max_abs(s_i));
    }

    SUBCASE("output minimizes the energy against random perturbations") {
        const VrdParams p = random_params(rng, 2, 2);
        const Field s_i = random_field(rng, 6, 5, 2);
        const double eps[] = {1e-2, 1.0};
        const auto report = oracle::minimizer_check(p, s_i, 100, eps);
        CHECK(report.pass);
        CHECK(report.worst_margin >= 0.0);
    }
}

TEST_CASE("vrd_forward stationarity residual") {
    Xoshiro256pp rng(36);
    const VrdParams p = random_params(rng, 2, 3);
    const Field s_i = random_field(rng, 24, 31, 2);
    auto [s_o, cache] = vrd_forward(s_i, p);
    const double resid =
        pde_residual(expm_sym(p.bbar()), expm_sym(p.qbar()), s_o, cache.s_p);
    CHECK(resid <= 1e-8 * max_abs(cache.s_p));
}

TEST_CASE("vector laplacian commutes with constant channel maps") {
    Xoshiro256pp rng(37);
    const Field f = random_field(rng, 7, 8, 3);
    const Mat m = random_mat(rng, 3, 3);
    const Mat v = sym_eig(add(m, transpose(m))).vectors;
    const Mat vt = transpose(v);
    const Field lhs = channel_matvec(vt, laplacian_apply(f));
    const Field rhs = laplacian_apply(channel_matvec(vt, f));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * std::max(1.0, max_abs(lhs)));
}

TEST_CASE("the solve operator is self-adjoint") {
    Xoshiro256pp rng(38);
    const VrdParams p = random_params(rng, 1, 3);
    SolveOps ops = prepare_solve(expm_sym(p.bbar()), expm_sym(p.qbar()));
    const Field f = random_field(rng, 9, 8, 3);
    const Field g = random_field(rng, 9, 8, 3);
    const Field gf = vrd_solve(f, ops.schur, ops.b_o_inv);
    const Field gg = vrd_solve(g, ops.schur, ops.b_o_inv);
    double lhs = 0.0, rhs = 0.0;
    for (int c = 0; c < 3; ++c) {
        lhs += inner_product(gf, g, c, c);
        rhs += inner_product(f, gg, c, c);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("vrd_backward zero gradient and scalar reduction") {
    Xoshiro256pp rng(39);

    SUBCASE("zero upstream gradient zeroes everything") {
        const VrdParams p = random_params(rng, 2, 2);
        const Field s_i = random_field(rng, 5, 5, 2);
        auto [s_o, cache] = vrd_forward(s_i, p);
        const VrdGrads g = vrd_backward(Field(5, 5, 2), cache, s_i, p);
        CHECK(max_abs(g.d_s_p) == 0.0);
        CHECK(max_abs(g.d_s_i) == 0.0);
        CHECK(max_abs(g.d_b_o) == 0.0);
        CHECK(max_abs(g.d_q_o) == 0.0);
        CHECK(max_abs(g.d_b_i) == 0.0);
        CHECK(max_abs(g.d_q_i) == 0.0);
        CHECK(max_abs(g.d_r_b) == 0.0);
        CHECK(max_abs(g.d_r_q) == 0.0);
    }

    SUBCASE("single channel: dL/ds_p is the helmholtz solve of dL/ds_o") {
        const double lambda = 1.8;
        const VrdParams p = scalar_params(1.0, lambda);
        const Field s_i = random_field(rng, 6, 6, 1);
        auto [s_o, cache] = vrd_forward(s_i, p);
        const Field dl_dso = random_field(rng, 6, 6, 1);
        const VrdGrads g = vrd_backward(dl_dso, cache, s_i, p);
        const Field expect = helmholtz_solve(dl_dso, lambda);
        CHECK(max_abs_diff(g.d_s_p, expect) <= 1e-12 * std::max(1.0, max_abs(expect)));
    }
}

TEST_CASE("vrd_backward matches finite differences on every output") {
    Xoshiro256pp rng(40);
    const int h = 5, w = 4, n_in = 2, n_out = 3;
    const VrdParams base = random_params(rng, n_in, n_out);
    const Field s_i = random_field(rng, h, w, n_in);
    auto [s_o, cache] = vrd_forward(s_i, base);
    // Loss L = sum s_o^2 / 2, so dL/ds_o = s_o.
    const VrdGrads grads = vrd_backward(s_o, cache, s_i, base);
    const double h_fd = 1e-5;
    const double tol = 1e-4;

    auto loss_of_params = [&](const VrdParams& p, const Field& input) {
        auto [out, c] = vrd_forward(input, p);
        double acc = 0.0;
        for (double v : out.data) acc += v * v;
        return 0.5 * acc;
    };

    SUBCASE("log-space and cross-block parameter gradients") {
        struct Block {
            const Mat* grad;
            Mat VrdParams::* member;
            const char* name;
        };
        const Block blocks[] = {
            {&grads.d_r_b, &VrdParams::r_b, "r_b"},
            {&grads.d_r_q, &VrdParams::r_q, "r_q"},
            {&grads.d_q_i, &VrdParams::q_i, "q_i"},
            {&grads.d_b_i, &VrdParams::b_i, "b_i"},
        };
        for (const Block& block : blocks) {
            const Mat& g = *block.grad;
            for (int i = 0; i < g.rows; ++i) {
                for (int j = 0; j < g.cols; ++j) {
                    auto value = [&](double delta) {
                        VrdParams p = base;
                        (p.*block.member)(i, j) += delta;
                        return loss_of_params(p, s_i);
                    };
                    const double fd = (value(h_fd) - value(-h_fd)) / (2.0 * h_fd);
                    INFO(block.name, "[", i, ",", j, "]");
                    CHECK(g(i, j) == doctest::Approx(fd).epsilon(tol));
                }
            }
        }
    }

    SUBCASE("input gradient") {
        for (std::size_t k = 0; k < s_i.data.size(); k += 3) {
            auto value = [&](double delta) {
                Field input = s_i;
                input.data[k] += delta;
                return loss_of_params(base, input);
            };
            const double fd = (value(h_fd) - value(-h_fd)) / (2.0 * h_fd);
            CHECK(grads.d_s_i.data[k] == doctest::Approx(fd).epsilon(tol));
        }
    }

    SUBCASE("dL/ds_p against the solve map") {
        // L(s_p) = sum(vrd_solve(s_p))^2 / 2 at the cached solution.
        for (std::size_t k = 0; k < cache.s_p.data.size(); k += 2) {
            auto value = [&](double delta) {
                Field sp = cache.s_p;
                sp.data[k] += delta;
                const Field out = vrd_solve(sp, cache.schur, cache.b_o_inv);
                double acc = 0.0;
                for (double v : out.data) acc += v * v;
                return 0.5 * acc;
            };
            const double fd = (value(h_fd) - value(-h_fd)) / (2.0 * h_fd);
            CHECK(grads.d_s_p.data[k] == doctest::Approx(fd).epsilon(tol));
        }
    }

    SUBCASE("dL/dB^o and dL/dQ^o through the dense solver") {
        const Mat b_o = expm_sym(base.bbar());
        const Mat q_o = expm_sym(base.qbar());
        auto loss_of_blocks = [&](const Mat& bb, const Mat& qq) {
            const Field out = oracle::dense_solve(bb, qq, cache.s_p);
            double acc = 0.0;
            for (double v : out.data) acc += v * v;
            return 0.5 * acc;
        };
        for (int i = 0; i < n_out; ++i) {
            for (int j = 0; j < n_out; ++j) {
                auto value_b = [&](double delta) {
                    Mat bb = b_o;
                    bb(i, j) += delta;
                    return loss_of_blocks(bb, q_o);
                };
                auto value_q = [&](double delta) {
                    Mat qq = q_o;
                    qq(i, j) += delta;
                    return loss_of_blocks(b_o, qq);
                };
                const double fd_b = (value_b(h_fd) - value_b(-h_fd)) / (2.0 * h_fd);
                const double fd_q = (value_q(h_fd) - value_q(-h_fd)) / (2.0 * h_fd);
                CHECK(grads.d_b_o(i, j) == doctest::Approx(fd_b).epsilon(tol));
                CHECK(grads.d_q_o(i, j) == doctest::Approx(fd_q).epsilon(tol));
            }
        }
    }
}

TEST_CASE("energy closed forms and minimality") {
    SUBCASE("zero fields have zero energy") {
        Xoshiro256pp rng(41);
        const VrdParams p = random_params(rng, 2, 2);
        CHECK(energy(Field(4, 4, 2), Field(4, 4, 2), p) == 0.0);
    }

    SUBCASE("single cell, output only") {
        const double q = 1.7, b = 2.2, v = 0.8;
        Mat q_o(1, 1), b_o(1, 1);
        q_o(0, 0) = q;
        b_o(0, 0) = b;
        Field s_o(1, 1, 1);
        s_o.at(0, 0, 0) = v;
        const double e = energy_direct(Field(), s_o, b_o, q_o, Mat(1, 0), Mat(1, 0));
        CHECK(e == doctest::Approx(q * v * v + 4.0 * b * v * v).epsilon(1e-14));
    }
}

TEST_CASE("submodularity of the induced binary potential") {
    Xoshiro256pp rng(42);
    for (int t = 0; t < 1000; ++t) {
        const Mat r_b = random_mat(rng, 2, 2, 2.5);
        const Mat b_o = expm_sym(add(r_b, transpose(r_b)));
        CHECK(b_o(0, 0) + b_o(1, 1) - b_o(1, 0) - b_o(0, 1) >= -1e-12);
    }
}

TEST_CASE("green_function shape and symmetry") {
    const Field g = green_function(1e6, 21, 21);
    double total = 0.0;
    for (double v : g.data) total += std::fabs(v);
    CHECK(g.at(10, 10, 0) > 0.0);
    CHECK((total - g.at(10, 10, 0)) / total < 1e-5);

    const Field wide = green_function(1e-2, 31, 33);
    const double peak = wide.at(15, 16, 0);
    CHECK(peak == max_abs(wide));
    for (int i = 0; i < 31; ++i)
        for (int j = 0; j < 33; ++j) {
            CHECK(wide.at(i, j, 0) ==
                  doctest::Approx(wide.at(30 - i, j, 0)).epsilon(1e-12));
            CHECK(wide.at(i, j, 0) ==
                  doctest::Approx(wide.at(i, 32 - j, 0)).epsilon(1e-12));
        }
}

TEST_CASE("vrdp files roundtrip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vrd_core_test";
    fs::create_directories(dir);
    const std::string path = (dir / "p.vrdp").string();

    Xoshiro256pp rng(43);
    const VrdParams p = random_params(rng, 3, 2);
    write_vrdp(path, p);
    const VrdParams back = read_vrdp(path);
    CHECK(back.n_in == 3);
    CHECK(back.n_out == 2);
    CHECK(back.r_b.m == p.r_b.m);
    CHECK(back.r_q.m == p.r_q.m);
    CHECK(back.q_i.m == p.q_i.m);
    CHECK(back.b_i.m == p.b_i.m);
    fs::remove_all(dir);
}
