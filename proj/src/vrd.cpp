#include "vrd/vrd.hpp"

#include "vrd/dst.hpp"
#include "vrd/kernels.hpp"
#include "vrd/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace vrd {

namespace {

const double kPi = 3.14159265358979323846;

}  // namespace

VrdParams init_params(int n_in, int n_out, std::uint64_t seed) {
    if (n_in < 0 || n_out <= 0) throw std::invalid_argument("init_params: bad channel counts");
    VrdParams p;
    p.n_in = n_in;
    p.n_out = n_out;
    p.r_b = Mat(n_out, n_out);
    p.r_q = Mat(n_out, n_out);
    p.q_i = Mat(n_out, n_in);
    p.b_i = Mat(n_out, n_in);
    Xoshiro256pp rng(seed);
    for (double& v : p.q_i.m) v = rng.uniform(-0.1, 0.1);
    return p;
}

Field assemble_sp(const Field& s_i, const VrdParams& params) {
    require_valid(s_i, "assemble_sp");
    require_finite(s_i, "assemble_sp");
    if (s_i.channels != params.n_in) {
        throw ShapeError("assemble_sp: input channel count does not match parameters");
    }
    Field lap, s_p;
    laplacian_and_matvec(s_i, params.q_i, scale(params.b_i, -1.0), lap, s_p);
    return s_p;
}

void helmholtz_solve_plane(double* plane, int h, int w, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("helmholtz_solve: lambda must be positive");
    // Forward transform, spectral divide, inverse transform, with the divide
    // done in the transposed intermediate layout so the two middle transposes
    // cancel. The divisor folds both unnormalized transforms.
    const double norm = 4.0 * (h + 1) * (w + 1);
    std::vector<double> mu_h(h), mu_w(w);
    for (int k = 0; k < h; ++k) mu_h[k] = 2.0 * std::cos(kPi * (k + 1) / (h + 1));
    for (int l = 0; l < w; ++l) mu_w[l] = 2.0 * std::cos(kPi * (l + 1) / (w + 1));

    dst1_rows(plane, h, w);
    std::vector<double> flipped(static_cast<std::size_t>(h) * w);
    dst1_transpose(plane, h, w, flipped.data());
    dst1_rows(flipped.data(), w, h);
#pragma omp parallel for schedule(static)
    for (long long l = 0; l < w; ++l) {
        double* col = flipped.data() + l * h;
        const double ml = mu_w[l] - 4.0 - lambda;
        for (int k = 0; k < h; ++k) {
            col[k] /= (mu_h[k] + ml) * norm;
        }
    }
    dst1_rows(flipped.data(), w, h);
    dst1_transpose(flipped.data(), w, h, plane);
    dst1_rows(plane, h, w);
}

Field helmholtz_solve(const Field& f, double lambda) {
    require_valid(f, "helmholtz_solve");
    require_finite(f, "helmholtz_solve");
    if (f.channels != 1) throw ShapeError("helmholtz_solve: single-channel field required");
    Field out = f;
    helmholtz_solve_plane(out.data.data(), out.height, out.width, lambda);
    return out;
}

SolveOps prepare_solve(const Mat& b_o, const Mat& q_o) {
    SolveOps ops;
    const Mat b_chol = chol_factor(b_o);
    ops.b_o_inv = chol_inverse(b_o);
    ops.schur = schur_real(matmul(ops.b_o_inv, q_o), b_chol);
    return ops;
}

Field vrd_solve(const Field& s_p, const SchurForm& schur, const Mat& b_o_inv) {
    const int n_out = schur.u.rows;
    if (s_p.channels != n_out) throw ShapeError("vrd_solve: channel count mismatch");
    for (int k = 0; k < n_out; ++k) {
        if (!(schur.u(k, k) > 0.0)) {
            throw std::runtime_error("vrd_solve: nonpositive diagonal in triangular factor");
        }
    }
    const int h = s_p.height, w = s_p.width;
    const std::size_t pixels = s_p.pixels();
    // r = V^T (B^o)^-1 s_p with the combined matrix, stored one plane per
    // channel so each backsubstitution step streams only what it uses.
    const Mat t = matmul(transpose(schur.v), b_o_inv);
    std::vector<double> r(pixels * n_out);
    interleaved_to_planar(t, s_p, r.data());
    std::vector<double> z(pixels * n_out);
    for (int k = n_out - 1; k >= 0; --k) {
        double* z_k = z.data() + static_cast<std::size_t>(k) * pixels;
        planar_backsub_rhs(r.data(), schur.u, k, z.data(), z_k, pixels);
        helmholtz_solve_plane(z_k, h, w, schur.u(k, k));
    }
    return planar_to_interleaved(schur.v, z.data(), h, w);
}

std::pair<Field, VrdCache> vrd_forward(const Field& s_i, const VrdParams& params) {
    require_valid(s_i, "vrd_forward");
    require_finite(s_i, "vrd_forward");
    if (s_i.channels != params.n_in) {
        throw ShapeError("vrd_forward: input channel count does not match parameters");
    }
    const Mat b_o = expm_sym(params.bbar());
    const Mat q_o = expm_sym(params.qbar());
    SolveOps ops = prepare_solve(b_o, q_o);

    VrdCache cache;
    laplacian_and_matvec(s_i, params.q_i, scale(params.b_i, -1.0), cache.lap_s_i, cache.s_p);
    cache.s_o = vrd_solve(cache.s_p, ops.schur, ops.b_o_inv);
    cache.lap_s_o = laplacian_apply(cache.s_o);
    cache.schur = std::move(ops.schur);
    cache.b_o_inv = std::move(ops.b_o_inv);
    require_finite(cache.s_o, "vrd_forward output");
    return {cache.s_o, std::move(cache)};
}

VrdGrads vrd_backward(const Field& dl_dso, const VrdCache& cache,
                      const Field& s_i, const VrdParams& params) {
    require_valid(dl_dso, "vrd_backward");
    require_finite(dl_dso, "vrd_backward");
    if (dl_dso.channels != params.n_out) {
        throw ShapeError("vrd_backward: gradient channel count does not match parameters");
    }

    VrdGrads g;
    // Same PDE system as inference (the solve operator is self-adjoint).
    g.d_s_p = vrd_solve(dl_dso, cache.schur, cache.b_o_inv);

    g.d_b_o = scale(gram(g.d_s_p, cache.lap_s_o), -1.0);
    g.d_q_o = gram(g.d_s_p, cache.s_o);
    g.d_q_i = gram(g.d_s_p, s_i);
    g.d_b_i = scale(gram(g.d_s_p, cache.lap_s_i), -1.0);

    const Field lap_g = laplacian_apply(g.d_s_p);
    Mat q_i_t = transpose(params.q_i);
    Mat neg_b_i_t = scale(transpose(params.b_i), -1.0);
    g.d_s_i = channel_matvec(q_i_t, g.d_s_p, &neg_b_i_t, &lap_g);

    g.d_r_b = symmetrize_param_grad(expm_grad(params.bbar(), g.d_b_o));
    g.d_r_q = symmetrize_param_grad(expm_grad(params.qbar(), g.d_q_o));
    return g;
}

double energy_direct(const Field& s_i, const Field& s_o,
                     const Mat& b_o, const Mat& q_o,
                     const Mat& b_i, const Mat& q_i) {
    const int n_out = s_o.channels;
    const int n_in = q_i.cols;
    if (n_in > 0 && (!s_i.same_grid(s_o) || s_i.channels != n_in)) {
        throw ShapeError("energy: input field shape mismatch");
    }
    if (q_o.rows != n_out || b_o.rows != n_out || q_i.rows != n_out || b_i.rows != n_out) {
        throw ShapeError("energy: parameter shapes do not match field channels");
    }
    const int h = s_o.height, w = s_o.width;

    // Quadratic forms for one lattice site / edge difference.
    const auto quad = [&](const double* o, const double* in) {
        double e = 0.0;
        for (int a = 0; a < n_out; ++a) {
            double qrow = 0.0;
            for (int b = 0; b < n_out; ++b) qrow += q_o(a, b) * o[b];
            e += o[a] * qrow;
            if (n_in > 0) {
                double cross = 0.0;
                for (int b = 0; b < n_in; ++b) cross += q_i(a, b) * in[b];
                e += 2.0 * o[a] * cross;
            }
        }
        return e;
    };
    const auto edge = [&](const double* o, const double* in) {
        double e = 0.0;
        for (int a = 0; a < n_out; ++a) {
            double brow = 0.0;
            for (int b = 0; b < n_out; ++b) brow += b_o(a, b) * o[b];
            e += o[a] * brow;
            if (n_in > 0) {
                double cross = 0.0;
                for (int b = 0; b < n_in; ++b) cross += b_i(a, b) * in[b];
                e += 2.0 * o[a] * cross;
            }
        }
        return e;
    };

    std::vector<double> row_sum(h, 0.0);
#pragma omp parallel
    {
        std::vector<double> dout(n_out), din(std::max(n_in, 1));
#pragma omp for schedule(static)
        for (long long i = 0; i < h; ++i) {
            double acc = 0.0;
            for (int j = 0; j < w; ++j) {
                const double* o = &s_o.data[(static_cast<std::size_t>(i) * w + j) * n_out];
                const double* in = n_in > 0
                                       ? &s_i.data[(static_cast<std::size_t>(i) * w + j) * n_in]
                                       : nullptr;
                acc += quad(o, in);
                // Interior edges to the right and down neighbors; boundary
                // edges to the zero exterior on each out-of-range side.
                const auto diff_edge = [&](int i2, int j2) {
                    const double* o2 = &s_o.data[(static_cast<std::size_t>(i2) * w + j2) * n_out];
                    for (int a = 0; a < n_out; ++a) dout[a] = o[a] - o2[a];
                    if (n_in > 0) {
                        const double* in2 =
                            &s_i.data[(static_cast<std::size_t>(i2) * w + j2) * n_in];
                        for (int a = 0; a < n_in; ++a) din[a] = in[a] - in2[a];
                    }
                    acc += edge(dout.data(), din.data());
                };
                if (j + 1 < w) diff_edge(i, j + 1);
                if (i + 1 < h) diff_edge(static_cast<int>(i) + 1, j);
                const double* in_self = n_in > 0 ? in : din.data();
                if (i == 0) acc += edge(o, in_self);
                if (i == h - 1) acc += edge(o, in_self);
                if (j == 0) acc += edge(o, in_self);
                if (j == w - 1) acc += edge(o, in_self);
            }
            row_sum[i] = acc;
        }
    }
    double total = 0.0;
    for (double v : row_sum) total += v;
    return total;
}

double energy(const Field& s_i, const Field& s_o, const VrdParams& params) {
    require_valid(s_o, "energy");
    require_finite(s_o, "energy");
    if (params.n_in > 0) {
        require_valid(s_i, "energy");
        require_finite(s_i, "energy");
    }
    if (s_o.channels != params.n_out) throw ShapeError("energy: output channel count mismatch");
    return energy_direct(s_i, s_o, expm_sym(params.bbar()), expm_sym(params.qbar()),
                         params.b_i, params.q_i);
}

Field green_function(double lambda, int height, int width) {
    if (!(lambda > 0.0)) throw std::invalid_argument("green_function: lambda must be positive");
    if (height <= 0 || width <= 0) throw std::invalid_argument("green_function: bad size");
    Field impulse(height, width, 1);
    impulse.at((height - 1) / 2, (width - 1) / 2, 0) = 1.0;
    Field g = helmholtz_solve(impulse, lambda);
    for (double& v : g.data) v = -v;
    return g;
}

}  // namespace vrd
