#pragma once

#include "vrd/field.hpp"
#include "vrd/mat.hpp"

#include <cstdint>
#include <utility>

namespace vrd {

/** Parameters of one reaction-diffusion layer mapping n_in input channels to
 *  n_out output channels. The diagonal blocks are stored in log space through
 *  free matrices r_b, r_q with B^o = exp(r_b + r_b^T), Q^o = exp(r_q + r_q^T),
 *  which keeps them positive definite for any parameter value. The cross
 *  blocks q_i, b_i (n_out x n_in) are unconstrained. */
struct VrdParams {
    int n_in = 0;
    int n_out = 0;
    Mat r_b;  // n_out x n_out
    Mat r_q;  // n_out x n_out
    Mat q_i;  // n_out x n_in
    Mat b_i;  // n_out x n_in

    Mat bbar() const { return add(r_b, transpose(r_b)); }
    Mat qbar() const { return add(r_q, transpose(r_q)); }
};

// r_b = r_q = 0 (identity diffusion/reaction at init), q_i ~ U(-0.1, 0.1),
// b_i = 0.
VrdParams init_params(int n_in, int n_out, std::uint64_t seed);

/** Forward-pass quantities retained for the backward pass. lap_s_o/lap_s_i
 *  are stored once at forward time; backward never recomputes them. */
struct VrdCache {
    Field s_o;
    Field s_p;
    Field lap_s_o;
    Field lap_s_i;
    SchurForm schur;
    Mat b_o_inv;
};

struct VrdGrads {
    Field d_s_p;
    Field d_s_i;
    Mat d_b_o;
    Mat d_q_o;
    Mat d_b_i;
    Mat d_q_i;
    Mat d_r_b;
    Mat d_r_q;
};

// s_p(x) = Q^i s_i(x) - B^i (lap s_i)(x).
Field assemble_sp(const Field& s_i, const VrdParams& params);

// Solves lap z - lambda z = f on the Dirichlet lattice, single channel,
// via the diagonalizing sine transform. lambda must be positive.
Field helmholtz_solve(const Field& f, double lambda);

// In-place variant on a contiguous h*w plane.
void helmholtz_solve_plane(double* plane, int h, int w, double lambda);

// Factors shared by every solve with the same B^o, Q^o.
struct SolveOps {
    SchurForm schur;
    Mat b_o_inv;
};
SolveOps prepare_solve(const Mat& b_o, const Mat& q_o);

/** Solves B^o lap s_o - Q^o s_o = s_p exactly: change of basis z = V^T s_o,
 *  then one scalar Helmholtz solve per channel, last to first, feeding each
 *  solved channel into the right-hand sides above it. */
Field vrd_solve(const Field& s_p, const SchurForm& schur, const Mat& b_o_inv);

// Full inference: parameter exponentials, Schur factors, source assembly,
// solve. Returns the output field and the cache for vrd_backward.
std::pair<Field, VrdCache> vrd_forward(const Field& s_i, const VrdParams& params);

/** Backpropagation through the layer. dL/ds_p solves the same PDE system as
 *  the forward pass applied to dL/ds_o (the solve operator is self-adjoint);
 *  every parameter gradient is an inner product of dL/ds_p with a cached
 *  field, and the log-space gradients chain through the exponential map. */
VrdGrads vrd_backward(const Field& dl_dso, const VrdCache& cache,
                      const Field& s_i, const VrdParams& params);

/** Discrete energy over the 4-connected lattice with zero Dirichlet exterior
 *  (boundary edges included): sum_x s^T Q s + sum_edges |s(x')-s(x)|^2_B with
 *  s the channel concatenation of s_o and s_i, cross terms 2 s_o^T Q^i s_i,
 *  and zero input-input blocks. vrd_forward's output is its unique minimizer
 *  over s_o. */
double energy(const Field& s_i, const Field& s_o, const VrdParams& params);
double energy_direct(const Field& s_i, const Field& s_o,
                     const Mat& b_o, const Mat& q_o,
                     const Mat& b_i, const Mat& q_i);

// Response to a centered unit impulse, sign-flipped so the peak is positive.
Field green_function(double lambda, int height, int width);

}  // namespace vrd
