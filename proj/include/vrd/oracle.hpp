#pragma once

#include "vrd/field.hpp"
#include "vrd/mat.hpp"
#include "vrd/vrd.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

// Brute-force ground truth, deliberately sharing no code with the fast path:
// the stationarity system assembled as one dense matrix and solved by Gaussian
// elimination, finite-difference gradients, and energy-descent checks.
namespace vrd::oracle {

/** Dense operator mapping a flattened n_out-channel field (channel innermost,
 *  matching Field layout) to B^o lap s - Q^o s. */
struct DenseSystem {
    int height = 0;
    int width = 0;
    int n_out = 0;
    int dim = 0;
    std::vector<double> matrix;  // dim x dim, row-major

    int index(int c, int i, int j) const { return (i * width + j) * n_out + c; }
    double& entry(int r, int c) { return matrix[static_cast<std::size_t>(r) * dim + c]; }
    double entry(int r, int c) const { return matrix[static_cast<std::size_t>(r) * dim + c]; }
};

// Guard: n_out * height * width must stay <= 5000.
DenseSystem dense_assemble(const Mat& b_o, const Mat& q_o, int height, int width);
DenseSystem dense_assemble(const VrdParams& params, int height, int width);

// Gaussian elimination with partial pivoting; throws on a singular system.
Field dense_solve(const Mat& b_o, const Mat& q_o, const Field& s_p);
Field dense_solve_oracle(const VrdParams& params, const Field& s_p);

// General matrix exponential by scaling-and-squaring Taylor series
// (4 squarings, 20 terms); valid for non-symmetric perturbed inputs.
Mat expm_taylor(const Mat& a);

/** Max over coordinates of |fd - analytic| / max(|fd|, |analytic|, 1e-8),
 *  with fd the central difference of loss_fn at theta with step h. */
double finite_diff_check(const std::function<double(const std::vector<double>&)>& loss_fn,
                         const std::vector<double>& analytic_grad,
                         std::vector<double> theta, double h);

struct MinimizerReport {
    double worst_margin = 0.0;  // min over trials of E(s*+eps v) - E(s*)
    bool pass = false;
};

MinimizerReport minimizer_check(const VrdParams& params, const Field& s_i,
                                int trials, std::span<const double> epsilons,
                                std::uint64_t seed = 123);

// Full self-check battery; one PASS/FAIL line per invariant. Returns 0 iff
// everything passed.
int selftest(std::ostream& out);

}  // namespace vrd::oracle
