#pragma once

#include <vector>

namespace vrd {

/** Small dense row-major matrix. Channel-count sized (n <= 64 in practice),
 *  so everything below is plain O(n^3) with no blocking. */
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> m;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), m(static_cast<std::size_t>(r) * c, 0.0) {}

    static Mat identity(int n) {
        Mat a(n, n);
        for (int i = 0; i < n; ++i) a(i, i) = 1.0;
        return a;
    }

    double& operator()(int i, int j) { return m[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return m[static_cast<std::size_t>(i) * cols + j]; }

    bool square() const { return rows == cols; }
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);
double max_abs(const Mat& a);
double frobenius(const Mat& a);

/** Eigendecomposition of a symmetric matrix: columns of `vectors` are
 *  orthonormal eigenvectors, `values` sorted descending. */
struct SymEig {
    Mat vectors;
    std::vector<double> values;
};

// Cyclic Jacobi; throws after 100 sweeps without convergence.
SymEig sym_eig(const Mat& a);

// Lower-triangular L with a = L L^T; throws "not positive definite".
Mat chol_factor(const Mat& a);

// Inverse of an SPD matrix via Cholesky.
Mat chol_inverse(const Mat& a);

/** a = v u v^T with v orthonormal and u upper triangular; diag(u) holds the
 *  eigenvalues in descending order. */
struct SchurForm {
    Mat v;
    Mat u;
};

/** Real Schur factorization of a = (B^o)^-1 Q^o, with b_chol the lower
 *  Cholesky factor of B^o. Such a matrix is similar to an SPD matrix, so the
 *  factorization is obtained from a symmetric eigenproblem plus a QR of the
 *  eigenvector basis rather than a Hessenberg-QR iteration. */
SchurForm schur_real(const Mat& a, const Mat& b_chol);

// exp of a symmetric matrix via eigendecomposition; output SPD.
Mat expm_sym(const Mat& abar);

/** Loss derivative through the symmetric matrix exponential: given
 *  dl_da = dL/dA at A = exp(abar), returns dL/dabar =
 *  U ((U^T dl_da U) .* Phi) U^T with Phi_ij the divided difference of exp
 *  over the eigenvalues (its i=j limit e^lambda_i is taken analytically). */
Mat expm_grad(const Mat& abar, const Mat& dl_da);

// Chain rule through abar = r + r^T: dL/dr = dL/dabar + (dL/dabar)^T.
Mat symmetrize_param_grad(const Mat& dl_dabar);

}  // namespace vrd
