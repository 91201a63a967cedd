#include "vrd/mat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vrd {

namespace {

void require_square(const Mat& a, const char* what) {
    if (!a.square() || a.rows == 0) {
        throw std::invalid_argument(std::string(what) + ": square matrix required");
    }
}

void require_finite(const Mat& a, const char* what) {
    for (double v : a.m) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": matrix contains non-finite values");
        }
    }
}

// Symmetry within 1e-10 * max|a|; returns the symmetrized matrix.
Mat require_symmetric(const Mat& a, const char* what, double tol_scale = 1e-10) {
    require_square(a, what);
    const double scale = max_abs(a);
    double asym = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = i + 1; j < a.cols; ++j)
            asym = std::max(asym, std::fabs(a(i, j) - a(j, i)));
    if (asym > tol_scale * std::max(scale, 1e-300)) {
        throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
    }
    Mat s(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
            s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

double off_diag_norm(const Mat& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Householder QR with diag(R) >= 0. a is n x n, nonsingular in our use.
void qr_positive(const Mat& a, Mat& q, Mat& r) {
    const int n = a.rows;
    r = a;
    q = Mat::identity(n);
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < n; ++i) norm += r(i, k) * r(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = r(k, k) > 0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (int i = k; i < n; ++i) {
            v[i] = r(i, k) - (i == k ? alpha : 0.0);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // r <- (I - 2 v v^T / v^T v) r, q <- q (I - 2 v v^T / v^T v)
        for (int j = k; j < n; ++j) {
            double dot = 0.0;
            for (int i = k; i < n; ++i) dot += v[i] * r(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (int i = k; i < n; ++i) r(i, j) -= f * v[i];
        }
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int j = k; j < n; ++j) dot += q(i, j) * v[j];
            const double f = 2.0 * dot / vnorm2;
            for (int j = k; j < n; ++j) q(i, j) -= f * v[j];
        }
    }
    // Fix signs so diag(R) > 0 and zero the subdiagonal storage exactly.
    for (int k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) {
            for (int j = k; j < n; ++j) r(k, j) = -r(k, j);
            for (int i = 0; i < n; ++i) q(i, k) = -q(i, k);
        }
        for (int i = k + 1; i < n; ++i) r(i, k) = 0.0;
    }
}

}  // namespace

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
            t(j, i) = a(i, j);
    return t;
}

Mat add(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("add: shape mismatch");
    Mat c(a.rows, a.cols);
    for (std::size_t k = 0; k < a.m.size(); ++k) c.m[k] = a.m[k] + b.m[k];
    return c;
}

Mat scale(const Mat& a, double s) {
    Mat c = a;
    for (double& v : c.m) v *= s;
    return c;
}

double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.m) m = std::max(m, std::fabs(v));
    return m;
}

double frobenius(const Mat& a) {
    return std::sqrt(std::inner_product(a.m.begin(), a.m.end(), a.m.begin(), 0.0));
}

SymEig sym_eig(const Mat& a_in) {
    require_finite(a_in, "sym_eig");
    Mat a = require_symmetric(a_in, "sym_eig");
    const int n = a.rows;
    Mat v = Mat::identity(n);
    const double target = 1e-13 * std::max(frobenius(a), 1e-300);

    int sweep = 0;
    while (off_diag_norm(a) > target) {
        if (++sweep > 100) throw std::runtime_error("sym_eig: Jacobi did not converge in 100 sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

Mat chol_factor(const Mat& a_in) {
    Mat a = require_symmetric(a_in, "chol_factor");
    const int n = a.rows;
    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0) throw std::runtime_error("chol_factor: not positive definite");
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Mat chol_inverse(const Mat& a) {
    const Mat l = chol_factor(a);
    const int n = l.rows;
    // Invert the lower-triangular factor.
    Mat linv(n, n);
    for (int j = 0; j < n; ++j) {
        linv(j, j) = 1.0 / l(j, j);
        for (int i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s += l(i, k) * linv(k, j);
            linv(i, j) = -s / l(i, i);
        }
    }
    // a^-1 = L^-T L^-1, filled symmetrically.
    Mat inv(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
            inv(i, j) = s;
            inv(j, i) = s;
        }
    }
    return inv;
}

SchurForm schur_real(const Mat& a, const Mat& b_chol) {
    require_square(a, "schur_real");
    require_finite(a, "schur_real");
    const int n = a.rows;
    const Mat& c = b_chol;
    if (!c.square() || c.rows != n) throw std::invalid_argument("schur_real: b_chol shape mismatch");

    // S = C^T a C^-T is the SPD matrix similar to a (it equals C^-1 Q^o C^-T).
    Mat ct_a = matmul(transpose(c), a);
    Mat s(n, n);
    for (int i = 0; i < n; ++i) {
        // Solve s_row * C^T = ct_a_row, i.e. C s_row^T = ct_a_row^T.
        for (int j = 0; j < n; ++j) {
            double acc = ct_a(i, j);
            for (int k = 0; k < j; ++k) acc -= c(j, k) * s(i, k);
            s(i, j) = acc / c(j, j);
        }
    }
    {
        const double scale = std::max(max_abs(s), 1e-300);
        double asym = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                asym = std::max(asym, std::fabs(s(i, j) - s(j, i)));
        if (asym > 1e-6 * scale) {
            throw std::runtime_error("schur_real: parameters not positive definite");
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double m = 0.5 * (s(i, j) + s(j, i));
                s(i, j) = m;
                s(j, i) = m;
            }
    }

    const SymEig eig = sym_eig(s);
    for (double lambda : eig.values) {
        if (!(lambda > 0.0)) throw std::runtime_error("schur_real: parameters not positive definite");
    }

    // Eigenvectors of a: X = C^-T W, ordered descending by eigenvalue.
    Mat x(n, n);
    for (int j = 0; j < n; ++j) {
        // Solve C^T x_col = w_col by back substitution.
        for (int i = n - 1; i >= 0; --i) {
            double acc = eig.vectors(i, j);
            for (int k = i + 1; k < n; ++k) acc -= c(k, i) * x(k, j);
            x(i, j) = acc / c(i, i);
        }
    }

    SchurForm out;
    Mat r;
    qr_positive(x, out.v, r);

    // U = R Lambda R^-1: solve U R = (R Lambda) row by row; strictly lower
    // entries are zero by construction and stored as exact zeros.
    Mat rl(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) rl(i, j) = r(i, j) * eig.values[j];
    out.u = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double acc = rl(i, j);
            for (int k = i; k < j; ++k) acc -= out.u(i, k) * r(k, j);
            out.u(i, j) = acc / r(j, j);
        }
    }
    return out;
}

Mat expm_sym(const Mat& abar) {
    const SymEig eig = sym_eig(abar);
    const int n = abar.rows;
    Mat out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                s += eig.vectors(i, k) * std::exp(eig.values[k]) * eig.vectors(j, k);
            }
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

Mat expm_grad(const Mat& abar, const Mat& dl_da) {
    const SymEig eig = sym_eig(abar);
    const int n = abar.rows;
    if (dl_da.rows != n || dl_da.cols != n) {
        throw std::invalid_argument("expm_grad: gradient shape mismatch");
    }
    const Mat& u = eig.vectors;
    Mat g = matmul(matmul(transpose(u), dl_da), u);
    // Divided difference of exp, evaluated in the cancellation-free form
    // e^((li+lj)/2) * sinh(d/2)/(d/2); the d -> 0 limit is the series.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double li = eig.values[i], lj = eig.values[j];
            const double x = 0.5 * (li - lj);
            double sinhc;
            if (std::fabs(x) < 1e-4) {
                const double x2 = x * x;
                sinhc = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
            } else {
                sinhc = std::sinh(x) / x;
            }
            g(i, j) *= std::exp(0.5 * (li + lj)) * sinhc;
        }
    }
    return matmul(matmul(u, g), transpose(u));
}

Mat symmetrize_param_grad(const Mat& dl_dabar) {
    require_square(dl_dabar, "symmetrize_param_grad");
    return add(dl_dabar, transpose(dl_dabar));
}

}  // namespace vrd
