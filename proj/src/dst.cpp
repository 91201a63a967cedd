#include "vrd/dst.hpp"

#include "vrd/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace vrd {

namespace {

// The 1-D DST-I of length n is computed from a real FFT of its odd extension
// of length m = 2(n+1): with ext = (0, x_0..x_{n-1}, 0, -x_{n-1}..-x_0),
// spectrum bin k+1 is -2i * sum_j x_j sin(pi(j+1)(k+1)/(n+1)), so the
// unnormalized transform (twice the sine sum) is -Im(spec[k+1]). FFTW's
// complex engine handles awkward n+1 factorizations gracefully, which the
// real-odd r2r codelets do not.

// Planning is serialized; execution through the new-array interface is
// thread-safe. All execution buffers come from fftw_malloc, matching the
// alignment of the buffers the plans were created with.
fftw_plan r2c_plan_for(int m) {
    static std::mutex mu;
    static std::map<int, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    double* in = fftw_alloc_real(m);
    fftw_complex* out = fftw_alloc_complex(m / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(m, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw std::runtime_error("dst1: fftw plan creation failed");
    cache.emplace(m, plan);
    return plan;
}

struct LineScratch {
    double* ext = nullptr;
    fftw_complex* spec = nullptr;

    explicit LineScratch(int max_n) {
        const int m = 2 * (max_n + 1);
        ext = fftw_alloc_real(m);
        spec = fftw_alloc_complex(m / 2 + 1);
    }
    ~LineScratch() {
        fftw_free(ext);
        fftw_free(spec);
    }
    LineScratch(const LineScratch&) = delete;
    LineScratch& operator=(const LineScratch&) = delete;
};

// In-place unnormalized DST-I of one contiguous row.
void dst1_line(double* x, int n, fftw_plan plan, LineScratch& s) {
    const int m = 2 * (n + 1);
    s.ext[0] = 0.0;
    s.ext[n + 1] = 0.0;
    for (int j = 0; j < n; ++j) {
        const double v = x[j];
        s.ext[1 + j] = v;
        s.ext[m - 1 - j] = -v;
    }
    fftw_execute_dft_r2c(plan, s.ext, s.spec);
    for (int k = 0; k < n; ++k) {
        x[k] = -s.spec[k + 1][1];
    }
}

// ---------------------------------------------------------------------------
// Prime-length route. When p = n+1 is prime, the extension FFT of length
// 2(n+1) contains a length-p sub-transform that FFTW's generic plans handle
// poorly (for p = 257 it is several times slower than neighboring sizes).
// Rader's decomposition turns the length-p DFT into one cyclic convolution of
// length p-1, done here with two fixed FFTW complex transforms. The even and
// odd samples of the extension are packed into one complex sequence, so each
// line costs a single length-p DFT plus O(n) bookkeeping.

std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
    std::uint64_t result = 1 % mod;
    base %= mod;
    while (exp) {
        if (exp & 1) result = result * base % mod;
        base = base * base % mod;
        exp >>= 1;
    }
    return result;
}

bool is_prime(int v) {
    if (v < 2) return false;
    for (int d = 2; static_cast<long long>(d) * d <= v; ++d) {
        if (v % d == 0) return false;
    }
    return true;
}

int primitive_root(int p) {
    std::vector<int> factors;
    int q = p - 1;
    for (int d = 2; static_cast<long long>(d) * d <= q; ++d) {
        if (q % d == 0) {
            factors.push_back(d);
            while (q % d == 0) q /= d;
        }
    }
    if (q > 1) factors.push_back(q);
    for (int g = 2; g < p; ++g) {
        bool ok = true;
        for (int f : factors) {
            if (mod_pow(g, static_cast<std::uint64_t>(p - 1) / f, p) == 1) {
                ok = false;
                break;
            }
        }
        if (ok) return g;
    }
    throw std::logic_error("primitive_root: none found");
}

struct PrimePlan {
    int n = 0;  // line length
    int p = 0;  // n + 1, odd prime
    int q = 0;  // p - 1, convolution length
    std::vector<int> gather;   // a -> g^{-a} mod p
    std::vector<int> scatter;  // b -> g^{b} mod p
    std::vector<std::complex<double>> kernel;  // FFT(W^{g^c}) / q
    std::vector<double> tw_cos, tw_sin;        // exp(-2 pi i k / 2p), k = 0..n
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

const double kTwoPi = 6.283185307179586476925286766559;

std::unique_ptr<PrimePlan> build_prime_plan(int n) {
    auto plan = std::make_unique<PrimePlan>();
    const int p = n + 1;
    const int q = p - 1;
    plan->n = n;
    plan->p = p;
    plan->q = q;
    const int g = primitive_root(p);

    std::vector<int> g_pow(q);
    g_pow[0] = 1;
    for (int b = 1; b < q; ++b) {
        g_pow[b] = static_cast<int>(static_cast<std::uint64_t>(g_pow[b - 1]) * g % p);
    }
    plan->scatter = g_pow;
    plan->gather.resize(q);
    for (int a = 0; a < q; ++a) plan->gather[a] = g_pow[(q - a) % q];

    fftw_complex* buf_a = fftw_alloc_complex(q);
    fftw_complex* buf_b = fftw_alloc_complex(q);
    plan->fwd = fftw_plan_dft_1d(q, buf_a, buf_b, FFTW_FORWARD, FFTW_ESTIMATE);
    plan->inv = fftw_plan_dft_1d(q, buf_a, buf_b, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan->fwd || !plan->inv) {
        fftw_free(buf_a);
        fftw_free(buf_b);
        throw std::runtime_error("dst1: fftw plan creation failed");
    }

    // kernel = FFT(v) / q with v[c] = exp(-2 pi i g^c / p); the 1/q folds the
    // unnormalized inverse transform of the convolution.
    for (int c = 0; c < q; ++c) {
        const double angle = -kTwoPi * g_pow[c] / p;
        buf_a[c][0] = std::cos(angle);
        buf_a[c][1] = std::sin(angle);
    }
    fftw_execute_dft(plan->fwd, buf_a, buf_b);
    plan->kernel.resize(q);
    for (int c = 0; c < q; ++c) {
        plan->kernel[c] = std::complex<double>(buf_b[c][0], buf_b[c][1]) / static_cast<double>(q);
    }
    fftw_free(buf_a);
    fftw_free(buf_b);

    plan->tw_cos.resize(n + 1);
    plan->tw_sin.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double angle = kTwoPi * k / (2.0 * p);
        plan->tw_cos[k] = std::cos(angle);
        plan->tw_sin[k] = std::sin(angle);
    }
    return plan;
}

// Plans for lengths with prime n+1 >= 17; nullptr means use the r2c route.
const PrimePlan* prime_plan_for(int n) {
    if (n < 16 || !is_prime(n + 1)) return nullptr;
    static std::mutex mu;
    static std::map<int, std::unique_ptr<PrimePlan>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_prime_plan(n)).first;
    return it->second.get();
}

struct PrimeScratch {
    fftw_complex* z = nullptr;     // packed even/odd extension samples, length p
    fftw_complex* u = nullptr;     // permuted sequence, length q
    fftw_complex* uhat = nullptr;  // spectrum, length q
    fftw_complex* conv = nullptr;  // convolution result, length q
    fftw_complex* out = nullptr;   // DFT bins, length p

    explicit PrimeScratch(const PrimePlan& plan) {
        z = fftw_alloc_complex(plan.p);
        u = fftw_alloc_complex(plan.q);
        uhat = fftw_alloc_complex(plan.q);
        conv = fftw_alloc_complex(plan.q);
        out = fftw_alloc_complex(plan.p);
    }
    ~PrimeScratch() {
        fftw_free(z);
        fftw_free(u);
        fftw_free(uhat);
        fftw_free(conv);
        fftw_free(out);
    }
    PrimeScratch(const PrimeScratch&) = delete;
    PrimeScratch& operator=(const PrimeScratch&) = delete;
};

void dst1_line_prime(double* x, const PrimePlan& plan, PrimeScratch& s) {
    const int n = plan.n, p = plan.p, q = plan.q;
    const int m = 2 * p;
    // Odd extension ext (length m), packed as z[j] = ext[2j] + i ext[2j+1].
    const auto ext = [&](int t) -> double {
        if (t == 0 || t == p) return 0.0;
        return t < p ? x[t - 1] : -x[m - t - 1];
    };
    for (int j = 0; j < p; ++j) {
        s.z[j][0] = ext(2 * j);
        s.z[j][1] = ext(2 * j + 1);
    }

    // Rader: out = DFT_p(z).
    double sum_re = 0.0, sum_im = 0.0;
    for (int j = 0; j < p; ++j) {
        sum_re += s.z[j][0];
        sum_im += s.z[j][1];
    }
    for (int a = 0; a < q; ++a) {
        const int j = plan.gather[a];
        s.u[a][0] = s.z[j][0];
        s.u[a][1] = s.z[j][1];
    }
    fftw_execute_dft(plan.fwd, s.u, s.uhat);
    for (int c = 0; c < q; ++c) {
        const std::complex<double> prod =
            std::complex<double>(s.uhat[c][0], s.uhat[c][1]) * plan.kernel[c];
        s.uhat[c][0] = prod.real();
        s.uhat[c][1] = prod.imag();
    }
    fftw_execute_dft(plan.inv, s.uhat, s.conv);
    const double z0_re = s.z[0][0], z0_im = s.z[0][1];
    s.out[0][0] = sum_re;
    s.out[0][1] = sum_im;
    for (int b = 0; b < q; ++b) {
        const int k = plan.scatter[b];
        s.out[k][0] = z0_re + s.conv[b][0];
        s.out[k][1] = z0_im + s.conv[b][1];
    }

    // Unpack the two real sub-DFTs and apply the radix-2 twiddle; the line
    // value is -Im of extension bin k.
    for (int k = 1; k <= n; ++k) {
        const double* zk = s.out[k];
        const double* zpk = s.out[p - k];
        const double e_im = 0.5 * (zk[1] - zpk[1]);
        const double o_re = 0.5 * (zk[1] + zpk[1]);
        const double o_im = -0.5 * (zk[0] - zpk[0]);
        const double im_x = e_im + plan.tw_cos[k] * o_im - plan.tw_sin[k] * o_re;
        x[k - 1] = -im_x;
    }
}

}  // namespace

void dst1_rows(double* plane, int rows, int len) {
    if (const PrimePlan* prime = prime_plan_for(len)) {
#pragma omp parallel
        {
            PrimeScratch scratch(*prime);
#pragma omp for schedule(static)
            for (long long i = 0; i < rows; ++i) {
                dst1_line_prime(plane + i * len, *prime, scratch);
            }
        }
        return;
    }
    const fftw_plan plan = r2c_plan_for(2 * (len + 1));
#pragma omp parallel
    {
        LineScratch scratch(len);
#pragma omp for schedule(static)
        for (long long i = 0; i < rows; ++i) {
            dst1_line(plane + i * len, len, plan, scratch);
        }
    }
}

void dst1_transpose(const double* src, int h, int w, double* dst) {
    constexpr int kBlock = 32;
    const int row_blocks = (h + kBlock - 1) / kBlock;
    const int col_blocks = (w + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(row_blocks) * col_blocks; ++b) {
        const int bi = static_cast<int>(b / col_blocks) * kBlock;
        const int bj = static_cast<int>(b % col_blocks) * kBlock;
        const int ei = std::min(bi + kBlock, h);
        const int ej = std::min(bj + kBlock, w);
        for (int i = bi; i < ei; ++i) {
            for (int j = bj; j < ej; ++j) {
                dst[static_cast<long long>(j) * h + i] = src[static_cast<long long>(i) * w + j];
            }
        }
    }
}

void dst1_raw_plane(double* plane, int h, int w) {
    dst1_rows(plane, h, w);
    std::vector<double> flipped(static_cast<std::size_t>(h) * w);
    dst1_transpose(plane, h, w, flipped.data());
    dst1_rows(flipped.data(), w, h);
    dst1_transpose(flipped.data(), w, h, plane);
}

Field dst1_2d(const Field& f, DstDirection direction) {
    require_valid(f, "dst1_2d");
    require_finite(f, "dst1_2d");
    const int h = f.height, w = f.width, c = f.channels;
    // Raw separable pass is 4x the forward kernel.
    const double norm = direction == DstDirection::forward
                            ? 0.25
                            : 1.0 / (static_cast<double>(h + 1) * (w + 1));
    Field out(h, w, c);
    std::vector<double> plane(f.pixels());
    for (int ch = 0; ch < c; ++ch) {
        gather_channel(f, ch, plane.data());
        dst1_raw_plane(plane.data(), h, w);
        const long long n = static_cast<long long>(f.pixels());
#pragma omp parallel for schedule(static)
        for (long long px = 0; px < n; ++px) plane[px] *= norm;
        scatter_channel(plane.data(), out, ch);
    }
    return out;
}

}  // namespace vrd
