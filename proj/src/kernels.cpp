#include "vrd/kernels.hpp"

#include <stdexcept>

namespace vrd {

void laplacian_apply_into(const Field& f, Field& out) {
    const int h = f.height, w = f.width, c = f.channels;
    if (!out.same_shape(f)) out = Field(h, w, c);
    const double* src = f.data.data();
    double* dst = out.data.data();
    const long long row_stride = static_cast<long long>(w) * c;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        const double* up = i > 0 ? src + (i - 1) * row_stride : nullptr;
        const double* down = i < h - 1 ? src + (i + 1) * row_stride : nullptr;
        const double* mid = src + i * row_stride;
        double* o = dst + i * row_stride;
        for (int j = 0; j < w; ++j) {
            const long long base = static_cast<long long>(j) * c;
            for (int k = 0; k < c; ++k) {
                double acc = -4.0 * mid[base + k];
                if (up) acc += up[base + k];
                if (down) acc += down[base + k];
                if (j > 0) acc += mid[base - c + k];
                if (j < w - 1) acc += mid[base + c + k];
                o[base + k] = acc;
            }
        }
    }
}

Field laplacian_apply(const Field& f) {
    require_valid(f, "laplacian_apply");
    require_finite(f, "laplacian_apply");
    Field out(f.height, f.width, f.channels);
    laplacian_apply_into(f, out);
    return out;
}

Field channel_matvec(const Mat& a, const Field& f, const Mat* b, const Field* g) {
    if (a.cols != f.channels) throw ShapeError("channel_matvec: channel count mismatch");
    if (b && (!g || b->cols != g->channels || b->rows != a.rows || !g->same_grid(f))) {
        throw ShapeError("channel_matvec: second operand mismatch");
    }
    const int h = f.height, w = f.width;
    const int ci = f.channels, co = a.rows;
    const int cg = b ? g->channels : 0;
    Field out(h, w, co);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double* fx = &f.data[(static_cast<std::size_t>(i) * w + j) * ci];
            double* ox = &out.data[(static_cast<std::size_t>(i) * w + j) * co];
            for (int r = 0; r < co; ++r) {
                double acc = 0.0;
                for (int k = 0; k < ci; ++k) acc += a(r, k) * fx[k];
                ox[r] = acc;
            }
            if (b) {
                const double* gx = &g->data[(static_cast<std::size_t>(i) * w + j) * cg];
                for (int r = 0; r < co; ++r) {
                    double acc = 0.0;
                    for (int k = 0; k < cg; ++k) acc += (*b)(r, k) * gx[k];
                    ox[r] += acc;
                }
            }
        }
    }
    return out;
}

// Reductions accumulate one partial per row and combine the partials in row
// order, so the summation order is independent of the thread count.
double inner_product(const Field& f, const Field& g, int channel_f, int channel_g) {
    if (!f.same_grid(g)) throw ShapeError("inner_product: grid shape mismatch");
    if (channel_f < 0 || channel_f >= f.channels || channel_g < 0 || channel_g >= g.channels) {
        throw ShapeError("inner_product: channel index out of range");
    }
    const int h = f.height, w = f.width;
    std::vector<double> row_sum(h, 0.0);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        double acc = 0.0;
        for (int j = 0; j < w; ++j) {
            acc += f.at(i, j, channel_f) * g.at(i, j, channel_g);
        }
        row_sum[i] = acc;
    }
    double total = 0.0;
    for (double v : row_sum) total += v;
    return total;
}

Mat gram(const Field& f, const Field& g) {
    if (!f.same_grid(g)) throw ShapeError("gram: grid shape mismatch");
    const int h = f.height, w = f.width;
    const int cf = f.channels, cg = g.channels;
    const std::size_t block = static_cast<std::size_t>(cf) * cg;
    std::vector<double> partial(static_cast<std::size_t>(h) * block, 0.0);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        double* p = &partial[i * block];
        for (int j = 0; j < w; ++j) {
            const double* fx = &f.data[(static_cast<std::size_t>(i) * w + j) * cf];
            const double* gx = &g.data[(static_cast<std::size_t>(i) * w + j) * cg];
            for (int a = 0; a < cf; ++a) {
                const double fa = fx[a];
                for (int b = 0; b < cg; ++b) p[a * cg + b] += fa * gx[b];
            }
        }
    }
    Mat out(cf, cg);
    for (int i = 0; i < h; ++i) {
        const double* p = &partial[static_cast<std::size_t>(i) * block];
        for (std::size_t k = 0; k < block; ++k) out.m[k] += p[k];
    }
    return out;
}

std::vector<double> channel_sums(const Field& f) {
    const int h = f.height, w = f.width, c = f.channels;
    std::vector<double> partial(static_cast<std::size_t>(h) * c, 0.0);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        double* p = &partial[i * c];
        for (int j = 0; j < w; ++j) {
            const double* fx = &f.data[(static_cast<std::size_t>(i) * w + j) * c];
            for (int k = 0; k < c; ++k) p[k] += fx[k];
        }
    }
    std::vector<double> out(c, 0.0);
    for (int i = 0; i < h; ++i)
        for (int k = 0; k < c; ++k) out[k] += partial[static_cast<std::size_t>(i) * c + k];
    return out;
}

void laplacian_and_matvec(const Field& f, const Mat& a, const Mat& b,
                          Field& lap, Field& out) {
    const int h = f.height, w = f.width, c = f.channels;
    const int co = a.rows;
    if (!lap.same_shape(f)) lap = Field(h, w, c);
    if (out.height != h || out.width != w || out.channels != co) out = Field(h, w, co);
    const double* src = f.data.data();
    const long long row_stride = static_cast<long long>(w) * c;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        const double* up = i > 0 ? src + (i - 1) * row_stride : nullptr;
        const double* down = i < h - 1 ? src + (i + 1) * row_stride : nullptr;
        const double* mid = src + i * row_stride;
        double* lap_row = lap.data.data() + i * row_stride;
        double* out_row = out.data.data() + i * static_cast<long long>(w) * co;
        for (int j = 0; j < w; ++j) {
            const long long base = static_cast<long long>(j) * c;
            for (int k = 0; k < c; ++k) {
                double acc = -4.0 * mid[base + k];
                if (up) acc += up[base + k];
                if (down) acc += down[base + k];
                if (j > 0) acc += mid[base - c + k];
                if (j < w - 1) acc += mid[base + c + k];
                lap_row[base + k] = acc;
            }
            double* ox = out_row + static_cast<long long>(j) * co;
            for (int r = 0; r < co; ++r) {
                double acc = 0.0;
                for (int k = 0; k < c; ++k) {
                    acc += a(r, k) * mid[base + k];
                }
                for (int k = 0; k < c; ++k) {
                    acc += b(r, k) * lap_row[base + k];
                }
                ox[r] = acc;
            }
        }
    }
}

void interleaved_to_planar(const Mat& t, const Field& src, double* planes) {
    const int h = src.height, w = src.width, ci = src.channels;
    const int co = t.rows;
    const std::size_t pixels = src.pixels();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const std::size_t px = static_cast<std::size_t>(i) * w + j;
            const double* sx = &src.data[px * ci];
            for (int c = 0; c < co; ++c) {
                double acc = 0.0;
                for (int k = 0; k < ci; ++k) acc += t(c, k) * sx[k];
                planes[c * pixels + px] = acc;
            }
        }
    }
}

Field planar_to_interleaved(const Mat& v, const double* planes, int h, int w) {
    const int co = v.rows, ci = v.cols;
    const std::size_t pixels = static_cast<std::size_t>(h) * w;
    Field out(h, w, co);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const std::size_t px = static_cast<std::size_t>(i) * w + j;
            double* ox = &out.data[px * co];
            for (int c = 0; c < co; ++c) {
                double acc = 0.0;
                for (int k = 0; k < ci; ++k) acc += v(c, k) * planes[k * pixels + px];
                ox[c] = acc;
            }
        }
    }
    return out;
}

void planar_backsub_rhs(const double* r_planes, const Mat& u, int k,
                        const double* z_planes, double* dst, std::size_t pixels) {
    const int n = u.cols;
    const double* rk = r_planes + static_cast<std::size_t>(k) * pixels;
#pragma omp parallel for schedule(static)
    for (long long px = 0; px < static_cast<long long>(pixels); ++px) {
        double acc = rk[px];
        for (int j = k + 1; j < n; ++j) acc += u(k, j) * z_planes[j * pixels + px];
        dst[px] = acc;
    }
}

void gather_channel(const Field& f, int c, double* plane) {
    const int ch = f.channels;
    const long long n = static_cast<long long>(f.pixels());
#pragma omp parallel for schedule(static)
    for (long long px = 0; px < n; ++px) plane[px] = f.data[px * ch + c];
}

void scatter_channel(const double* plane, Field& f, int c) {
    const int ch = f.channels;
    const long long n = static_cast<long long>(f.pixels());
#pragma omp parallel for schedule(static)
    for (long long px = 0; px < n; ++px) f.data[px * ch + c] = plane[px];
}

}  // namespace vrd
