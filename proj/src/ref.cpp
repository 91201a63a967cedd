#include "vrd/ref.hpp"

#include <cmath>
#include <stdexcept>

namespace vrd::ref {

Field laplacian_apply(const Field& f) {
    const int h = f.height, w = f.width, c = f.channels;
    Field out(h, w, c);
    auto value = [&](int i, int j, int k) -> double {
        if (i < 0 || i >= h || j < 0 || j >= w) return 0.0;
        return f.at(i, j, k);
    };
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < c; ++k)
                out.at(i, j, k) = value(i - 1, j, k) + value(i + 1, j, k) +
                                  value(i, j - 1, k) + value(i, j + 1, k) -
                                  4.0 * f.at(i, j, k);
    return out;
}

Field channel_matvec(const Mat& a, const Field& f, const Mat* b, const Field* g) {
    Field out(f.height, f.width, a.rows);
    for (int i = 0; i < f.height; ++i) {
        for (int j = 0; j < f.width; ++j) {
            for (int r = 0; r < a.rows; ++r) {
                double acc = 0.0;
                for (int k = 0; k < f.channels; ++k) acc += a(r, k) * f.at(i, j, k);
                if (b) {
                    for (int k = 0; k < g->channels; ++k) acc += (*b)(r, k) * g->at(i, j, k);
                }
                out.at(i, j, r) = acc;
            }
        }
    }
    return out;
}

double inner_product(const Field& f, const Field& g, int channel_f, int channel_g) {
    double acc = 0.0;
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j)
            acc += f.at(i, j, channel_f) * g.at(i, j, channel_g);
    return acc;
}

Mat gram(const Field& f, const Field& g) {
    Mat out(f.channels, g.channels);
    for (int a = 0; a < f.channels; ++a)
        for (int b = 0; b < g.channels; ++b)
            out(a, b) = inner_product(f, g, a, b);
    return out;
}

Field dst1_forward_direct(const Field& f) {
    const int h = f.height, w = f.width, c = f.channels;
    const double pi = 3.14159265358979323846;
    Field out(h, w, c);
    for (int k = 0; k < h; ++k) {
        for (int l = 0; l < w; ++l) {
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = 0; i < h; ++i) {
                    const double si = std::sin(pi * (i + 1) * (k + 1) / (h + 1));
                    for (int j = 0; j < w; ++j) {
                        acc += f.at(i, j, ch) * si * std::sin(pi * (j + 1) * (l + 1) / (w + 1));
                    }
                }
                out.at(k, l, ch) = acc;
            }
        }
    }
    return out;
}

}  // namespace vrd::ref
