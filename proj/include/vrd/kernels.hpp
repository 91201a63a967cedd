#pragma once

#include "vrd/field.hpp"
#include "vrd/mat.hpp"

#include <vector>

namespace vrd {

// 5-point Laplacian with homogeneous Dirichlet boundary (out-of-range
// neighbors are zero), applied per channel.
Field laplacian_apply(const Field& f);
void laplacian_apply_into(const Field& f, Field& out);

// Per-pixel affine channel map: out(x) = a * f(x), optionally + b * g(x).
// a is (out_channels x f.channels), b is (out_channels x g->channels).
Field channel_matvec(const Mat& a, const Field& f,
                     const Mat* b = nullptr, const Field* g = nullptr);

// <f_cf, g_cg> = sum over pixels. Fields must share the grid.
double inner_product(const Field& f, const Field& g, int channel_f, int channel_g);

// All-pairs inner products: out(i,j) = <f_i, g_j>.
Mat gram(const Field& f, const Field& g);

// Per-pixel sum of each channel of f (the bias gradient of a channel mix).
std::vector<double> channel_sums(const Field& f);

// Fused 5-point Laplacian and source assembly in one pass over the input:
// writes lap = laplacian(f) and out(x) = a*f(x) + b*lap(x).
void laplacian_and_matvec(const Field& f, const Mat& a, const Mat& b,
                          Field& lap, Field& out);

// The solver works on channel-major planes (one contiguous h*w plane per
// channel) so each backsubstitution step touches only the channels it needs.
// planes(c) = &planes[c * pixels].

// planes(c, x) = sum_k t(c,k) * src(x, k).
void interleaved_to_planar(const Mat& t, const Field& src, double* planes);

// out(x, c) = sum_j v(c,j) * planes(j, x).
Field planar_to_interleaved(const Mat& v, const double* planes, int h, int w);

// dst(x) = r_planes(k, x) + sum_{j>k} u(k,j) * z_planes(j, x). dst may be
// the k-th plane of z_planes itself.
void planar_backsub_rhs(const double* r_planes, const Mat& u, int k,
                        const double* z_planes, double* dst, std::size_t pixels);

void gather_channel(const Field& f, int c, double* plane);
void scatter_channel(const double* plane, Field& f, int c);

}  // namespace vrd
