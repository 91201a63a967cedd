#pragma once

#include "vrd/field.hpp"
#include "vrd/mat.hpp"

// Serial reference implementations of the lattice kernels, kept for testing
// the OpenMP versions and for the kernel benchmark. Plain loops, no pragmas,
// and a direct O(L^2) sine transform that never touches the FFT path.
namespace vrd::ref {

Field laplacian_apply(const Field& f);

Field channel_matvec(const Mat& a, const Field& f,
                     const Mat* b = nullptr, const Field* g = nullptr);

double inner_product(const Field& f, const Field& g, int channel_f, int channel_g);

Mat gram(const Field& f, const Field& g);

// Unnormalized forward DST-I by direct summation:
// F(k,l) = sum_{i,j} f(i,j) sin(pi(i+1)(k+1)/(H+1)) sin(pi(j+1)(l+1)/(W+1)).
Field dst1_forward_direct(const Field& f);

}  // namespace vrd::ref
