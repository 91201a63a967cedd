#pragma once

#include "vrd/field.hpp"

namespace vrd {

enum class DstDirection { forward, inverse };

/** 2-D DST-I applied independently per channel.
 *
 *  forward:  F(k,l) = sum_{i,j} f(i,j) sin(pi(i+1)(k+1)/(H+1)) sin(pi(j+1)(l+1)/(W+1))
 *  inverse:  the same kernel scaled by 4/((H+1)(W+1)), so inverse(forward(f)) = f.
 *
 *  FFT-based, O(L log L) per channel. The basis vanishes on the extended
 *  boundary, matching the homogeneous Dirichlet Laplacian, which it
 *  diagonalizes with eigenvalues
 *  2 cos(pi(k+1)/(H+1)) + 2 cos(pi(l+1)/(W+1)) - 4.
 */
Field dst1_2d(const Field& f, DstDirection direction);

/** Unnormalized separable DST-I applied in place to a contiguous h*w plane.
 *  Each 1-D pass computes twice the sine-kernel sum (the usual FFT odd
 *  extension factor), so applying this twice multiplies by 4(h+1)(w+1). */
void dst1_raw_plane(double* plane, int h, int w);

// One unnormalized 1-D DST-I pass along the contiguous rows of a
// rows x len plane.
void dst1_rows(double* plane, int rows, int len);

// Blocked transpose of an h x w plane into dst (w x h). Column-strided
// transforms would thrash the TLB on large grids, so the separable passes
// run on contiguous rows with explicit transposes in between.
void dst1_transpose(const double* src, int h, int w, double* dst);

}  // namespace vrd
