#pragma once

#include <Eigen/Dense>

#include "rotsync/prng.hpp"
#include "rotsync/stack.hpp"

namespace rotsync {

Matrix random_gaussian(int rows, int cols, Prng& prng);

/// Skew d x d with independent standard Gaussian entries above the diagonal.
Matrix random_skew(int d, Prng& prng);

/// Haar-uniform rotation: QR of a Gaussian block with the R-diagonal sign
/// correction, then a column flip when the determinant is negative.
Matrix random_rotation(int d, Prng& prng);

/// Stack of Gaussian skew blocks; when horizontal, the block mean is
/// subtracted so that sum_i E_i = 0.
SkewStack random_skew_stack(int n, int d, Prng& prng, bool horizontal = false);

/// Embedded random tangent (H_i = G_i E_i) at g.
Matrix random_tangent(const RotationStack& g, Prng& prng);

/// Embedded random horizontal tangent at g.
Matrix random_horizontal(const RotationStack& g, Prng& prng);

}  // namespace rotsync
