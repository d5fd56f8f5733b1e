#pragma once

#include <Eigen/Dense>

#include "rotsync/stack.hpp"

namespace rotsync {

// Blockwise linear algebra on O(d)/SO(d): exponential and principal
// logarithm of skew-symmetric matrices, nearest-point projections onto the
// groups, tangent projection, and the Riemannian distance on the product.

/// exp(E) for skew E. Closed forms for d = 2, 3; scaling-and-squaring on a
/// truncated series for d >= 4. The result is a rotation (det +1).
Matrix skew_exp(const Matrix& e);

/// Principal logarithm of R in SO(d): all plane angles in (-pi, pi).
/// Throws BranchAmbiguity when some plane sits at angle pi (within tolerance),
/// where the log is not unique.
Matrix skew_log(const Matrix& r);

/// Nearest orthogonal matrix U V^T from the SVD of Z.
/// Throws DegenerateProjection when sigma_min(Z) <= 1e-12 (minimizer not
/// unique).
Matrix project_orthogonal(const Matrix& z);

/// Nearest rotation U diag(1,...,1,det(U V^T)) V^T.
/// Throws DegenerateProjection when the minimizer is not unique, i.e. when
/// sigma_{d-1} + sign(det) * sigma_d <= 1e-10.
Matrix project_special_orthogonal(const Matrix& z);

/// Exp_G(t xi) = [G_1 exp(t E_1); ...; G_n exp(t E_n)]. Preserves group tag.
RotationStack exp_map(const RotationStack& g, const SkewStack& xi,
                      double t = 1.0);

/// Convenience overload with an embedded tangent h (h_i = G_i E_i).
RotationStack exp_map_embedded(const RotationStack& g, const Matrix& h,
                               double t = 1.0);

/// Orthogonal projection of an arbitrary nd x d matrix onto the tangent
/// space at G: X - symblockdiag(X G^T) G, computed blockwise.
Matrix tangent_project(const RotationStack& g, const Matrix& x);

/// Product Riemannian distance sqrt(sum_i ||log(X_i^T Y_i)||_F^2). Requires
/// all relative rotations X_i^T Y_i to admit a principal logarithm.
double riemannian_dist(const RotationStack& x, const RotationStack& y);

}  // namespace rotsync
