#pragma once

#include <Eigen/Dense>

#include "rotsync/manifold.hpp"
#include "rotsync/stack.hpp"

namespace rotsync {

// Quotient structure of the synchronization objective f(G) = tr(G^T C G)
// under the right action G -> G Q, Q in O(d): horizontal projection,
// gradient/Hessian lifts, Procrustes alignment, and class distances.

/// Keeps the symmetric parts of the diagonal d x d blocks, zeroes the rest.
Matrix symblockdiag(const Matrix& x, int d);

/// S(G) = symblockdiag(C G G^T) - C, materialized densely. Intended for
/// desk-scale checks; the gradient/Hessian paths below never form it.
Matrix s_matrix(const Matrix& c, const RotationStack& g);

/// f(G) = tr(G^T C G). Invariant under G -> G Q.
double objective(const Matrix& c, const RotationStack& g);

/// Embedded horizontal lift of the gradient: -2 S(G) G, computed blockwise
/// as 2 * Proj_{T_G}(C G). The result is tangent and horizontal.
Matrix riemannian_grad(const Matrix& c, const RotationStack& g);

/// (I - (1/n) G G^T) eta for a tangent eta at G. Annihilates the vertical
/// space {G E}; idempotent. Throws when eta is not tangent.
Matrix horizontal_project(const RotationStack& g, const Matrix& eta);

/// Horizontal lift of Hess f([G])[H] for a horizontal H at G:
/// (I - (1/n) G G^T) Proj_{T_G}(-2 S(G) H). Throws when H is not horizontal.
Matrix hess_vec(const Matrix& c, const RotationStack& g, const Matrix& h);

/// The quadratic form sum_i tr(E_i^T G_i^T (C G)_i E_i) - tr(H^T C H) with
/// E_i = G_i^T H_i; equals -0.5 <hess_vec(H), H> for horizontal H.
double hess_quadratic(const Matrix& c, const RotationStack& g,
                      const Matrix& h);

/// Result of aligning Y to X over O(d).
struct Alignment {
  Matrix q;         // argmin_Q ||X - Y Q||_F
  double dist_f;    // min_Q ||X - Y Q||_F, via the nuclear-norm identity
  double dist_inf;  // max_i ||X_i - Y_i q||_F at the optimal q
};

/// Procrustes alignment of two nd x d stacks (blocks need not be orthogonal;
/// the spectral estimator's unrounded eigenvector matrix is a valid input).
Alignment procrustes_align(const Matrix& x, const Matrix& y, int n, int d);
Alignment procrustes_align(const RotationStack& x, const RotationStack& y);

/// d_F([X], [Y]) = min_Q ||X - Y Q||_F.
double dist_f(const RotationStack& x, const RotationStack& y);

struct QuotientDistance {
  double value = 0.0;
  bool converged = false;
};

/// Approximate quotient Riemannian distance: min over the fiber of the
/// product Riemannian distance, seeded at the Procrustes aligner and refined
/// by intrinsic descent over Q (50 steps, stepsize 1/n, 1e-8 change
/// tolerance). The returned value is attained by a feasible Q, hence an
/// upper bound on the true quotient distance.
QuotientDistance quotient_riem_dist(const RotationStack& x,
                                    const RotationStack& y);

/// G Q with the group tag adjusted for det(Q).
RotationStack right_multiply(const RotationStack& g, const Matrix& q);

}  // namespace rotsync
