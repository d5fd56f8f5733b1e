#include "rotsync/quotient.hpp"

#include <Eigen/SVD>
#include <cassert>
#include <cmath>

namespace rotsync {

Matrix symblockdiag(const Matrix& x, int d) {
  if (x.rows() != x.cols() || x.rows() % d != 0)
    throw InvariantViolation("symblockdiag: size not a multiple of d");
  const int n = static_cast<int>(x.rows()) / d;
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < n; ++i) {
    const auto b = x.block(i * d, i * d, d, d);
    out.block(i * d, i * d, d, d) = 0.5 * (b + b.transpose());
  }
  return out;
}

Matrix s_matrix(const Matrix& c, const RotationStack& g) {
  const Matrix ggt = g.blocks * g.blocks.transpose();
  return symblockdiag(c * ggt, g.d) - c;
}

double objective(const Matrix& c, const RotationStack& g) {
  if (c.rows() != g.blocks.rows() || c.cols() != g.blocks.rows())
    throw InvariantViolation("observation/stack shape mismatch");
  return (g.blocks.transpose() * (c * g.blocks)).trace();
}

Matrix riemannian_grad(const Matrix& c, const RotationStack& g) {
  if (c.rows() != g.blocks.rows() || c.cols() != g.blocks.rows())
    throw InvariantViolation("observation/stack shape mismatch");
  return 2.0 * tangent_project(g, c * g.blocks);
}

Matrix horizontal_project(const RotationStack& g, const Matrix& eta) {
  skew_from_tangent(g, eta);  // validates tangency
  return eta - (1.0 / g.n) * (g.blocks * (g.blocks.transpose() * eta));
}

Matrix hess_vec(const Matrix& c, const RotationStack& g, const Matrix& h) {
  skew_from_tangent(g, h, /*expect_horizontal=*/true);
  const Matrix m = c * g.blocks;  // (C G)_i per block row
  Matrix v(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i) {
    const auto mi = m.middleRows(i * g.d, g.d);
    const auto gi = g.block(i);
    const auto hi = h.middleRows(i * g.d, g.d);
    const Matrix bi = 0.5 * (mi * gi.transpose() + gi * mi.transpose());
    v.middleRows(i * g.d, g.d) = bi * hi;
  }
  v -= c * h;
  v *= -2.0;  // -2 S(G) H
  return horizontal_project(g, tangent_project(g, v));
}

double hess_quadratic(const Matrix& c, const RotationStack& g,
                      const Matrix& h) {
  skew_from_tangent(g, h, /*expect_horizontal=*/true);
  const Matrix m = c * g.blocks;
  double term1 = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const Matrix ei = g.block(i).transpose() * h.middleRows(i * g.d, g.d);
    const Matrix a = g.block(i).transpose() * m.middleRows(i * g.d, g.d);
    term1 += (ei.transpose() * a * ei).trace();
  }
  const double term2 = (h.transpose() * (c * h)).trace();
  return term1 - term2;
}

Alignment procrustes_align(const Matrix& x, const Matrix& y, int n, int d) {
  if (x.rows() != y.rows() || x.cols() != y.cols() ||
      x.rows() != static_cast<Eigen::Index>(n) * d || x.cols() != d)
    throw InvariantViolation("alignment shape mismatch");
  const Matrix ytx = y.transpose() * x;
  Eigen::JacobiSVD<Matrix> svd(ytx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(d - 1) <= 1e-12)
    throw DegenerateProjection("Y^T X rank-deficient: alignment not unique");
  Alignment a;
  a.q = svd.matrixU() * svd.matrixV().transpose();
  // Direct evaluation at the optimal q; the nuclear-norm identity
  // ||x||^2 + ||y||^2 - 2 ||y^T x||_* equals this squared but cancels
  // catastrophically near zero.
  a.dist_f = (x - y * a.q).norm();
  a.dist_inf = 0.0;
  for (int i = 0; i < n; ++i) {
    const double bn =
        (x.middleRows(i * d, d) - y.middleRows(i * d, d) * a.q).norm();
    a.dist_inf = std::max(a.dist_inf, bn);
  }
  return a;
}

Alignment procrustes_align(const RotationStack& x, const RotationStack& y) {
  return procrustes_align(x.blocks, y.blocks, x.n, x.d);
}

double dist_f(const RotationStack& x, const RotationStack& y) {
  return procrustes_align(x, y).dist_f;
}

namespace {

double fiber_dist(const RotationStack& x, const RotationStack& y,
                  const Matrix& q) {
  double sq = 0.0;
  for (int i = 0; i < x.n; ++i) {
    const Matrix rel = q.transpose() * (x.block(i).transpose() * y.block(i));
    sq += skew_log(rel).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace

QuotientDistance quotient_riem_dist(const RotationStack& x,
                                    const RotationStack& y) {
  if (x.n != y.n || x.d != y.d)
    throw InvariantViolation("stack shape mismatch");
  const int n = x.n;
  const int d = x.d;

  // Seed at the fiber element nearest in the Frobenius sense, constrained to
  // the component where the relative rotations stay log-able.
  Matrix q;
  try {
    q = project_special_orthogonal(x.blocks.transpose() * y.blocks);
  } catch (const DegenerateProjection&) {
    q = Matrix::Identity(d, d);
  }

  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    Matrix mean = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i)
      mean += skew_log(q.transpose() *
                       (x.block(i).transpose() * y.block(i)));
    mean /= static_cast<double>(n);
    const Matrix q_next = q * skew_exp(mean);
    const double change = (q_next - q).norm();
    q = q_next;
    if (change < 1e-8) {
      converged = true;
      break;
    }
  }

  QuotientDistance out;
  out.converged = converged;
  out.value = fiber_dist(x, y, q);
  // The refined point can never beat these candidates by construction, but
  // guard against a bad seed: the result must not exceed the unaligned
  // product distance.
  try {
    out.value = std::min(out.value, fiber_dist(x, y, Matrix::Identity(d, d)));
  } catch (const BranchAmbiguity&) {
  }
  return out;
}

RotationStack right_multiply(const RotationStack& g, const Matrix& q) {
  if (q.rows() != g.d || q.cols() != g.d)
    throw InvariantViolation("q must be d x d");
  RotationStack out;
  out.blocks = g.blocks * q;
  out.n = g.n;
  out.d = g.d;
  out.group = (g.group == Group::SpecialOrthogonal && q.determinant() > 0)
                  ? Group::SpecialOrthogonal
                  : Group::Orthogonal;
  return out;
}

}  // namespace rotsync
