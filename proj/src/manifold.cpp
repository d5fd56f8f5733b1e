#include "rotsync/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>

namespace rotsync {

namespace {

constexpr double kBranchTol = 1e-8;  // angle distance to pi treated as the cut

void require_skew(const Matrix& e) {
  if (e.rows() != e.cols()) throw InvariantViolation("skew block not square");
  const double res = (e + e.transpose()).norm();
  if (res > 1e-12 * std::max(1.0, e.norm()))
    throw InvariantViolation("input is not skew-symmetric");
}

void require_rotation(const Matrix& r) {
  if (r.rows() != r.cols()) throw InvariantViolation("block not square");
  const int d = static_cast<int>(r.rows());
  const double res = (r.transpose() * r - Matrix::Identity(d, d)).norm();
  if (res > 1e-8) throw InvariantViolation("block is not orthogonal");
  if (r.determinant() < 0)
    throw InvariantViolation("block has det -1; no real logarithm in so(d)");
}

Matrix exp_series_scaled(const Matrix& e) {
  // Scaling and squaring: halve until ||A||_F <= 1, run 18 series terms,
  // square back. Good to ~1e-16 on the scaled argument.
  const int d = static_cast<int>(e.rows());
  int squarings = 0;
  const double norm = e.norm();
  if (norm > 1.0) squarings = static_cast<int>(std::ceil(std::log2(norm)));
  const Matrix a = e / std::pow(2.0, squarings);

  Matrix term = Matrix::Identity(d, d);
  Matrix sum = term;
  for (int k = 1; k <= 18; ++k) {
    term = (term * a) / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

Matrix exp_d2(const Matrix& e) {
  const double theta = e(1, 0);
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Matrix exp_d3(const Matrix& e) {
  // For skew 3x3, ||E||_F = sqrt(2) * theta; the two Rodrigues coefficients
  // are sin(theta)/theta and (1 - cos(theta))/theta^2.
  const double theta = e.norm() * M_SQRT1_2;
  double c1, c2;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    c1 = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c2 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    c1 = std::sin(theta) / theta;
    c2 = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Matrix::Identity(3, 3) + c1 * e + c2 * (e * e);
}

Matrix log_d2(const Matrix& r) {
  const double theta = std::atan2(r(1, 0), r(0, 0));
  if (std::abs(theta) >= M_PI - kBranchTol)
    throw BranchAmbiguity("rotation angle at pi: principal log not unique");
  Matrix e(2, 2);
  e << 0.0, -theta, theta, 0.0;
  return e;
}

Matrix log_d3(const Matrix& r) {
  // Angle-axis extraction through the quaternion path is stable near pi.
  Eigen::Matrix3d r3 = r;
  const Eigen::AngleAxisd aa(r3);
  const double theta = aa.angle();  // in [0, pi]
  if (theta >= M_PI - kBranchTol)
    throw BranchAmbiguity("rotation angle at pi: principal log not unique");
  const Eigen::Vector3d ax = aa.axis();
  Matrix e(3, 3);
  e << 0, -ax.z(), ax.y(), ax.z(), 0, -ax.x(), -ax.y(), ax.x(), 0;
  return theta * e;
}

Matrix log_schur(const Matrix& r) {
  // Real Schur form of an orthogonal matrix is block diagonal with 2x2
  // rotation blocks and +-1 scalars; read the plane angles off the blocks.
  const int d = static_cast<int>(r.rows());
  Eigen::RealSchur<Matrix> schur(r);
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();

  Matrix lambda = Matrix::Zero(d, d);
  int i = 0;
  while (i < d) {
    const bool pair = (i + 1 < d) && (std::abs(t(i + 1, i)) > 1e-10);
    if (pair) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
      const double theta = std::atan2(s, c);
      if (std::abs(theta) >= M_PI - kBranchTol)
        throw BranchAmbiguity("rotation angle at pi: principal log not unique");
      lambda(i, i + 1) = -theta;
      lambda(i + 1, i) = theta;
      i += 2;
    } else {
      if (t(i, i) < 0)
        throw BranchAmbiguity(
            "eigenvalue -1 pair (angle pi plane): principal log not unique");
      i += 1;
    }
  }
  Matrix e = u * lambda * u.transpose();
  return 0.5 * (e - e.transpose());
}

}  // namespace

Matrix skew_exp(const Matrix& e) {
  require_skew(e);
  const Matrix es = 0.5 * (e - e.transpose());
  const int d = static_cast<int>(es.rows());
  if (d == 2) return exp_d2(es);
  if (d == 3) return exp_d3(es);
  return exp_series_scaled(es);
}

Matrix skew_log(const Matrix& r) {
  require_rotation(r);
  const int d = static_cast<int>(r.rows());
  if (d == 2) return log_d2(r);
  if (d == 3) return log_d3(r);
  return log_schur(r);
}

Matrix project_orthogonal(const Matrix& z) {
  if (z.rows() != z.cols()) throw InvariantViolation("block not square");
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12)
    throw DegenerateProjection(
        "rank-deficient input: nearest orthogonal matrix not unique");
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix project_special_orthogonal(const Matrix& z) {
  if (z.rows() != z.cols()) throw InvariantViolation("block not square");
  const int d = static_cast<int>(z.rows());
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double detsign =
      (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0
                                                                    : 1.0;
  if (s(d - 2) + detsign * s(d - 1) <= 1e-10)
    throw DegenerateProjection(
        "singular-value tie under sign flip: nearest rotation not unique");
  Matrix u = svd.matrixU();
  if (detsign < 0) u.col(d - 1) *= -1.0;
  return u * svd.matrixV().transpose();
}

RotationStack exp_map(const RotationStack& g, const SkewStack& xi, double t) {
  if (xi.n != g.n || xi.d != g.d)
    throw InvariantViolation("tangent shape mismatch");
  Matrix out(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i)
    out.middleRows(i * g.d, g.d) = g.block(i) * skew_exp(t * xi.block(i));
  RotationStack r;
  r.blocks = std::move(out);
  r.n = g.n;
  r.d = g.d;
  r.group = g.group;
  return r;
}

RotationStack exp_map_embedded(const RotationStack& g, const Matrix& h,
                               double t) {
  return exp_map(g, skew_from_tangent(g, h), t);
}

Matrix tangent_project(const RotationStack& g, const Matrix& x) {
  if (x.rows() != g.blocks.rows() || x.cols() != g.d)
    throw InvariantViolation("shape mismatch in tangent projection");
  Matrix out(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i) {
    const auto xi = x.middleRows(i * g.d, g.d);
    const Matrix s = g.block(i).transpose() * xi;
    // G_i skew(G_i^T X_i) equals X_i - G_i sym(G_i^T X_i) on orthogonal
    // blocks, and keeps the output exactly tangent at the numerical iterate.
    out.middleRows(i * g.d, g.d) =
        g.block(i) * (0.5 * (s - s.transpose()));
  }
  return out;
}

double riemannian_dist(const RotationStack& x, const RotationStack& y) {
  if (x.n != y.n || x.d != y.d)
    throw InvariantViolation("stack shape mismatch");
  double sq = 0.0;
  for (int i = 0; i < x.n; ++i) {
    const Matrix rel = x.block(i).transpose() * y.block(i);
    sq += skew_log(rel).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace rotsync
