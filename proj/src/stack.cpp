#include "rotsync/stack.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rotsync {

std::string group_name(Group g) {
  return g == Group::SpecialOrthogonal ? "SO" : "O";
}

Group parse_group(const std::string& token) {
  if (token == "SO") return Group::SpecialOrthogonal;
  if (token == "O") return Group::Orthogonal;
  throw ParseError("unknown group tag '" + token + "' (expected SO or O)");
}

RotationStack::RotationStack(Matrix m, int n_, int d_, Group g)
    : blocks(std::move(m)), n(n_), d(d_), group(g) {
  if (blocks.rows() != static_cast<Eigen::Index>(n) * d || blocks.cols() != d)
    throw InvariantViolation("rotation stack shape mismatch");
  check_valid();
}

double RotationStack::orthogonality_residual() const {
  double worst = 0.0;
  const Matrix id = Matrix::Identity(d, d);
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, (block(i).transpose() * block(i) - id).norm());
  return worst;
}

void RotationStack::check_valid() const {
  if (!blocks.allFinite())
    throw InvariantViolation("rotation stack has non-finite entries");
  if (d < 2 || d > 8)
    throw InvariantViolation("block dimension must be in [2, 8]");
  const double res = orthogonality_residual();
  if (res > kOrthTol)
    throw InvariantViolation("block orthogonality residual " +
                             std::to_string(res) + " exceeds tolerance");
  if (group == Group::SpecialOrthogonal) {
    for (int i = 0; i < n; ++i)
      if (block(i).determinant() < 0)
        throw InvariantViolation("SO(d) stack has a block with det = -1");
  }
}

SkewStack::SkewStack(const Matrix& m, int n_, int d_, bool horizontal_)
    : blocks(m), n(n_), d(d_), horizontal(horizontal_) {
  if (blocks.rows() != static_cast<Eigen::Index>(n) * d || blocks.cols() != d)
    throw InvariantViolation("skew stack shape mismatch");
  for (int i = 0; i < n; ++i) {
    Matrix b = blocks.middleRows(i * d, d);
    const double res = (b + b.transpose()).norm();
    if (res > kSkewTol * std::max(1.0, b.norm()))
      throw InvariantViolation("block " + std::to_string(i) +
                               " is not skew-symmetric (residual " +
                               std::to_string(res) + ")");
    blocks.middleRows(i * d, d) = 0.5 * (b - b.transpose());
  }
  if (horizontal) {
    const double s = block_sum().norm();
    if (s > kHorizontalTol * n)
      throw InvariantViolation("stack claimed horizontal but sum_i E_i = " +
                               std::to_string(s));
  }
}

Matrix SkewStack::block_sum() const {
  Matrix s = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) s += block(i);
  return s;
}

double SkewStack::norm_inf() const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) worst = std::max(worst, block(i).norm());
  return worst;
}

SkewStack skew_from_tangent(const RotationStack& g, const Matrix& h,
                            bool expect_horizontal) {
  if (h.rows() != g.blocks.rows() || h.cols() != g.d)
    throw InvariantViolation("tangent shape mismatch");
  Matrix e(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i)
    e.middleRows(i * g.d, g.d) = g.block(i).transpose() * h.middleRows(i * g.d, g.d);
  return SkewStack(e, g.n, g.d, expect_horizontal);
}

Matrix embed_tangent(const RotationStack& g, const SkewStack& e) {
  if (e.n != g.n || e.d != g.d)
    throw InvariantViolation("skew stack shape mismatch");
  Matrix h(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i)
    h.middleRows(i * g.d, g.d) = g.block(i) * e.block(i);
  return h;
}

double block_norm_inf(const Matrix& x, int n, int d) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, x.middleRows(i * d, d).norm());
  return worst;
}

void write_stack(std::ostream& os, const RotationStack& g) {
  os << g.n << ' ' << g.d << ' ' << group_name(g.group) << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < g.blocks.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.blocks.cols(); ++c) {
      if (c) os << ' ';
      os << g.blocks(r, c);
    }
    os << '\n';
  }
}

void write_stack_file(const std::string& path, const RotationStack& g) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_stack(os, g);
}

RotationStack read_stack(std::istream& is) {
  int n = 0, d = 0;
  std::string tag;
  if (!(is >> n >> d >> tag))
    throw ParseError("bad STACK header (expected 'n d group')");
  if (n < 1 || d < 2 || d > 8) throw ParseError("bad STACK dimensions");
  Matrix m(n * d, d);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!(is >> m(r, c))) throw ParseError("truncated STACK payload");
  return RotationStack(std::move(m), n, d, parse_group(tag));
}

RotationStack read_stack_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_stack(is);
}

}  // namespace rotsync
