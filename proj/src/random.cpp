#include "rotsync/random.hpp"

#include <Eigen/QR>

namespace rotsync {

Matrix random_gaussian(int rows, int cols, Prng& prng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = prng.next_gaussian();
  return m;
}

Matrix random_skew(int d, Prng& prng) {
  Matrix e = Matrix::Zero(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) {
      const double v = prng.next_gaussian();
      e(r, c) = v;
      e(c, r) = -v;
    }
  return e;
}

Matrix random_rotation(int d, Prng& prng) {
  const Matrix a = random_gaussian(d, d, prng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(d - 1) *= -1.0;
  return q;
}

SkewStack random_skew_stack(int n, int d, Prng& prng, bool horizontal) {
  Matrix e(n * d, d);
  for (int i = 0; i < n; ++i) e.middleRows(i * d, d) = random_skew(d, prng);
  if (horizontal) {
    Matrix mean = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) mean += e.middleRows(i * d, d);
    mean /= static_cast<double>(n);
    for (int i = 0; i < n; ++i) e.middleRows(i * d, d) -= mean;
  }
  return SkewStack(e, n, d, horizontal);
}

Matrix random_tangent(const RotationStack& g, Prng& prng) {
  return embed_tangent(g, random_skew_stack(g.n, g.d, prng, false));
}

Matrix random_horizontal(const RotationStack& g, Prng& prng) {
  return embed_tangent(g, random_skew_stack(g.n, g.d, prng, true));
}

}  // namespace rotsync
