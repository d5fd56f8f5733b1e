#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "rotsync/problem.hpp"
#include "rotsync/quotient.hpp"
#include "rotsync/random.hpp"

using namespace rotsync;

namespace {

Observation noisy_instance(int n, int d, double sigma, std::uint64_t seed) {
  const GroundTruth gt = random_rotation_stack(n, d, seed);
  return assemble_observation(gt, gaussian_noise(n, d, sigma, seed));
}

// Objective through the blockwise definition, independent of the library's
// matrix-product evaluation.
double objective_blockwise(const Matrix& c, const RotationStack& g) {
  double f = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      f += (g.block(i).transpose() * c.block(i * g.d, j * g.d, g.d, g.d) *
            g.block(j))
               .trace();
  return f;
}

Matrix planar_rot(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

}  // namespace

TEST_SUITE_BEGIN("quotient");

TEST_CASE("symblockdiag: fixed point, zero, and elementwise oracle") {
  Prng prng(41);
  const int n = 4, d = 3;

  Matrix bd = Matrix::Zero(n * d, n * d);
  for (int i = 0; i < n; ++i) {
    const Matrix b = random_gaussian(d, d, prng);
    bd.block(i * d, i * d, d, d) = 0.5 * (b + b.transpose());
  }
  CHECK((symblockdiag(bd, d) - bd).norm() < 1e-15);

  Matrix off = random_gaussian(n * d, n * d, prng);
  for (int i = 0; i < n; ++i) off.block(i * d, i * d, d, d).setZero();
  CHECK(symblockdiag(off, d).norm() < 1e-15);

  const Matrix x = random_gaussian(n * d, n * d, prng);
  const Matrix got = symblockdiag(x, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
          const double want =
              (i == j) ? 0.5 * (x(i * d + p, j * d + q) + x(j * d + q, i * d + p))
                       : 0.0;
          CHECK(got(i * d + p, j * d + q) == doctest::Approx(want).epsilon(1e-14));
        }

  CHECK_THROWS_AS(symblockdiag(random_gaussian(7, 7, prng), 3),
                  InvariantViolation);
}

TEST_CASE("objective: noiseless truth value and blockwise oracle") {
  const int n = 7, d = 3;
  const Observation obs = noisy_instance(n, d, 0.0, 42);
  CHECK(objective(obs.c, obs.g_star) ==
        doctest::Approx(static_cast<double>(n) * n * d).epsilon(1e-12));

  const Observation noisy = noisy_instance(n, d, 0.3, 43);
  const RotationStack g = random_rotation_stack(n, d, 44).g_star;
  CHECK(objective(noisy.c, g) ==
        doctest::Approx(objective_blockwise(noisy.c, g)).epsilon(1e-11));
}

TEST_CASE("objective is class invariant") {
  const Observation obs = noisy_instance(6, 3, 0.2, 45);
  Prng prng(46);
  const RotationStack g = random_rotation_stack(6, 3, 47).g_star;
  const double f = objective(obs.c, g);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix q = random_rotation(3, prng);
    if (trial % 2) q.col(0) *= -1.0;  // other component of O(3)
    const double fq = objective(obs.c, right_multiply(g, q));
    CHECK(fq == doctest::Approx(f).epsilon(1e-9));
  }
}

TEST_CASE("riemannian_grad vanishes at the noiseless truth") {
  const Observation obs = noisy_instance(8, 3, 0.0, 48);
  CHECK(riemannian_grad(obs.c, obs.g_star).norm() < 1e-10);
}

TEST_CASE("riemannian_grad vanishes at the flipped-block critical point") {
  const Observation obs = noisy_instance(6, 2, 0.0, 49);
  RotationStack g = obs.g_star;
  g.block(0) = -g.block(0);
  CHECK(riemannian_grad(obs.c, g).norm() < 1e-12);
}

TEST_CASE("riemannian_grad matches geodesic finite differences") {
  Prng prng(50);
  int checked = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const int d = (inst % 2) ? 2 : 3;
    const Observation obs = noisy_instance(6, d, 0.4, 500 + inst);
    const RotationStack g = random_rotation_stack(6, d, 600 + inst).g_star;
    const Matrix grad = riemannian_grad(obs.c, g);
    for (int k = 0; k < 20; ++k) {
      Matrix v = random_tangent(g, prng);
      v /= v.norm();
      const SkewStack vs = skew_from_tangent(g, v);
      const double h = 1e-5;
      const double fp = objective(obs.c, exp_map(g, vs, h));
      const double fm = objective(obs.c, exp_map(g, vs, -h));
      const double fd = (fp - fm) / (2 * h);
      const double an = (grad.cwiseProduct(v)).sum();
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
      ++checked;
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("gradient is horizontal: tangency and zero block sum") {
  for (int inst = 0; inst < 10; ++inst) {
    const int d = (inst % 2) ? 2 : 3;
    const Observation obs = noisy_instance(7, d, 0.5, 700 + inst);
    const RotationStack g = random_rotation_stack(7, d, 800 + inst).g_star;
    const Matrix grad = riemannian_grad(obs.c, g);
    const SkewStack e = skew_from_tangent(g, grad);  // throws unless tangent
    CHECK(e.block_sum().norm() <= 1e-10 * std::max(1.0, grad.norm()));
  }
}

TEST_CASE("horizontal_project: fixed point, vertical kill, definition") {
  const RotationStack g = random_rotation_stack(6, 3, 51).g_star;
  Prng prng(52);

  const Matrix h = random_horizontal(g, prng);
  CHECK((horizontal_project(g, h) - h).norm() < 1e-10);

  // Vertical direction: same skew block everywhere.
  const Matrix e = random_skew(3, prng);
  Matrix vert(18, 3);
  for (int i = 0; i < 6; ++i) vert.middleRows(i * 3, 3) = g.block(i) * e;
  CHECK(horizontal_project(g, vert).norm() < 1e-12);

  const Matrix eta = random_tangent(g, prng);
  const Matrix p = horizontal_project(g, eta);
  const SkewStack ps = skew_from_tangent(g, p);
  CHECK(ps.block_sum().norm() < 1e-10);
  CHECK((horizontal_project(g, p) - p).norm() < 1e-12);
  // Orthogonal projection: the result is orthogonal to every vertical
  // direction and the residual to every horizontal one.
  for (int k = 0; k < 10; ++k) {
    const Matrix ek = random_skew(3, prng);
    Matrix vk(18, 3);
    for (int i = 0; i < 6; ++i) vk.middleRows(i * 3, 3) = g.block(i) * ek;
    CHECK(std::abs((p.cwiseProduct(vk)).sum()) < 1e-10 * vk.norm());
    const Matrix hk = random_horizontal(g, prng);
    CHECK(std::abs(((eta - p).cwiseProduct(hk)).sum()) < 1e-10 * hk.norm());
  }

  CHECK_THROWS_AS(horizontal_project(g, g.blocks), InvariantViolation);
}

TEST_CASE("hess_vec: zero, horizontality, self-adjointness") {
  const Observation obs = noisy_instance(6, 3, 0.3, 53);
  const RotationStack g = random_rotation_stack(6, 3, 54).g_star;
  Prng prng(55);

  CHECK(hess_vec(obs.c, g, Matrix::Zero(18, 3)).norm() < 1e-15);

  for (int trial = 0; trial < 30; ++trial) {
    const Matrix h1 = random_horizontal(g, prng);
    const Matrix h2 = random_horizontal(g, prng);
    const Matrix hv1 = hess_vec(obs.c, g, h1);
    const Matrix hv2 = hess_vec(obs.c, g, h2);
    const SkewStack s = skew_from_tangent(g, hv1, /*expect_horizontal=*/true);
    CHECK(s.horizontal);
    const double a = (hv1.cwiseProduct(h2)).sum() / (h1.norm() * h2.norm());
    const double b = (hv2.cwiseProduct(h1)).sum() / (h1.norm() * h2.norm());
    CHECK(std::abs(a - b) < 1e-9);
  }

  // Linearity in H.
  const Matrix h1 = random_horizontal(g, prng);
  const Matrix h2 = random_horizontal(g, prng);
  const Matrix lin = hess_vec(obs.c, g, 2.0 * h1 + 0.5 * h2);
  CHECK((lin - 2.0 * hess_vec(obs.c, g, h1) - 0.5 * hess_vec(obs.c, g, h2))
            .norm() < 1e-9);

  CHECK_THROWS_AS(hess_vec(obs.c, g, random_tangent(g, prng)),
                  InvariantViolation);
}

TEST_CASE("hess_vec matches the second geodesic difference") {
  Prng prng(56);
  for (int inst = 0; inst < 5; ++inst) {
    const int d = (inst % 2) ? 2 : 3;
    const Observation obs = noisy_instance(6, d, 0.3, 900 + inst);
    const RotationStack g = random_rotation_stack(6, d, 950 + inst).g_star;
    for (int k = 0; k < 5; ++k) {
      Matrix h = random_horizontal(g, prng);
      h /= h.norm();
      const SkewStack hs = skew_from_tangent(g, h);
      const double step = 1e-4;
      const double f0 = objective(obs.c, g);
      const double fp = objective(obs.c, exp_map(g, hs, step));
      const double fm = objective(obs.c, exp_map(g, hs, -step));
      const double fd2 = (fp - 2 * f0 + fm) / (step * step);
      const double an = (hess_vec(obs.c, g, h).cwiseProduct(h)).sum();
      CHECK(std::abs(fd2 - an) <= 1e-4 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("hess_quadratic: zero, consistency, noiseless concavity") {
  Prng prng(57);
  const Observation obs = noisy_instance(6, 3, 0.3, 58);
  const RotationStack g = random_rotation_stack(6, 3, 59).g_star;

  CHECK(hess_quadratic(obs.c, g, Matrix::Zero(18, 3)) == 0.0);

  int checked = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const int d = (inst % 2) ? 2 : 3;
    const Observation o = noisy_instance(5, d, 0.4, 1000 + inst);
    const RotationStack gg = random_rotation_stack(5, d, 1100 + inst).g_star;
    for (int k = 0; k < 20; ++k) {
      const Matrix h = random_horizontal(gg, prng);
      const double quad = hess_quadratic(o.c, gg, h);
      const double via_vec = -0.5 * (hess_vec(o.c, gg, h).cwiseProduct(h)).sum();
      CHECK(std::abs(quad - via_vec) <=
            1e-8 * std::max(1.0, std::abs(quad)));
      ++checked;
    }
  }
  CHECK(checked == 100);

  // Noiseless at the truth: the form is n ||H||^2, far above (n/2) ||H||^2.
  const Observation clean = noisy_instance(8, 3, 0.0, 60);
  for (int k = 0; k < 10; ++k) {
    const Matrix h = random_horizontal(clean.g_star, prng);
    CHECK(hess_quadratic(clean.c, clean.g_star, h) >=
          (clean.n / 2.0 - 1e-6) * h.squaredNorm());
  }
}

TEST_CASE("procrustes_align: identity, exact class member, grid oracle") {
  const RotationStack x = random_rotation_stack(6, 3, 61).g_star;
  const Alignment self = procrustes_align(x, x);
  CHECK((self.q - Matrix::Identity(3, 3)).norm() < 1e-12);
  CHECK(self.dist_f < 1e-9);
  CHECK(self.dist_inf <= self.dist_f + 1e-12);

  Prng prng(62);
  const Matrix q0 = random_rotation(3, prng);
  const RotationStack y = right_multiply(x, q0.transpose());
  // x = y q0, so aligning y to x recovers q0.
  const Alignment a = procrustes_align(x, y);
  CHECK((a.q - q0).norm() < 1e-10);
  CHECK(a.dist_f < 1e-9);

  // d = 2 grid over both components of O(2).
  const RotationStack u = random_rotation_stack(5, 2, 63).g_star;
  const RotationStack v = random_rotation_stack(5, 2, 64).g_star;
  const Alignment av = procrustes_align(u, v);
  double grid_best = 1e300;
  for (double theta = 0.0; theta < 2 * M_PI; theta += 1e-4) {
    Matrix rot = planar_rot(theta);
    Matrix refl = rot;
    refl.col(1) *= -1.0;
    grid_best = std::min({grid_best, (u.blocks - v.blocks * rot).norm(),
                          (u.blocks - v.blocks * refl).norm()});
  }
  CHECK(std::abs(av.dist_f - grid_best) < 1e-4);
}

TEST_CASE("nuclear-norm identity for group stacks") {
  for (int inst = 0; inst < 10; ++inst) {
    const int d = (inst % 2) ? 2 : 3;
    const int n = 6;
    const RotationStack x = random_rotation_stack(n, d, 1200 + inst).g_star;
    const RotationStack y = random_rotation_stack(n, d, 1300 + inst).g_star;
    const Alignment a = procrustes_align(x, y);
    Eigen::JacobiSVD<Matrix> svd(y.blocks.transpose() * x.blocks);
    const double nuclear = svd.singularValues().sum();
    CHECK(a.dist_f * a.dist_f + 2.0 * nuclear ==
          doctest::Approx(2.0 * n * d).epsilon(1e-8));
    // And the closed form matches the directly evaluated distance.
    CHECK(a.dist_f ==
          doctest::Approx((x.blocks - y.blocks * a.q).norm()).epsilon(1e-8));
  }
}

TEST_CASE("dist_f and gradient norm are class invariant") {
  const Observation obs = noisy_instance(6, 3, 0.2, 65);
  const RotationStack g = random_rotation_stack(6, 3, 66).g_star;
  Prng prng(67);
  const double df = dist_f(g, obs.g_star);
  const double gn = riemannian_grad(obs.c, g).norm();
  for (int trial = 0; trial < 5; ++trial) {
    Matrix q = random_rotation(3, prng);
    if (trial % 2) q.col(2) *= -1.0;
    const RotationStack gq = right_multiply(g, q);
    CHECK(dist_f(gq, obs.g_star) == doctest::Approx(df).epsilon(1e-9));
    CHECK(riemannian_grad(obs.c, gq).norm() ==
          doctest::Approx(gn).epsilon(1e-9));
  }
}

TEST_CASE("quotient_riem_dist: zero, chain ordering, d = 2 grid oracle") {
  const RotationStack x = random_rotation_stack(5, 3, 68).g_star;
  CHECK(quotient_riem_dist(x, x).value < 1e-9);

  Prng prng(69);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = (trial % 2) ? 2 : 3;
    const RotationStack a = random_rotation_stack(6, d, 1400 + trial).g_star;
    RotationStack b = exp_map(a, random_skew_stack(6, d, prng), 0.35);
    const Alignment al = procrustes_align(a, b);
    const QuotientDistance dq = quotient_riem_dist(a, b);
    const double dg = riemannian_dist(a, b);
    CHECK(al.dist_inf <= al.dist_f + 1e-9);
    CHECK(al.dist_f <= dq.value + 1e-6);
    CHECK(dq.value <= dg + 1e-6);
  }

  // Exhaustive fiber search for d = 2.
  const RotationStack u = random_rotation_stack(5, 2, 70).g_star;
  RotationStack v = exp_map(u, random_skew_stack(5, 2, prng), 0.5);
  std::vector<double> rel(5);
  for (int i = 0; i < 5; ++i) {
    const Matrix r = u.block(i).transpose() * v.block(i);
    rel[i] = std::atan2(r(1, 0), r(0, 0));
  }
  double grid_best = 1e300;
  for (double theta = -M_PI; theta < M_PI; theta += 1e-5) {
    double sq = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double w = wrap_angle(rel[i] - theta);
      sq += 2.0 * w * w;
    }
    grid_best = std::min(grid_best, std::sqrt(sq));
  }
  const QuotientDistance dq = quotient_riem_dist(u, v);
  CHECK(dq.converged);
  CHECK(std::abs(dq.value - grid_best) < 1e-3);
}

TEST_CASE("flipped-block critical point has the closed-form S matrix") {
  // Noiseless d = 2 with the first block negated:
  // S(G) = (n - 2) Diag([-I; I; ...; I]) - G* G*^T.
  const int n = 7;
  const Observation obs = noisy_instance(n, 2, 0.0, 73);
  RotationStack g = obs.g_star;
  g.block(0) = -g.block(0);
  const Matrix s = s_matrix(obs.c, g);
  Matrix want = -obs.g_star.blocks * obs.g_star.blocks.transpose();
  for (int i = 0; i < n; ++i)
    want.block(2 * i, 2 * i, 2, 2) +=
        (i == 0 ? -(n - 2.0) : (n - 2.0)) * Matrix::Identity(2, 2);
  CHECK((s - want).norm() < 1e-10);
  CHECK((s * g.blocks).norm() < 1e-12);  // the gradient factor vanishes
}

TEST_CASE("s_matrix agrees with the gradient factorization") {
  const Observation obs = noisy_instance(5, 3, 0.4, 71);
  const RotationStack g = random_rotation_stack(5, 3, 72).g_star;
  const Matrix s = s_matrix(obs.c, g);
  CHECK((s - s.transpose()).norm() < 1e-10);
  const Matrix grad_via_s = -2.0 * (s * g.blocks);
  CHECK((tangent_project(g, grad_via_s) - riemannian_grad(obs.c, g)).norm() <
        1e-9);
}

TEST_SUITE_END();
