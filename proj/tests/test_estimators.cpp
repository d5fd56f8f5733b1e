#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rotsync/diagnostics.hpp"
#include "rotsync/estimators.hpp"
#include "rotsync/random.hpp"

using namespace rotsync;

namespace {

Observation make_instance(int n, int d, double sigma, std::uint64_t seed) {
  const GroundTruth gt = random_rotation_stack(n, d, seed);
  return assemble_observation(gt, gaussian_noise(n, d, sigma, seed));
}

}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("spectral_init recovers the truth exactly without noise") {
  for (int d : {2, 3}) {
    const Observation obs = make_instance(12, d, 0.0, 101);
    const RotationStack g0 = spectral_init(obs);
    CHECK(dist_f(g0, obs.g_star) < 1e-8);
    g0.check_valid();
  }
}

TEST_CASE("spectral_init satisfies the spectral error bounds in regime") {
  const int n = 40, d = 3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Observation obs = make_instance(n, d, 0.006, 200 + seed);
    REQUIRE(admissibility(obs, HypothesisSet::SpectralError).all_pass);
    const RotationStack g0 = spectral_init(obs);
    const Alignment a = procrustes_align(g0, obs.g_star);
    CHECK(a.dist_f <=
          8.0 * std::sqrt(d) * obs.op_norm_delta / std::sqrt(double(n)) + 1e-9);
    CHECK(a.dist_inf <= 16.0 * obs.delta_gstar_inf / n +
                            8.0 * std::sqrt(d) * obs.op_norm_delta / n + 1e-9);
  }
}

TEST_CASE("spectral_init fails loudly on a degenerate eigengap") {
  Observation obs = observation_from_c(Matrix::Identity(12, 12), 4, 3, 0, 1);
  CHECK_THROWS_AS(spectral_init(obs), DegenerateEigengap);
}

TEST_CASE("rgm stops immediately at a stationary start") {
  const Observation obs = make_instance(10, 3, 0.0, 102);
  StepsizePolicy policy;
  const Estimate est = rgm_solve(obs, obs.g_star, policy);
  CHECK(est.trace.status == SolveStatus::Converged);
  CHECK(est.trace.rows.size() == 1);
  CHECK(est.trace.rows[0].grad_norm <= 1e-12);
}

TEST_CASE("rgm with spectral init recovers the truth without noise") {
  const Observation obs = make_instance(20, 3, 0.0, 103);
  StepsizePolicy policy;
  policy.mode = StepMode::Fixed;  // t = 1/(4nd)
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy, 1e-10, 200);
  CHECK(est.trace.status == SolveStatus::Converged);
  CHECK(est.trace.iterations() <= 200);
  CHECK(dist_f(est.g_hat, obs.g_star) <= 1e-8);
}

TEST_CASE("rgm ascends monotonically with the safe stepsize") {
  const Observation obs = make_instance(15, 3, 0.08, 104);
  StepsizePolicy policy;
  policy.alpha = 0.5;
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy, 1e-10, 2000);
  REQUIRE(est.trace.status == SolveStatus::Converged);
  const auto& rows = est.trace.rows;
  REQUIRE(rows.size() >= 3);
  double fmax = 1.0;
  for (const auto& r : rows) fmax = std::max(fmax, std::abs(r.f));
  const double slack = 256 * std::numeric_limits<double>::epsilon() * fmax;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double promised =
        policy.alpha * rows[k].stepsize * rows[k].grad_norm * rows[k].grad_norm;
    CHECK(rows[k + 1].f - rows[k].f >= promised - slack);
  }
}

TEST_CASE("safe stepsizes always satisfy the admissible-range inequality") {
  const Observation obs = make_instance(12, 3, 0.1, 105);
  StepsizePolicy policy;
  policy.alpha = 0.3;
  const RunCapture run = capture_rgm(obs, spectral_init(obs), policy);
  REQUIRE(run.iterates.size() == run.est.trace.rows.size());
  const double n = obs.n, d = obs.d;
  for (std::size_t k = 0; k + 1 < run.iterates.size(); ++k) {
    const double t = run.est.trace.rows[k].stepsize;
    const double exact_inf =
        block_norm_inf(obs.delta * run.iterates[k].blocks, obs.n, obs.d);
    const double bound = (1.0 - policy.alpha) /
                         (n * (d + 1) + obs.op_norm_delta +
                          std::sqrt(d) * exact_inf);
    CHECK(t <= bound + 1e-15);
    CHECK(t >= policy.t_floor);
  }
}

TEST_CASE("safe_stepsize closed forms") {
  const Observation clean = make_instance(10, 3, 0.0, 106);
  CHECK(safe_stepsize(clean, clean.g_star, 0.5) ==
        doctest::Approx(1.0 / (2.0 * 10 * (3 + 1))).epsilon(1e-12));
  Observation no_truth = observation_from_c(clean.c, 10, 3, 0.0, 106);
  const RotationStack g = random_rotation_stack(10, 3, 107).g_star;
  CHECK(safe_stepsize(no_truth, g, 0.5) ==
        doctest::Approx(1.0 / (4.0 * 10 * 3)).epsilon(1e-15));
  CHECK(conservative_stepsize(10, 3) == doctest::Approx(1.0 / 120.0));
}

TEST_CASE("rgm preserves the SO component on every iterate") {
  const Observation obs = make_instance(10, 3, 0.15, 108);
  StepsizePolicy policy;
  const RunCapture run = capture_rgm(obs, spectral_init(obs), policy);
  for (const auto& g : run.iterates) {
    CHECK(g.group == Group::SpecialOrthogonal);
    for (int i = 0; i < g.n; ++i)
      CHECK(g.block(i).determinant() > 0.0);
  }
}

TEST_CASE("identical inputs give bitwise-identical traces") {
  const Observation obs = make_instance(8, 3, 0.1, 109);
  StepsizePolicy policy;
  const Estimate a = rgm_solve(obs, spectral_init(obs), policy);
  const Estimate b = rgm_solve(obs, spectral_init(obs), policy);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
    CHECK(a.trace.rows[k].f == b.trace.rows[k].f);
    CHECK(a.trace.rows[k].grad_norm == b.trace.rows[k].grad_norm);
    CHECK(a.trace.rows[k].stepsize == b.trace.rows[k].stepsize);
    CHECK(a.trace.rows[k].dist_f_ref == b.trace.rows[k].dist_f_ref);
  }
  CHECK((a.g_hat.blocks - b.g_hat.blocks).norm() == 0.0);
}

TEST_CASE("rgm reports iteration exhaustion as a status, not an error") {
  const Observation obs = make_instance(10, 3, 0.1, 110);
  StepsizePolicy policy;
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy, 1e-10, 3);
  CHECK(est.trace.status == SolveStatus::MaxIterations);
  CHECK(est.trace.rows.size() == 4);
}

TEST_CASE("rgm aborts on non-finite data") {
  Observation obs = make_instance(6, 2, 0.0, 111);
  obs.c(0, 1) = std::numeric_limits<double>::quiet_NaN();
  obs.c(1, 0) = std::numeric_limits<double>::quiet_NaN();
  StepsizePolicy policy;
  const Estimate est = rgm_solve(obs, obs.g_star, policy, 1e-10, 10);
  CHECK(est.trace.status == SolveStatus::Aborted);
  CHECK(!est.trace.message.empty());
}

TEST_CASE("gpm is a fixed point at the noiseless truth") {
  const Observation obs = make_instance(10, 3, 0.0, 112);
  const Estimate est = gpm_solve(obs, obs.g_star);
  CHECK(est.trace.status == SolveStatus::Converged);
  CHECK(est.trace.rows.size() == 1);
  CHECK(dist_f(est.g_hat, obs.g_star) < 1e-10);
}

TEST_CASE("gpm with spectral init recovers the truth without noise") {
  const Observation obs = make_instance(15, 2, 0.0, 113);
  const Estimate est = gpm_solve(obs, spectral_init(obs));
  CHECK(est.trace.status == SolveStatus::Converged);
  CHECK(dist_f(est.g_hat, obs.g_star) <= 1e-8);
}

TEST_CASE("the pipeline handles higher block dimensions") {
  // d = 5 exercises the series exponential and the Schur logarithm inside
  // the solver and the distance computations.
  const Observation obs = make_instance(6, 5, 0.0, 118);
  StepsizePolicy policy;
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy, 1e-10, 500);
  CHECK(est.trace.status == SolveStatus::Converged);
  CHECK(dist_f(est.g_hat, obs.g_star) <= 1e-8);
  CHECK(quotient_riem_dist(est.g_hat, obs.g_star).value < 1e-6);
}

TEST_CASE("gpm aborts with a diagnostic on a degenerate projection") {
  // Dead block row: (C G)_0 = 0 makes the first projection degenerate while
  // the iteration is not yet stationary.
  const Observation base = make_instance(4, 3, 0.0, 116);
  Matrix c = base.c;
  c.topRows(3).setZero();
  c.leftCols(3).setZero();
  Observation obs = observation_from_c(std::move(c), 4, 3, 0, 116);
  const RotationStack g0 = random_rotation_stack(4, 3, 117).g_star;
  const Estimate est = gpm_solve(obs, g0, 1e-10, 10);
  CHECK(est.trace.status == SolveStatus::Aborted);
  CHECK(est.trace.message.find("degenerate") != std::string::npos);
}

TEST_CASE("rgm and gpm limits agree on small-noise instances") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Observation obs = make_instance(12, 3, 0.05, 300 + seed);
    StepsizePolicy policy;
    const Estimate r = rgm_solve(obs, spectral_init(obs), policy, 1e-12, 20000);
    const Estimate p = gpm_solve(obs, spectral_init(obs), 1e-12, 20000);
    REQUIRE(r.trace.status == SolveStatus::Converged);
    REQUIRE(p.trace.status == SolveStatus::Converged);
    CHECK(dist_f(r.g_hat, p.g_hat) <= 1e-6);
  }
}

TEST_CASE("stationarity notions agree at termination") {
  const Observation obs = make_instance(12, 3, 0.05, 114);
  StepsizePolicy policy;
  const double tol = 1e-10;
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy, tol);
  REQUIRE(est.trace.status == SolveStatus::Converged);
  // Projected-power fixed-point residual at the RGM solution.
  const Matrix m = obs.c * est.g_hat.blocks;
  Matrix proj(obs.n * obs.d, obs.d);
  for (int i = 0; i < obs.n; ++i)
    proj.middleRows(i * obs.d, obs.d) =
        project_special_orthogonal(m.middleRows(i * obs.d, obs.d));
  const double residual = (proj - est.g_hat.blocks).norm();
  CHECK(residual <= tol * obs.n);
}

TEST_CASE("trace CSV matches the schema") {
  const Observation obs = make_instance(6, 2, 0.02, 115);
  StepsizePolicy policy;
  const Estimate est = rgm_solve(obs, spectral_init(obs), policy);
  std::stringstream ss;
  write_trace_csv(ss, est.trace);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "iter,f,grad_norm,stepsize,dist_f_ref,dist_inf_ref");
  int lines = 0;
  std::string line;
  while (std::getline(ss, line)) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(lines == static_cast<int>(est.trace.rows.size()));

  // Without truth the reference columns are empty.
  Observation no_truth = observation_from_c(obs.c, 6, 2, 0.02, 115);
  const Estimate est2 = rgm_solve(no_truth, spectral_init(no_truth), policy);
  std::stringstream s2;
  write_trace_csv(s2, est2.trace);
  std::getline(s2, line);  // header
  std::getline(s2, line);
  CHECK(line.substr(line.size() - 2) == ",,");
}

TEST_SUITE_END();
