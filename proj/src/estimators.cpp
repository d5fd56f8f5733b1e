#include "rotsync/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace rotsync {

namespace {

constexpr int kReprojectEvery = 50;   // drift repair cadence
constexpr int kInfNormRefresh = 10;   // exact ||D G^k||_inf cadence

void reproject_blocks(RotationStack& g) {
  for (int i = 0; i < g.n; ++i) {
    Matrix b = g.block(i);
    g.block(i) = (g.group == Group::SpecialOrthogonal)
                     ? project_special_orthogonal(b)
                     : project_orthogonal(b);
  }
}

TraceRow make_row(const Observation& obs, const RotationStack& g, int k,
                  double f, double grad_norm) {
  TraceRow row;
  row.k = k;
  row.f = f;
  row.grad_norm = grad_norm;
  if (obs.has_truth) {
    const Alignment a = procrustes_align(g.blocks, obs.g_star.blocks, obs.n, obs.d);
    row.dist_f_ref = a.dist_f;
    row.dist_inf_ref = a.dist_inf;
    row.has_ref = true;
  }
  return row;
}

// Tracks ||Delta G^k||_inf with an exact refresh every kInfNormRefresh
// iterations and a rigorous upper bound in between:
// ||D G^k||_inf <= ||D G^cache||_inf + ||D|| * ||G^k - G^cache||_F.
class SafeStepTracker {
 public:
  SafeStepTracker(const Observation& obs, double alpha)
      : obs_(obs), alpha_(alpha) {}

  double step(const RotationStack& g, int k) {
    if (!obs_.has_truth)
      return conservative_stepsize(obs_.n, obs_.d);
    double bound;
    if (k % kInfNormRefresh == 0 || cache_blocks_.size() == 0) {
      cached_inf_ = block_norm_inf(obs_.delta * g.blocks, obs_.n, obs_.d);
      cache_blocks_ = g.blocks;
      bound = cached_inf_;
    } else {
      bound = cached_inf_ +
              obs_.op_norm_delta * (g.blocks - cache_blocks_).norm();
    }
    const double denom = obs_.n * (obs_.d + 1) + obs_.op_norm_delta +
                         std::sqrt(static_cast<double>(obs_.d)) * bound;
    return (1.0 - alpha_) / denom;
  }

 private:
  const Observation& obs_;
  double alpha_;
  Matrix cache_blocks_;
  double cached_inf_ = 0.0;
};

}  // namespace

double conservative_stepsize(int n, int d) {
  return 1.0 / (4.0 * static_cast<double>(n) * d);
}

double safe_stepsize(const Observation& obs, const RotationStack& g,
                     double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw InvariantViolation("alpha must lie in (0, 1)");
  if (!obs.has_truth) return conservative_stepsize(obs.n, obs.d);
  const double inf = block_norm_inf(obs.delta * g.blocks, obs.n, obs.d);
  const double denom = obs.n * (obs.d + 1) + obs.op_norm_delta +
                       std::sqrt(static_cast<double>(obs.d)) * inf;
  return (1.0 - alpha) / denom;
}

Matrix spectral_basis(const Observation& obs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(obs.c);
  if (es.info() != Eigen::Success)
    throw Error("eigendecomposition of C failed");
  const Eigen::Index nd = obs.size();
  const int d = obs.d;
  const auto& ev = es.eigenvalues();  // ascending
  const double gap = ev(nd - d) - ev(nd - d - 1);
  if (gap <= 1e-10 * obs.n)
    throw DegenerateEigengap("top-d eigengap " + std::to_string(gap) +
                             " too small for a stable spectral estimate");
  return std::sqrt(static_cast<double>(obs.n)) * es.eigenvectors().rightCols(d);
}

RotationStack spectral_init(const Observation& obs, Group target) {
  Matrix phi = spectral_basis(obs);
  if (target == Group::SpecialOrthogonal) {
    // The eigenbasis is defined only up to a right O(d) factor. A mirrored
    // basis would make every blockwise rotation projection degenerate (or
    // meaningless), so orient it first by majority determinant vote.
    double vote = 0.0;
    for (int i = 0; i < obs.n; ++i)
      vote += project_orthogonal(phi.middleRows(i * obs.d, obs.d))
                  .determinant();
    if (vote < 0.0) phi.col(obs.d - 1) *= -1.0;
  }
  Matrix blocks(obs.n * obs.d, obs.d);
  for (int i = 0; i < obs.n; ++i) {
    const Matrix b = phi.middleRows(i * obs.d, obs.d);
    blocks.middleRows(i * obs.d, obs.d) =
        (target == Group::SpecialOrthogonal) ? project_special_orthogonal(b)
                                             : project_orthogonal(b);
  }
  return RotationStack(std::move(blocks), obs.n, obs.d, target);
}

Estimate rgm_solve(const Observation& obs, const RotationStack& g0,
                   const StepsizePolicy& policy, double tol, int max_iter,
                   const IterateObserver& observer) {
  if (tol <= 0) throw InvariantViolation("tolerance must be positive");
  if (policy.alpha <= 0.0 || policy.alpha >= 1.0)
    throw InvariantViolation("alpha must lie in (0, 1)");
  g0.check_valid();

  const double t_fixed =
      policy.t_fixed > 0 ? policy.t_fixed : conservative_stepsize(obs.n, obs.d);
  SafeStepTracker tracker(obs, policy.alpha);

  Estimate est;
  est.g_hat = g0;
  est.trace.status = SolveStatus::MaxIterations;
  const double threshold = tol * obs.n;

  for (int k = 0; k <= max_iter; ++k) {
    const Matrix grad = riemannian_grad(obs.c, est.g_hat);
    const double f = objective(obs.c, est.g_hat);
    const double gn = grad.norm();
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      est.trace.status = SolveStatus::Aborted;
      est.trace.message = "non-finite objective or gradient at iteration " +
                          std::to_string(k);
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }
    if (gn <= threshold) {
      est.trace.status = SolveStatus::Converged;
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }
    if (k == max_iter) {
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }

    const double t = (policy.mode == StepMode::Fixed)
                         ? t_fixed
                         : tracker.step(est.g_hat, k);
    TraceRow row = make_row(obs, est.g_hat, k, f, gn);
    row.stepsize = t;
    est.trace.rows.push_back(row);
    if (observer) observer(k, est.g_hat, t);

    est.g_hat = exp_map_embedded(est.g_hat, grad, t);
    if ((k + 1) % kReprojectEvery == 0) reproject_blocks(est.g_hat);
  }
  return est;
}

Estimate gpm_solve(const Observation& obs, const RotationStack& g0,
                   double tol, int max_iter, const IterateObserver& observer) {
  if (tol <= 0) throw InvariantViolation("tolerance must be positive");
  g0.check_valid();

  Estimate est;
  est.g_hat = g0;
  est.trace.status = SolveStatus::MaxIterations;
  const double threshold = tol * obs.n;

  for (int k = 0; k <= max_iter; ++k) {
    const double f = objective(obs.c, est.g_hat);
    const double gn = riemannian_grad(obs.c, est.g_hat).norm();
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      est.trace.status = SolveStatus::Aborted;
      est.trace.message = "non-finite objective at iteration " +
                          std::to_string(k);
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }
    if (gn <= threshold) {
      est.trace.status = SolveStatus::Converged;
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }
    if (k == max_iter) {
      est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
      if (observer) observer(k, est.g_hat, 0.0);
      break;
    }

    est.trace.rows.push_back(make_row(obs, est.g_hat, k, f, gn));
    if (observer) observer(k, est.g_hat, 0.0);

    const Matrix m = obs.c * est.g_hat.blocks;
    Matrix next(obs.n * obs.d, obs.d);
    try {
      for (int i = 0; i < obs.n; ++i) {
        const Matrix b = m.middleRows(i * obs.d, obs.d);
        next.middleRows(i * obs.d, obs.d) =
            (est.g_hat.group == Group::SpecialOrthogonal)
                ? project_special_orthogonal(b)
                : project_orthogonal(b);
      }
    } catch (const DegenerateProjection& e) {
      est.trace.status = SolveStatus::Aborted;
      est.trace.message = std::string("projection degenerate at iteration ") +
                          std::to_string(k) + ": " + e.what();
      break;
    }
    est.g_hat.blocks = std::move(next);
  }
  return est;
}

void write_trace_csv(std::ostream& os, const SolveTrace& trace) {
  os << "iter,f,grad_norm,stepsize,dist_f_ref,dist_inf_ref\n";
  os << std::setprecision(17);
  for (const auto& r : trace.rows) {
    os << r.k << ',' << r.f << ',' << r.grad_norm << ',' << r.stepsize << ',';
    if (r.has_ref)
      os << r.dist_f_ref << ',' << r.dist_inf_ref;
    else
      os << ',';
    os << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const SolveTrace& trace) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_trace_csv(os, trace);
}

}  // namespace rotsync
