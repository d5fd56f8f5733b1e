#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotsync/problem.hpp"
#include "rotsync/quotient.hpp"

namespace rotsync {

enum class StepMode { Fixed, Safe };

/// Stepsize rule for the gradient method. In safe mode the emitted step is
/// t_k = (1 - alpha) / (n(d+1) + ||D|| + sqrt(d) ||D G^k||_inf) whenever the
/// noise statistics are available, and the conservative 1/(4nd) otherwise.
struct StepsizePolicy {
  StepMode mode = StepMode::Safe;
  double t_fixed = 0.0;  // 0 -> 1/(4 n d) chosen at solve time
  double alpha = 0.5;    // ascent fraction, in (0, 1)
  double t_floor = 0.0;  // 0 -> t_fixed / 10 chosen at solve time
};

/// Conservative fallback step 1/(4nd).
double conservative_stepsize(int n, int d);

/// One evaluation of the safe rule at g (exact statistics when the truth is
/// attached, conservative fallback otherwise).
double safe_stepsize(const Observation& obs, const RotationStack& g,
                     double alpha);

struct TraceRow {
  int k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double stepsize = 0.0;  // step taken to leave iterate k; 0 on the last row
  double dist_f_ref = 0.0;
  double dist_inf_ref = 0.0;
  bool has_ref = false;
};

enum class SolveStatus { Converged, MaxIterations, Aborted };

struct SolveTrace {
  std::vector<TraceRow> rows;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  int iterations() const { return static_cast<int>(rows.size()) - 1; }
};

enum class InitKind { Spectral, Custom };

struct Estimate {
  RotationStack g_hat;
  SolveTrace trace;
  InitKind init_kind = InitKind::Custom;
};

/// The scaled top-d eigenvector matrix Phi of C, with Phi^T Phi = n I_d.
/// Throws DegenerateEigengap when the top-d eigenspace is not separated
/// (gap <= 1e-10 n).
Matrix spectral_basis(const Observation& obs);

/// Blockwise group projection of Phi.
RotationStack spectral_init(const Observation& obs,
                            Group target = Group::SpecialOrthogonal);

using IterateObserver =
    std::function<void(int k, const RotationStack& g, double stepsize)>;

/// Riemannian gradient ascent G^{k+1} = Exp_{G^k}(t_k grad f(G^k)). Stops
/// when ||grad||_F <= tol * n or after max_iter steps. The observer, when
/// set, sees every iterate (including G^0 with the step about to be taken
/// and the terminal iterate with step 0).
Estimate rgm_solve(const Observation& obs, const RotationStack& g0,
                   const StepsizePolicy& policy, double tol = 1e-10,
                   int max_iter = 5000,
                   const IterateObserver& observer = nullptr);

/// Projected power baseline G^{k+1} = Pi(C G^k), same stopping rule.
Estimate gpm_solve(const Observation& obs, const RotationStack& g0,
                   double tol = 1e-10, int max_iter = 5000,
                   const IterateObserver& observer = nullptr);

/// CSV schema: iter,f,grad_norm,stepsize,dist_f_ref,dist_inf_ref
/// (ref columns empty when no truth was attached).
void write_trace_csv(std::ostream& os, const SolveTrace& trace);
void write_trace_csv_file(const std::string& path, const SolveTrace& trace);

}  // namespace rotsync
