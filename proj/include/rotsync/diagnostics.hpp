#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotsync/estimators.hpp"

namespace rotsync {

// Numerical certification of the geometric identities and inequality
// guarantees on concrete instances. Every check computes both sides of its
// inequality and reports a signed margin; checks whose noise-level or
// region hypotheses fail report "inapplicable" rather than "fail".

enum class CheckStatus { Pass, Fail, Inapplicable };
std::string check_status_name(CheckStatus s);

struct CertEntry {
  std::string check;   // producing operation, e.g. "l2_error"
  std::string anchor;  // identifier of the certified fact
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  CheckStatus status = CheckStatus::Inapplicable;
  std::string note;
};

struct CertReport {
  int n = 0;
  int d = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<CertEntry> entries;

  void add(CertEntry e) { entries.push_back(std::move(e)); }
  void append(const CertReport& other);
  bool all_applicable_pass() const;
  int count(CheckStatus s) const;
};

std::string report_to_json(const CertReport& report);
void write_report_file(const std::string& path, const CertReport& report);

// Entry builders. Inequalities are one-sided lhs <= rhs with additive
// tolerance 1e-6 * max(1, |rhs|) unless a custom tolerance is given.
CertEntry ineq_entry(const std::string& check, const std::string& anchor,
                     double lhs, double rhs);
CertEntry ineq_entry_tol(const std::string& check, const std::string& anchor,
                         double lhs, double rhs, double tol);
CertEntry identity_entry(const std::string& check, const std::string& anchor,
                         double value, double target, double rel_tol);
CertEntry inapplicable_entry(const std::string& check,
                             const std::string& anchor,
                             const std::string& why);

/// Converged reference solution treated as the global maximizer: gradient
/// ascent from the spectral start to tol 1e-12, then 50 projected-power
/// polish steps.
RotationStack reference_optimum(const Observation& obs,
                                Group target = Group::SpecialOrthogonal);

/// A solver run with its full iterate history, for trace-sweep checks.
struct RunCapture {
  Estimate est;
  std::vector<RotationStack> iterates;  // aligned with est.trace.rows
};

RunCapture capture_rgm(const Observation& obs, const RotationStack& g0,
                       const StepsizePolicy& policy, double tol = 1e-10,
                       int max_iter = 5000);

/// Skew decomposition of the gap to a reference: q_star aligns g to g_ref
/// and e_star holds the per-block principal logs, so that
/// ref_i = g_i exp(E*_i) q_star with the stated reconstruction residual.
struct AlignmentDecomposition {
  Matrix q_star;
  SkewStack e_star;
  double e_norm_f = 0.0;
  double e_norm_inf = 0.0;
  double recon_residual = 0.0;
};

AlignmentDecomposition align_decompose(const RotationStack& g,
                                       const RotationStack& g_ref);

// --- individual checks ------------------------------------------------------

/// d_F([G],[G*]) <= 4 sqrt(d) ||D|| / sqrt(n), the singular-value sandwich
/// of G*^T G, and the block-row singular lower bound. Requires the estimate
/// to attain at least the truth's objective value.
void check_l2_error(const Observation& obs, const RotationStack& g,
                    CertReport& report);

/// Aligned blockwise error ||G Q* - G*||_inf <= 8 ||D G*||_inf / n under
/// ||D|| <= n/(6 sqrt(d)); adds the SO-component tightness entry when the
/// bound is below sqrt(2).
void check_linf_error(const Observation& obs, const RotationStack& g,
                      CertReport& report);

/// Same bound evaluated on the unrounded spectral basis Phi.
void check_linf_error_basis(const Observation& obs, const Matrix& phi,
                            CertReport& report);

/// Spectral estimator error bounds (both the class distance and the aligned
/// blockwise bound) under the spectral hypothesis set.
void check_spectral_bounds(const Observation& obs, CertReport& report);

/// min over horizontal probes of -<Hess f [H], H> / <H, H> at g, which must
/// be >= n/5 - 1e-6 n inside the region. Uses `probes` random directions
/// plus the exhaustive horizontal basis when nd <= 60.
void check_hessian_pd(const Observation& obs, const RotationStack& g,
                      const RotationStack& g_hat, const RegionSpec& region,
                      int probes, std::uint64_t probe_seed,
                      CertReport& report);

/// d_F([G],[G_hat]) <= (10/n) ||grad f(G)||_F inside the region.
void check_error_bound(const Observation& obs, const RotationStack& g,
                       const RotationStack& g_hat, const RegionSpec& region,
                       CertReport& report);

/// Error bound swept over every in-region iterate of a captured run;
/// reports the worst excess in one entry.
void check_error_bound_run(const Observation& obs, const RunCapture& run,
                           const RotationStack& g_hat,
                           const RegionSpec& region, CertReport& report);

/// Empirical gap-contraction factor of a finished run (geometric-mean ratio
/// of successive objective gaps to the final value over the middle third);
/// NaN when the trace is too short to fit.
double fit_gap_rate(const SolveTrace& trace);

/// Per-iteration sufficient ascent, the cost-to-go estimate, and the
/// quadratic gap identity through D(G_hat), evaluated on a captured run.
void check_ascent_and_gap(const Observation& obs, const RunCapture& run,
                          const RotationStack& g_hat, CertReport& report);

/// Q-linear decay of the objective gap (gap_k <= gap_0 lambda^k with fitted
/// lambda < 1), log-linearity of the gap over the middle third, and R-linear
/// decay of the iterate distances.
void check_linear_rate(const RunCapture& run, const Observation& obs,
                       const RotationStack& g_hat, CertReport& report);

/// One gradient step preserves the d = 3 trust region: hypotheses on the
/// skew decomposition at g, conclusion bounds at g+.
void check_stay_in_ball(const Observation& obs, const RotationStack& g,
                        double stepsize, CertReport& report);

/// Region membership across every iterate of a captured run (d = 3).
void check_stay_in_ball_run(const Observation& obs, const RunCapture& run,
                            CertReport& report);

/// ||Q - I||_F bound for the aligner of two stacks near a common anchor,
/// both the exact fraction and the simplified 4 min(eps)/sqrt(n) form.
void check_alignment_lemma(const RotationStack& g, const RotationStack& h1,
                           const RotationStack& h2, CertReport& report);

/// d_inf <= d_F <= d_Q <= d_G with 1e-6 slack; the Riemannian legs are
/// dropped (with a note) when a relative rotation sits on the branch cut.
void check_distance_chain(const RotationStack& x, const RotationStack& y,
                          CertReport& report);

/// Closed-geodesic identity exp(Lambda_{2 pi}) = I with ||Lambda||_F =
/// 2 sqrt(2) pi, the log/exp roundtrip inside the injectivity radius, and a
/// just-past-radius probe that must break the roundtrip.
void check_radius(std::uint64_t seed, CertReport& report);

/// The flipped-block first-order critical point (d = 2, no noise): zero
/// gradient, strictly suboptimal value, and a horizontal direction of
/// positive curvature; records its class distance to the optimum.
void focp_example(int n, std::uint64_t seed, CertReport& report);

/// The reference optimum lies well inside the region: d_F <= rho_F / 2 and
/// aligned blockwise error <= rho_inf / 2 under the stronger noise bound.
void check_optimum_in_region(const Observation& obs,
                             const RotationStack& g_hat, CertReport& report);

}  // namespace rotsync
