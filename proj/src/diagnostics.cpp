#include "rotsync/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "rotsync/random.hpp"

namespace rotsync {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double default_tol(double rhs) { return 1e-6 * std::max(1.0, std::abs(rhs)); }

}  // namespace

std::string check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Inapplicable: return "inapplicable";
  }
  return "unknown";
}

void CertReport::append(const CertReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

bool CertReport::all_applicable_pass() const {
  for (const auto& e : entries)
    if (e.status == CheckStatus::Fail) return false;
  return true;
}

int CertReport::count(CheckStatus s) const {
  int c = 0;
  for (const auto& e : entries)
    if (e.status == s) ++c;
  return c;
}

CertEntry ineq_entry_tol(const std::string& check, const std::string& anchor,
                         double lhs, double rhs, double tol) {
  CertEntry e;
  e.check = check;
  e.anchor = anchor;
  e.lhs = lhs;
  e.rhs = rhs;
  e.margin = rhs - lhs;
  e.status = (lhs <= rhs + tol) ? CheckStatus::Pass : CheckStatus::Fail;
  return e;
}

CertEntry ineq_entry(const std::string& check, const std::string& anchor,
                     double lhs, double rhs) {
  return ineq_entry_tol(check, anchor, lhs, rhs, default_tol(rhs));
}

CertEntry identity_entry(const std::string& check, const std::string& anchor,
                         double value, double target, double rel_tol) {
  CertEntry e;
  e.check = check;
  e.anchor = anchor;
  e.lhs = value;
  e.rhs = target;
  const double scale = std::max({1.0, std::abs(value), std::abs(target)});
  e.margin = rel_tol * scale - std::abs(value - target);
  e.status = (std::abs(value - target) <= rel_tol * scale)
                 ? CheckStatus::Pass
                 : CheckStatus::Fail;
  return e;
}

CertEntry inapplicable_entry(const std::string& check,
                             const std::string& anchor,
                             const std::string& why) {
  CertEntry e;
  e.check = check;
  e.anchor = anchor;
  e.status = CheckStatus::Inapplicable;
  e.note = why;
  return e;
}

std::string report_to_json(const CertReport& report) {
  nlohmann::json j;
  j["instance"] = {{"n", report.n},
                   {"d", report.d},
                   {"sigma", report.sigma},
                   {"seed", report.seed}};
  j["checks"] = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json je = {{"check", e.check},     {"anchor", e.anchor},
                         {"lhs", e.lhs},         {"rhs", e.rhs},
                         {"margin", e.margin},   {"status", check_status_name(e.status)}};
    if (!e.note.empty()) je["note"] = e.note;
    j["checks"].push_back(je);
  }
  j["summary"] = {{"pass", report.count(CheckStatus::Pass)},
                  {"fail", report.count(CheckStatus::Fail)},
                  {"inapplicable", report.count(CheckStatus::Inapplicable)},
                  {"overall", report.all_applicable_pass() ? "pass" : "fail"}};
  return j.dump(2);
}

void write_report_file(const std::string& path, const CertReport& report) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << report_to_json(report) << '\n';
}

RotationStack reference_optimum(const Observation& obs, Group target) {
  StepsizePolicy policy;
  policy.mode = StepMode::Safe;
  policy.alpha = 0.5;
  const RotationStack g0 = spectral_init(obs, target);
  Estimate est = rgm_solve(obs, g0, policy, 1e-12, 20000);
  Estimate polished = gpm_solve(obs, est.g_hat, 1e-15, 50);
  return polished.g_hat;
}

RunCapture capture_rgm(const Observation& obs, const RotationStack& g0,
                       const StepsizePolicy& policy, double tol,
                       int max_iter) {
  RunCapture run;
  run.est = rgm_solve(obs, g0, policy, tol, max_iter,
                      [&run](int, const RotationStack& g, double) {
                        run.iterates.push_back(g);
                      });
  return run;
}

AlignmentDecomposition align_decompose(const RotationStack& g,
                                       const RotationStack& g_ref) {
  // q_star = argmin_Q ||g Q - ref||_F, then ref_i = g_i exp(E_i) q_star.
  const Alignment a = procrustes_align(g_ref, g);
  AlignmentDecomposition dec;
  dec.q_star = a.q;
  Matrix e(g.n * g.d, g.d);
  for (int i = 0; i < g.n; ++i) {
    const Matrix rel =
        g.block(i).transpose() * g_ref.block(i) * dec.q_star.transpose();
    e.middleRows(i * g.d, g.d) = skew_log(rel);
  }
  dec.e_star = SkewStack(e, g.n, g.d);
  dec.e_norm_f = dec.e_star.norm();
  dec.e_norm_inf = dec.e_star.norm_inf();
  dec.recon_residual = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double r = (g.block(i) * skew_exp(dec.e_star.block(i)) * dec.q_star -
                      g_ref.block(i))
                         .norm();
    dec.recon_residual = std::max(dec.recon_residual, r);
  }
  if (dec.recon_residual > 1e-9)
    throw InvariantViolation("skew decomposition reconstruction residual " +
                             std::to_string(dec.recon_residual));
  return dec;
}

// --- l2 / linf estimation ----------------------------------------------------

void check_l2_error(const Observation& obs, const RotationStack& g,
                    CertReport& report) {
  const std::string op = "l2_error";
  if (!obs.has_truth) {
    report.add(inapplicable_entry(op, "l2-error-bound", "no truth attached"));
    return;
  }
  const double f_g = objective(obs.c, g);
  const double f_star = objective(obs.c, obs.g_star);
  if (f_g < f_star - 1e-9 * std::max(1.0, std::abs(f_star))) {
    report.add(inapplicable_entry(
        op, "l2-error-bound",
        "estimate does not attain the truth's objective value"));
    return;
  }
  const double n = obs.n, d = obs.d;
  const Alignment a = procrustes_align(g, obs.g_star);
  report.add(ineq_entry(op, "l2-error-bound", a.dist_f,
                        4.0 * std::sqrt(d) * obs.op_norm_delta / std::sqrt(n)));

  const Matrix overlap = obs.g_star.blocks.transpose() * g.blocks;
  Eigen::JacobiSVD<Matrix> svd(overlap);
  const auto& sv = svd.singularValues();
  const double sv_bound = n - 8.0 * d * obs.op_norm_delta * obs.op_norm_delta / n;
  report.add(ineq_entry(op, "overlap-singular-upper", sv(0), n));
  report.add(
      ineq_entry(op, "overlap-singular-lower", sv_bound, sv(sv.size() - 1)));

  const Matrix cg = obs.c * g.blocks;
  double min_sigma = std::numeric_limits<double>::infinity();
  for (int i = 0; i < obs.n; ++i) {
    Eigen::JacobiSVD<Matrix> bsvd(cg.middleRows(i * obs.d, obs.d));
    min_sigma = std::min(min_sigma,
                         bsvd.singularValues()(bsvd.singularValues().size() - 1));
  }
  const double dginf = block_norm_inf(obs.delta * g.blocks, obs.n, obs.d);
  report.add(
      ineq_entry(op, "block-row-singular-lower", sv_bound - dginf, min_sigma));
}

namespace {

void linf_core(const Observation& obs, const Matrix& blocks,
               const std::string& op, bool group_stack, CertReport& report) {
  if (!obs.has_truth) {
    report.add(inapplicable_entry(op, "linf-error-bound", "no truth attached"));
    return;
  }
  const double n = obs.n, d = obs.d;
  const AdmissibilityReport adm = admissibility(obs, HypothesisSet::LinfError);
  if (!adm.all_pass || obs.n < 2) {
    report.add(inapplicable_entry(op, "linf-error-bound",
                                  "noise hypothesis violated"));
    return;
  }
  const Alignment a =
      procrustes_align(blocks, obs.g_star.blocks, obs.n, obs.d);
  const double rhs = 8.0 * obs.delta_gstar_inf / n;
  report.add(ineq_entry(op, "linf-error-bound", a.dist_inf, rhs));

  if (group_stack && rhs + default_tol(rhs) < M_SQRT2) {
    // Bound below sqrt(2) pins every block to the truth's component.
    double worst = 0.0;
    for (int i = 0; i < obs.n; ++i)
      worst = std::max(worst,
                       std::abs(blocks.middleRows(i * d, d).determinant() - 1.0));
    report.add(ineq_entry_tol(op, "so-component-tightness", worst, 0.0, 1e-6));
  }
}

}  // namespace

void check_linf_error(const Observation& obs, const RotationStack& g,
                      CertReport& report) {
  linf_core(obs, g.blocks, "linf_error", true, report);
}

void check_linf_error_basis(const Observation& obs, const Matrix& phi,
                            CertReport& report) {
  linf_core(obs, phi, "linf_error_basis", false, report);
}

void check_spectral_bounds(const Observation& obs, CertReport& report) {
  const std::string op = "spectral_bounds";
  if (!obs.has_truth) {
    report.add(inapplicable_entry(op, "spectral-l2-bound", "no truth attached"));
    return;
  }
  const AdmissibilityReport adm =
      admissibility(obs, HypothesisSet::SpectralError);
  if (!adm.all_pass) {
    report.add(inapplicable_entry(op, "spectral-l2-bound",
                                  "noise hypothesis violated"));
    return;
  }
  const double n = obs.n, d = obs.d;
  const RotationStack g0 = spectral_init(obs, obs.g_star.group);
  const Alignment a = procrustes_align(g0, obs.g_star);
  report.add(ineq_entry(op, "spectral-l2-bound", a.dist_f,
                        8.0 * std::sqrt(d) * obs.op_norm_delta / std::sqrt(n)));
  report.add(ineq_entry(op, "spectral-linf-bound", a.dist_inf,
                        16.0 * obs.delta_gstar_inf / n +
                            8.0 * std::sqrt(d) * obs.op_norm_delta / n));
}

// --- landscape ---------------------------------------------------------------

namespace {

bool in_region(const RotationStack& g, const RotationStack& g_hat,
               const RegionSpec& region, std::string* why) {
  const Alignment a = procrustes_align(g, g_hat);
  if (a.dist_f > region.rho_f) {
    *why = "d_F to the reference exceeds rho_F";
    return false;
  }
  if (a.dist_inf > region.rho_inf) {
    *why = "aligned blockwise distance exceeds rho_inf";
    return false;
  }
  return true;
}

/// Orthonormal-free horizontal basis: for each skew basis element S and each
/// agent i < n-1... the i-th stack has E_i = S, E_{n-1} = -S, rest zero.
std::vector<Matrix> horizontal_basis(const RotationStack& g) {
  std::vector<Matrix> basis;
  const int n = g.n, d = g.d;
  for (int i = 0; i + 1 < n; ++i) {
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        Matrix e = Matrix::Zero(n * d, d);
        e(i * d + q, p) = 1.0;
        e(i * d + p, q) = -1.0;
        e((n - 1) * d + q, p) = -1.0;
        e((n - 1) * d + p, q) = 1.0;
        basis.push_back(embed_tangent(g, SkewStack(e, n, d, true)));
      }
    }
  }
  return basis;
}

}  // namespace

void check_hessian_pd(const Observation& obs, const RotationStack& g,
                      const RotationStack& g_hat, const RegionSpec& region,
                      int probes, std::uint64_t probe_seed,
                      CertReport& report) {
  const std::string op = "hessian_pd";
  std::string why;
  if (!in_region(g, g_hat, region, &why)) {
    report.add(inapplicable_entry(op, "hessian-strong-concavity", why));
    return;
  }
  double min_rayleigh = std::numeric_limits<double>::infinity();
  Prng prng(probe_seed, 0x686573);
  for (int p = 0; p < probes; ++p) {
    const Matrix h = random_horizontal(g, prng);
    const double hh = h.squaredNorm();
    if (hh < 1e-300) continue;
    const double q = -(hess_vec(obs.c, g, h).cwiseProduct(h)).sum() / hh;
    min_rayleigh = std::min(min_rayleigh, q);
  }

  std::string note = std::to_string(probes) + " random probes";
  if (static_cast<long>(obs.n) * obs.d <= 60) {
    // Exact smallest Rayleigh quotient over the horizontal space via the
    // generalized eigenproblem in a spanning basis.
    const auto basis = horizontal_basis(g);
    const int m = static_cast<int>(basis.size());
    Matrix form(m, m), gram(m, m);
    std::vector<Matrix> hv;
    hv.reserve(m);
    for (const auto& b : basis) hv.push_back(hess_vec(obs.c, g, b));
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        form(a, b) = form(b, a) =
            -0.5 * ((hv[a].cwiseProduct(basis[b])).sum() +
                    (hv[b].cwiseProduct(basis[a])).sum());
        gram(a, b) = gram(b, a) = (basis[a].cwiseProduct(basis[b])).sum();
      }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(form, gram);
    min_rayleigh = std::min(min_rayleigh, ges.eigenvalues()(0));
    note += " + exhaustive horizontal basis";
  }

  CertEntry e = ineq_entry_tol(op, "hessian-strong-concavity", obs.n / 5.0,
                               min_rayleigh, 1e-6 * obs.n);
  e.note = note;
  report.add(e);
}

void check_error_bound(const Observation& obs, const RotationStack& g,
                       const RotationStack& g_hat, const RegionSpec& region,
                       CertReport& report) {
  const std::string op = "error_bound";
  std::string why;
  if (!in_region(g, g_hat, region, &why)) {
    report.add(inapplicable_entry(op, "local-error-bound", why));
    return;
  }
  const double lhs = procrustes_align(g, g_hat).dist_f;
  const double rhs = (10.0 / obs.n) * riemannian_grad(obs.c, g).norm();
  report.add(ineq_entry(op, "local-error-bound", lhs, rhs));
}

void check_error_bound_run(const Observation& obs, const RunCapture& run,
                           const RotationStack& g_hat,
                           const RegionSpec& region, CertReport& report) {
  const std::string op = "error_bound_run";
  int in_region_count = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  double rhs_scale = 1.0;
  std::string why;
  for (const auto& g : run.iterates) {
    if (!in_region(g, g_hat, region, &why)) continue;
    ++in_region_count;
    const double lhs = procrustes_align(g, g_hat).dist_f;
    const double rhs = (10.0 / obs.n) * riemannian_grad(obs.c, g).norm();
    rhs_scale = std::max(rhs_scale, std::abs(rhs));
    worst_excess = std::max(worst_excess, lhs - rhs);
  }
  if (in_region_count == 0) {
    report.add(inapplicable_entry(op, "local-error-bound",
                                  "no iterate inside the region"));
    return;
  }
  CertEntry e = ineq_entry_tol(op, "local-error-bound", worst_excess, 0.0,
                               1e-6 * rhs_scale);
  e.note = std::to_string(in_region_count) + " in-region iterates";
  report.add(e);
}

double fit_gap_rate(const SolveTrace& trace) {
  const auto& rows = trace.rows;
  if (rows.size() < 8) return std::numeric_limits<double>::quiet_NaN();
  const double f_ref = rows.back().f;
  std::vector<double> gaps;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double gap = f_ref - rows[k].f;
    if (gap <= 1e-12 * std::max(1.0, std::abs(f_ref))) break;
    gaps.push_back(gap);
  }
  const int m = static_cast<int>(gaps.size());
  if (m < 6) return std::numeric_limits<double>::quiet_NaN();
  const int a = m / 3, b = (2 * m) / 3;
  if (b <= a) return std::numeric_limits<double>::quiet_NaN();
  return std::pow(gaps[b] / gaps[a], 1.0 / static_cast<double>(b - a));
}

// --- solver run certificates -------------------------------------------------

void check_ascent_and_gap(const Observation& obs, const RunCapture& run,
                          const RotationStack& g_hat, CertReport& report) {
  const std::string op = "ascent_and_gap";
  const auto& rows = run.est.trace.rows;
  if (rows.size() < 2 || run.iterates.size() != rows.size()) {
    report.add(
        inapplicable_entry(op, "sufficient-ascent", "run too short to check"));
    return;
  }
  if (!obs.has_truth) {
    report.add(inapplicable_entry(op, "sufficient-ascent",
                                  "noise statistics unavailable"));
    return;
  }

  const double n = obs.n, d = obs.d;
  double fmax = 1.0;
  for (const auto& r : rows) fmax = std::max(fmax, std::abs(r.f));
  const double f_slack = 256.0 * std::numeric_limits<double>::epsilon() * fmax;

  double worst_ascent = -std::numeric_limits<double>::infinity();
  double min_alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double t = rows[k].stepsize;
    if (t <= 0) continue;
    const double dginf =
        block_norm_inf(obs.delta * run.iterates[k].blocks, obs.n, obs.d);
    const double denom =
        n * (d + 1) + obs.op_norm_delta + std::sqrt(d) * dginf;
    const double alpha_k = 1.0 - t * denom;
    min_alpha = std::min(min_alpha, alpha_k);
    const double promised = alpha_k * t * rows[k].grad_norm * rows[k].grad_norm;
    worst_ascent =
        std::max(worst_ascent, promised - (rows[k + 1].f - rows[k].f));
  }
  if (min_alpha <= 0) {
    report.add(inapplicable_entry(op, "sufficient-ascent",
                                  "stepsize exceeds the admissible range"));
  } else {
    CertEntry e =
        ineq_entry_tol(op, "sufficient-ascent", worst_ascent, 0.0, f_slack);
    e.note = "worst over " + std::to_string(rows.size() - 1) +
             " iterations; implied alpha >= " + std::to_string(min_alpha);
    report.add(e);
  }

  // Cost-to-go: f(ref) - f(G^k) <= (2n + ||D|| + ||D ref||_inf) d_F^2.
  const double f_hat = objective(obs.c, g_hat);
  const double dig_hat =
      block_norm_inf(obs.delta * g_hat.blocks, obs.n, obs.d);
  const double coeff = 2.0 * n + obs.op_norm_delta + dig_hat;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double df = procrustes_align(run.iterates[k], g_hat).dist_f;
    worst_gap = std::max(worst_gap, (f_hat - rows[k].f) - coeff * df * df);
  }
  CertEntry gap_entry = ineq_entry_tol(op, "cost-to-go", worst_gap, 0.0,
                                       1e-6 * std::max(1.0, std::abs(f_hat)));
  gap_entry.note = "worst over " + std::to_string(rows.size()) + " iterates";
  report.add(gap_entry);

  // Quadratic gap identity through D(ref): evaluated at random points near
  // the reference.
  Matrix d_ghat = -obs.c;
  {
    const Matrix m = obs.c * g_hat.blocks;
    for (int i = 0; i < obs.n; ++i) {
      Eigen::JacobiSVD<Matrix> svd(m.middleRows(i * obs.d, obs.d),
                                   Eigen::ComputeFullU);
      d_ghat.block(i * obs.d, i * obs.d, obs.d, obs.d) +=
          svd.matrixU() * svd.singularValues().asDiagonal() *
          svd.matrixU().transpose();
    }
  }
  Prng prng(obs.seed, 0x646964);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix xi = random_horizontal(g_hat, prng);
    xi *= 0.05 * std::sqrt(n) / xi.norm();
    const RotationStack gp = exp_map_embedded(g_hat, xi);
    const Matrix q = procrustes_align(g_hat, gp).q;  // argmin ||gp q - ref||
    const Matrix diff = gp.blocks * q - g_hat.blocks;
    const double quad = (diff.cwiseProduct(d_ghat * diff)).sum();
    const double gap = f_hat - objective(obs.c, gp);
    const double scale = std::max({1.0, std::abs(gap), std::abs(quad)});
    worst_rel = std::max(worst_rel, std::abs(gap - quad) / scale);
  }
  CertEntry id_entry =
      ineq_entry_tol(op, "gap-quadratic-identity", worst_rel, 1e-6, 0.0);
  id_entry.note = "20 points near the reference";
  report.add(id_entry);
}

void check_linear_rate(const RunCapture& run, const Observation& obs,
                       const RotationStack& g_hat, CertReport& report) {
  const std::string op = "linear_rate";
  const auto& rows = run.est.trace.rows;
  const double f_hat = objective(obs.c, g_hat);
  const double gap_floor = 1e-12 * std::max(1.0, std::abs(f_hat));

  std::vector<double> gaps;
  for (const auto& r : rows) {
    const double gap = f_hat - r.f;
    if (gap <= gap_floor) break;
    gaps.push_back(gap);
  }
  const int m = static_cast<int>(gaps.size());
  if (m < 20) {
    report.add(inapplicable_entry(op, "q-linear-rate",
                                  "fewer than 20 usable iterations"));
    return;
  }

  double worst_increase = -std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < m; ++k)
    worst_increase = std::max(worst_increase, gaps[k + 1] - gaps[k]);
  report.add(ineq_entry_tol(op, "gap-monotone", worst_increase, 0.0,
                            1e-9 * std::max(1.0, std::abs(f_hat))));

  const int a = m / 3;
  const int b = (2 * m) / 3;
  const double lambda_hat =
      std::pow(gaps[b] / gaps[a], 1.0 / static_cast<double>(b - a));
  CertEntry rate = ineq_entry_tol(op, "q-linear-rate", lambda_hat,
                                  1.0 - 1e-3, 0.0);
  rate.note = "fitted on iterations [" + std::to_string(a) + ", " +
              std::to_string(b) + "]";
  report.add(rate);

  // Log-linearity of the gap over the middle third.
  {
    const int len = b - a + 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = a; k <= b; ++k) {
      const double x = k, y = std::log(gaps[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double mean_x = sx / len, mean_y = sy / len;
    const double beta =
        (sxy - len * mean_x * mean_y) / (sxx - len * mean_x * mean_x);
    double ss_res = 0, ss_tot = 0;
    for (int k = a; k <= b; ++k) {
      const double pred = mean_y + beta * (k - mean_x);
      ss_res += (std::log(gaps[k]) - pred) * (std::log(gaps[k]) - pred);
      ss_tot += (std::log(gaps[k]) - mean_y) * (std::log(gaps[k]) - mean_y);
    }
    const double r2 = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
    report.add(ineq_entry_tol(op, "rate-log-linearity", 0.95, r2, 0.0));
  }

  // R-linear decay of the iterate distances to the reference class.
  if (run.iterates.size() == rows.size()) {
    std::vector<double> dists;
    for (std::size_t k = 0; k < run.iterates.size() && k < gaps.size(); ++k) {
      const double df = procrustes_align(run.iterates[k], g_hat).dist_f;
      if (df <= 1e-9 * std::sqrt(static_cast<double>(obs.n))) break;
      dists.push_back(df);
    }
    if (dists.size() >= 12) {
      const int md = static_cast<int>(dists.size());
      const int da = md / 3, db = (2 * md) / 3;
      const double rho_hat =
          std::pow(dists[db] / dists[da], 1.0 / static_cast<double>(db - da));
      report.add(
          ineq_entry_tol(op, "r-linear-iterates", rho_hat, 1.0 - 1e-3, 0.0));
    }
  }
}

// --- trust region (d = 3) ----------------------------------------------------

namespace {

struct BallHypotheses {
  bool noise_ok = false;
  bool dist_ok = false;
  double dist_bound = 0.0;  // (1/200) min(sqrt(n), n/||D||)
  AlignmentDecomposition dec;
};

BallHypotheses ball_hypotheses(const Observation& obs,
                               const RotationStack& g) {
  BallHypotheses h;
  h.noise_ok = admissibility(obs, HypothesisSet::StayInBall).all_pass;
  h.dec = align_decompose(g, obs.g_star);
  const double sqn = std::sqrt(static_cast<double>(obs.n));
  h.dist_bound =
      (obs.op_norm_delta > 1e-300
           ? std::min(sqn, obs.n / obs.op_norm_delta)
           : sqn) /
      200.0;
  h.dist_ok = h.dec.e_norm_f <= h.dist_bound && h.dec.e_norm_inf <= 0.1;
  return h;
}

}  // namespace

void check_stay_in_ball(const Observation& obs, const RotationStack& g,
                        double stepsize, CertReport& report) {
  const std::string op = "stay_in_ball";
  if (g.d != 3 || !obs.has_truth) {
    report.add(inapplicable_entry(op, "stay-in-ball",
                                  "needs d = 3 and the truth handle"));
    return;
  }
  BallHypotheses h;
  try {
    h = ball_hypotheses(obs, g);
  } catch (const BranchAmbiguity&) {
    report.add(
        inapplicable_entry(op, "stay-in-ball", "skew decomposition at the cut"));
    return;
  }
  if (!h.noise_ok || !h.dist_ok || stepsize > 0.5 / obs.n + 1e-15) {
    report.add(inapplicable_entry(op, "stay-in-ball",
                                  "hypotheses violated at the base point"));
    return;
  }

  const Matrix grad = riemannian_grad(obs.c, g);
  const RotationStack g_plus = exp_map_embedded(g, grad, stepsize);
  const Alignment a = procrustes_align(g_plus, obs.g_star);
  report.add(ineq_entry(op, "stay-in-ball-dist", a.dist_f, h.dist_bound));
  report.add(ineq_entry(op, "stay-in-ball-inf", a.dist_inf, 0.1));
  try {
    const AlignmentDecomposition dec_plus = align_decompose(g_plus, obs.g_star);
    report.add(
        ineq_entry(op, "stay-in-ball-skew-dist", dec_plus.e_norm_f, h.dist_bound));
    report.add(ineq_entry(op, "stay-in-ball-skew-inf", dec_plus.e_norm_inf, 0.1));
  } catch (const BranchAmbiguity&) {
    CertEntry e = ineq_entry_tol(op, "stay-in-ball-skew-dist", 1.0, 0.0, 0.0);
    e.note = "decomposition at g+ hit the cut";
    report.add(e);
  }
}

void check_stay_in_ball_run(const Observation& obs, const RunCapture& run,
                            CertReport& report) {
  const std::string op = "stay_in_ball_run";
  if (obs.d != 3 || !obs.has_truth) {
    report.add(inapplicable_entry(op, "stay-in-ball-run",
                                  "needs d = 3 and the truth handle"));
    return;
  }
  if (!admissibility(obs, HypothesisSet::StayInBall).all_pass) {
    report.add(
        inapplicable_entry(op, "stay-in-ball-run", "noise hypothesis violated"));
    return;
  }
  for (const auto& r : run.est.trace.rows)
    if (r.stepsize > 0.5 / obs.n + 1e-15) {
      report.add(inapplicable_entry(op, "stay-in-ball-run",
                                    "stepsize above 1/(2n) in the run"));
      return;
    }

  double worst_f = 0.0, worst_inf = 0.0, bound = 0.0;
  try {
    for (const auto& g : run.iterates) {
      const BallHypotheses h = ball_hypotheses(obs, g);
      bound = h.dist_bound;
      worst_f = std::max(worst_f, h.dec.e_norm_f);
      worst_inf = std::max(worst_inf, h.dec.e_norm_inf);
    }
  } catch (const BranchAmbiguity&) {
    report.add(inapplicable_entry(op, "stay-in-ball-run",
                                  "skew decomposition at the cut mid-run"));
    return;
  }
  CertEntry ef = ineq_entry(op, "stay-in-ball-run-dist", worst_f, bound);
  ef.note = std::to_string(run.iterates.size()) + " iterates";
  report.add(ef);
  report.add(ineq_entry(op, "stay-in-ball-run-inf", worst_inf, 0.1));
}

// --- alignment / distances / radius -----------------------------------------

void check_alignment_lemma(const RotationStack& g, const RotationStack& h1,
                           const RotationStack& h2, CertReport& report) {
  const std::string op = "alignment_lemma";
  const double n = g.n;
  const double sqn = std::sqrt(n);

  const Alignment a1 = procrustes_align(h1, g);
  const Alignment a2 = procrustes_align(h2, g);
  const double raw1 = (h1.blocks - g.blocks).norm();
  const double raw2 = (h2.blocks - g.blocks).norm();
  if (std::abs(a1.dist_f - raw1) > 1e-8 * std::max(1.0, raw1) ||
      std::abs(a2.dist_f - raw2) > 1e-8 * std::max(1.0, raw2)) {
    report.add(inapplicable_entry(op, "alignment-rotation-bound",
                                  "inputs not in aligned position"));
    return;
  }
  const double eps1 = raw1 / sqn;
  const double eps2 = raw2 / sqn;
  if (eps1 >= 0.5 || eps2 >= 0.5) {
    report.add(inapplicable_entry(op, "alignment-rotation-bound",
                                  "perturbation above sqrt(n)/2"));
    return;
  }

  const Alignment a12 = procrustes_align(h2, h1);  // q = argmin ||h1 q - h2||
  const double lhs = (a12.q - Matrix::Identity(g.d, g.d)).norm();
  const double d12 = a12.dist_f;
  const double dmin = std::min(a1.dist_f, a2.dist_f);
  const double dmax2 =
      std::max(a1.dist_f * a1.dist_f, a2.dist_f * a2.dist_f);
  const double exact = 2.0 * dmin / (n - 2.0 * dmax2) * d12;
  const double simple = 4.0 * std::min(eps1, eps2) / sqn * d12;
  report.add(ineq_entry(op, "alignment-rotation-bound", lhs, exact));
  report.add(ineq_entry(op, "alignment-rotation-bound-simplified", lhs, simple));
}

void check_distance_chain(const RotationStack& x, const RotationStack& y,
                          CertReport& report) {
  const std::string op = "distance_chain";
  const Alignment a = procrustes_align(x, y);
  report.add(
      ineq_entry_tol(op, "chain-inf-le-f", a.dist_inf, a.dist_f, 1e-6));
  try {
    const QuotientDistance dq = quotient_riem_dist(x, y);
    const double dg = riemannian_dist(x, y);
    report.add(ineq_entry_tol(op, "chain-f-le-q", a.dist_f, dq.value, 1e-6));
    report.add(ineq_entry_tol(op, "chain-q-le-g", dq.value, dg, 1e-6));
  } catch (const BranchAmbiguity&) {
    CertEntry e = inapplicable_entry(op, "chain-f-le-q",
                                     "Riemannian legs dropped (branch cut)");
    report.add(e);
  }
}

void check_radius(std::uint64_t seed, CertReport& report) {
  const std::string op = "radius";
  Matrix lambda = Matrix::Zero(3, 3);
  lambda(0, 1) = -kTwoPi;
  lambda(1, 0) = kTwoPi;
  report.add(ineq_entry_tol(op, "closed-geodesic-identity",
                            (skew_exp(lambda) - Matrix::Identity(3, 3)).norm(),
                            1e-10, 0.0));
  report.add(ineq_entry_tol(op, "closed-geodesic-length",
                            std::abs(lambda.norm() - 2.0 * M_SQRT2 * M_PI),
                            1e-10, 0.0));

  Prng prng(seed, 0x726164);
  double worst = 0.0;
  const double radius = M_SQRT2 * M_PI - 1e-2;
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix e = random_skew(3, prng);
    const double target = prng.next_uniform() * radius;
    if (e.norm() < 1e-12) continue;
    e *= target / e.norm();
    const double err = (skew_log(skew_exp(e)) - e).norm() /
                       std::max(1.0, e.norm());
    worst = std::max(worst, err);
  }
  CertEntry rt = ineq_entry_tol(op, "log-roundtrip-radius", worst, 1e-10, 0.0);
  rt.note = "1000 samples inside the injectivity radius";
  report.add(rt);

  // One plane angle just past pi: the principal log must disagree.
  Matrix past = Matrix::Zero(3, 3);
  past(0, 1) = -(M_PI + 0.01);
  past(1, 0) = M_PI + 0.01;
  const double err_past = (skew_log(skew_exp(past)) - past).norm();
  report.add(
      ineq_entry_tol(op, "roundtrip-fails-past-radius", 0.1, err_past, 0.0));
}

void focp_example(int n, std::uint64_t seed, CertReport& report) {
  const std::string op = "focp_example";
  if (n < 3) {
    report.add(inapplicable_entry(op, "focp-gradient", "needs n >= 3"));
    return;
  }
  const GroundTruth gt = random_rotation_stack(n, 2, seed);
  const Observation obs =
      assemble_observation(gt, gaussian_noise(n, 2, 0.0, seed));

  RotationStack g = gt.g_star;
  g.block(0) = -g.block(0);  // -I_2 has det +1, so this stays in SO(2)^n
  g.check_valid();

  const double grad_norm = riemannian_grad(obs.c, g).norm();
  report.add(ineq_entry_tol(op, "focp-gradient", grad_norm, 1e-12, 0.0));

  const double gap = objective(obs.c, gt.g_star) - objective(obs.c, g);
  CertEntry sub = ineq_entry_tol(op, "focp-suboptimality", 1e-9, gap, 0.0);
  sub.note = "objective gap " + std::to_string(gap);
  report.add(sub);

  // A direction of positive curvature: rotate the flipped block back.
  double min_quad = std::numeric_limits<double>::infinity();
  {
    Matrix j(2, 2);
    j << 0, -1, 1, 0;
    Matrix t = Matrix::Zero(2 * n, 2);
    t.middleRows(0, 2) = g.block(0) * j;
    Matrix h = horizontal_project(g, t);
    if (h.norm() > 1e-12) {
      h /= h.norm();
      min_quad = 2.0 * hess_quadratic(obs.c, g, h);
    }
    Prng prng(seed, 0x666f63);
    for (int p = 0; p < 100; ++p) {
      Matrix hp = random_horizontal(g, prng);
      hp /= hp.norm();
      min_quad = std::min(min_quad, 2.0 * hess_quadratic(obs.c, g, hp));
    }
  }
  CertEntry curv;
  curv.check = op;
  curv.anchor = "focp-not-locally-concave";
  curv.lhs = min_quad;
  curv.rhs = 0.0;
  curv.margin = -min_quad;
  curv.status =
      min_quad < -1e-9 * n ? CheckStatus::Pass : CheckStatus::Fail;
  curv.note = "min of -<Hess H, H> over probes";
  report.add(curv);

  const Alignment a = procrustes_align(g, gt.g_star);
  CertEntry rec;
  rec.check = op;
  rec.anchor = "focp-distance-recorded";
  rec.lhs = a.dist_f;
  rec.rhs = a.dist_f;
  rec.margin = 0.0;
  rec.status = CheckStatus::Pass;
  rec.note = "d_F to the optimum class, recorded only";
  report.add(rec);
}

void check_optimum_in_region(const Observation& obs,
                             const RotationStack& g_hat, CertReport& report) {
  const std::string op = "optimum_in_region";
  if (!obs.has_truth) {
    report.add(
        inapplicable_entry(op, "optimum-in-region", "no truth attached"));
    return;
  }
  if (!admissibility(obs, HypothesisSet::OptimumInRegion).all_pass) {
    report.add(inapplicable_entry(op, "optimum-in-region",
                                  "noise hypothesis violated"));
    return;
  }
  const RegionSpec region = RegionSpec::from_observation(obs);
  const Alignment a = procrustes_align(g_hat, obs.g_star);
  report.add(
      ineq_entry(op, "optimum-in-region-dist", a.dist_f, 0.5 * region.rho_f));
  report.add(
      ineq_entry(op, "optimum-in-region-inf", a.dist_inf, 0.5 * region.rho_inf));
}

}  // namespace rotsync
