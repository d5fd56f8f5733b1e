#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotsync/stack.hpp"

namespace rotsync {

/// Ground truth G* in SO(d)^n together with the seed that generated it.
struct GroundTruth {
  RotationStack g_star;
  std::uint64_t seed = 0;
};

/// Symmetric additive noise with zero diagonal blocks.
struct NoiseMatrix {
  enum class Kind { Gaussian, Custom };
  Matrix delta;  // nd x nd, delta_ji = delta_ij^T, delta_ii = 0
  int n = 0;
  int d = 0;
  double sigma = 0.0;
  Kind kind = Kind::Gaussian;
  /// Norm of the change made to a custom input while enforcing the
  /// symmetry / zero-diagonal invariants (0 for generated noise).
  double sanitize_residual = 0.0;
};

/// The measurement matrix C = G* G*^T + Delta with cached noise statistics.
struct Observation {
  Matrix c;  // nd x nd symmetric
  int n = 0;
  int d = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  bool has_truth = false;
  RotationStack g_star;    // valid iff has_truth
  Matrix delta;            // valid iff has_truth
  double op_norm_delta = 0.0;    // ||Delta||
  double delta_gstar_inf = 0.0;  // max_i ||(Delta G*)_i||_F

  Eigen::Index size() const { return c.rows(); }
};

/// i.i.d. Haar blocks in SO(d); deterministic per seed and independent of
/// evaluation order (one PRNG stream per block).
GroundTruth random_rotation_stack(int n, int d, std::uint64_t seed);

/// Upper blocks (i < j) are sigma * standard Gaussian, mirrored by
/// transpose; diagonal blocks zero. Stream keyed by (seed, i, j).
NoiseMatrix gaussian_noise(int n, int d, double sigma, std::uint64_t seed);

/// Wrap an arbitrary matrix as noise: symmetrize, zero the diagonal blocks,
/// and record how much that changed the input.
NoiseMatrix custom_noise(int n, int d, const Matrix& m);

/// Rescale so that ||delta|| equals the target operator norm exactly.
NoiseMatrix scale_to_op_norm(const NoiseMatrix& noise, double target);

/// Operator norm of a symmetric matrix: dense eigensolve up to 2000 rows,
/// power iteration (1e-8 relative tolerance) above.
double sym_op_norm(const Matrix& m);
double sym_op_norm_power(const Matrix& m, double rel_tol = 1e-8);

Observation assemble_observation(const GroundTruth& gt,
                                 const NoiseMatrix& noise);

/// Observation carrying only C (no truth; noise statistics unavailable).
Observation observation_from_c(Matrix c, int n, int d, double sigma,
                               std::uint64_t seed);

/// Region radii of the strong-concavity neighborhood:
/// rho_f = (1/10) min(sqrt(n), n/||Delta||), rho_inf = 1/4.
struct RegionSpec {
  double rho_f = 0.0;
  double rho_inf = 0.25;
  static RegionSpec from_observation(const Observation& obs);
};

/// The noise-level hypothesis sets under which the certified facts hold.
enum class HypothesisSet {
  LinfError,          // ||D|| <= n / (6 sqrt(d))
  StrongConcavity,    // ||D|| <= n^{3/4}/(20 sqrt(d)),  ||D G*||_inf <= n/20
  OptimumInRegion,    // ||D|| <= n^{3/4}/(80 sqrt(d)),  ||D G*||_inf <= n/40
  StayInBall,         // ||D|| <= n/50,                  ||D G*||_inf <= n/400
  SpectralError,      // ||D|| <= n^{3/4}/(20 sqrt(d)),  ||D G*||_inf <= n/(40 d)
  GlobalConvergence,  // ||D|| <= n^{3/4}/(80 sqrt(d)),  ||D G*||_inf <= n/(400 d)
};

std::string hypothesis_set_name(HypothesisSet set);

struct HypothesisCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;
};

struct AdmissibilityReport {
  HypothesisSet set;
  std::vector<HypothesisCheck> checks;
  bool all_pass = false;
};

/// Evaluate every hypothesis of the given set on the realized noise.
/// Requires the truth handle (statistics are cached at assembly).
AdmissibilityReport admissibility(const Observation& obs, HypothesisSet set);

// ---------------------------------------------------------------------------
// OBS v1 text format: header "n d sigma seed", optional STACK v1 ground
// truth, then nd rows of nd floats for C.
// ---------------------------------------------------------------------------

void write_observation(std::ostream& os, const Observation& obs);
void write_observation_file(const std::string& path, const Observation& obs);
Observation read_observation(std::istream& is);
Observation read_observation_file(const std::string& path);

}  // namespace rotsync
