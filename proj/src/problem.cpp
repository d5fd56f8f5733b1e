#include "rotsync/problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rotsync/random.hpp"

namespace rotsync {

namespace {

constexpr std::uint64_t kTruthTag = 0x726f74;   // block stream tag
constexpr std::uint64_t kNoiseTag = 0x6e6f69;
constexpr int kDenseOpNormLimit = 2000;

void cache_noise_stats(Observation& obs) {
  obs.op_norm_delta = sym_op_norm(obs.delta);
  obs.delta_gstar_inf =
      block_norm_inf(obs.delta * obs.g_star.blocks, obs.n, obs.d);
}

}  // namespace

GroundTruth random_rotation_stack(int n, int d, std::uint64_t seed) {
  if (n < 2) throw InvariantViolation("need at least two agents");
  if (d < 2 || d > 8) throw InvariantViolation("d must be in [2, 8]");
  Matrix m(n * d, d);
  for (int i = 0; i < n; ++i) {
    Prng prng(seed, kTruthTag, static_cast<std::uint64_t>(i));
    m.middleRows(i * d, d) = random_rotation(d, prng);
  }
  GroundTruth gt;
  gt.g_star = RotationStack(std::move(m), n, d, Group::SpecialOrthogonal);
  gt.seed = seed;
  return gt;
}

NoiseMatrix gaussian_noise(int n, int d, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw InvariantViolation("sigma must be nonnegative");
  NoiseMatrix nm;
  nm.delta = Matrix::Zero(n * d, n * d);
  nm.n = n;
  nm.d = d;
  nm.sigma = sigma;
  nm.kind = NoiseMatrix::Kind::Gaussian;
  if (sigma == 0.0) return nm;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Prng prng(seed, kNoiseTag ^ static_cast<std::uint64_t>(i),
                static_cast<std::uint64_t>(j));
      const Matrix w = sigma * random_gaussian(d, d, prng);
      nm.delta.block(i * d, j * d, d, d) = w;
      nm.delta.block(j * d, i * d, d, d) = w.transpose();
    }
  return nm;
}

NoiseMatrix custom_noise(int n, int d, const Matrix& m) {
  if (m.rows() != static_cast<Eigen::Index>(n) * d || m.rows() != m.cols())
    throw InvariantViolation("custom noise must be nd x nd");
  NoiseMatrix nm;
  nm.n = n;
  nm.d = d;
  nm.sigma = 0.0;
  nm.kind = NoiseMatrix::Kind::Custom;
  nm.delta = 0.5 * (m + m.transpose());
  for (int i = 0; i < n; ++i)
    nm.delta.block(i * d, i * d, d, d).setZero();
  nm.sanitize_residual = (nm.delta - m).norm();
  return nm;
}

NoiseMatrix scale_to_op_norm(const NoiseMatrix& noise, double target) {
  const double cur = sym_op_norm(noise.delta);
  if (cur <= 0) throw InvariantViolation("cannot rescale zero noise");
  NoiseMatrix out = noise;
  const double s = target / cur;
  out.delta *= s;
  out.sigma *= s;
  return out;
}

double sym_op_norm(const Matrix& m) {
  if (m.rows() <= kDenseOpNormLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  return sym_op_norm_power(m);
}

double sym_op_norm_power(const Matrix& m, double rel_tol) {
  // Iterate with m^2: noise spectra are near-symmetric about zero, so plain
  // power iteration oscillates between the two edges; the squared operator
  // has max(lambda^2) dominant whichever edge wins.
  Prng prng(0x706f77);
  Eigen::VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = prng.next_gaussian();
  v.normalize();
  double norm_est = 0.0;
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd w = m * (m * v);
    const double theta2 = v.dot(w);  // Rayleigh quotient of m^2
    norm_est = std::sqrt(std::max(0.0, theta2));
    const double residual = (w - theta2 * v).norm();
    if (residual <= rel_tol * std::max(1e-300, theta2)) break;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return norm_est;
}

Observation assemble_observation(const GroundTruth& gt,
                                 const NoiseMatrix& noise) {
  const int n = gt.g_star.n;
  const int d = gt.g_star.d;
  if (noise.n != n || noise.d != d)
    throw InvariantViolation("noise/truth shape mismatch");
  Observation obs;
  obs.n = n;
  obs.d = d;
  obs.sigma = noise.sigma;
  obs.seed = gt.seed;
  const Matrix low_rank = gt.g_star.blocks * gt.g_star.blocks.transpose();
  obs.c = 0.5 * (low_rank + low_rank.transpose()) + noise.delta;
  obs.has_truth = true;
  obs.g_star = gt.g_star;
  obs.delta = noise.delta;
  cache_noise_stats(obs);
  return obs;
}

Observation observation_from_c(Matrix c, int n, int d, double sigma,
                               std::uint64_t seed) {
  if (c.rows() != c.cols() || c.rows() != static_cast<Eigen::Index>(n) * d)
    throw InvariantViolation("C must be nd x nd");
  if ((c - c.transpose()).norm() > 1e-10 * std::max(1.0, c.norm()))
    throw InvariantViolation("C must be symmetric");
  Observation obs;
  obs.c = std::move(c);
  obs.n = n;
  obs.d = d;
  obs.sigma = sigma;
  obs.seed = seed;
  obs.has_truth = false;
  return obs;
}

RegionSpec RegionSpec::from_observation(const Observation& obs) {
  RegionSpec r;
  const double sqn = std::sqrt(static_cast<double>(obs.n));
  r.rho_f = 0.1 * (obs.op_norm_delta > 1e-300
                       ? std::min(sqn, obs.n / obs.op_norm_delta)
                       : sqn);
  r.rho_inf = 0.25;
  return r;
}

std::string hypothesis_set_name(HypothesisSet set) {
  switch (set) {
    case HypothesisSet::LinfError: return "linf_error";
    case HypothesisSet::StrongConcavity: return "strong_concavity";
    case HypothesisSet::OptimumInRegion: return "optimum_in_region";
    case HypothesisSet::StayInBall: return "stay_in_ball";
    case HypothesisSet::SpectralError: return "spectral_error";
    case HypothesisSet::GlobalConvergence: return "global_convergence";
  }
  return "unknown";
}

AdmissibilityReport admissibility(const Observation& obs, HypothesisSet set) {
  if (!obs.has_truth)
    throw InvariantViolation("admissibility needs the truth handle");
  const double n = obs.n;
  const double d = obs.d;
  const double op = obs.op_norm_delta;
  const double dginf = obs.delta_gstar_inf;

  AdmissibilityReport rep;
  rep.set = set;
  auto add = [&rep](const std::string& name, double lhs, double rhs) {
    HypothesisCheck h;
    h.name = name;
    h.lhs = lhs;
    h.rhs = rhs;
    h.margin = rhs - lhs;
    h.pass = lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
    rep.checks.push_back(h);
  };

  switch (set) {
    case HypothesisSet::LinfError:
      add("op_norm", op, n / (6.0 * std::sqrt(d)));
      break;
    case HypothesisSet::StrongConcavity:
      add("op_norm", op, std::pow(n, 0.75) / (20.0 * std::sqrt(d)));
      add("row_inf", dginf, n / 20.0);
      break;
    case HypothesisSet::OptimumInRegion:
      add("op_norm", op, std::pow(n, 0.75) / (80.0 * std::sqrt(d)));
      add("row_inf", dginf, n / 40.0);
      break;
    case HypothesisSet::StayInBall:
      add("op_norm", op, n / 50.0);
      add("row_inf", dginf, n / 400.0);
      break;
    case HypothesisSet::SpectralError:
      add("op_norm", op, std::pow(n, 0.75) / (20.0 * std::sqrt(d)));
      add("row_inf", dginf, n / (40.0 * d));
      break;
    case HypothesisSet::GlobalConvergence:
      add("op_norm", op, std::pow(n, 0.75) / (80.0 * std::sqrt(d)));
      add("row_inf", dginf, n / (400.0 * d));
      break;
  }
  rep.all_pass = true;
  for (const auto& h : rep.checks) rep.all_pass = rep.all_pass && h.pass;
  return rep;
}

void write_observation(std::ostream& os, const Observation& obs) {
  os << obs.n << ' ' << obs.d << ' ' << std::setprecision(17) << obs.sigma
     << ' ' << obs.seed << '\n';
  if (obs.has_truth) write_stack(os, obs.g_star);
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < obs.c.rows(); ++r) {
    for (Eigen::Index col = 0; col < obs.c.cols(); ++col) {
      if (col) os << ' ';
      os << obs.c(r, col);
    }
    os << '\n';
  }
}

void write_observation_file(const std::string& path, const Observation& obs) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_observation(os, obs);
}

Observation read_observation(std::istream& is) {
  int n = 0, d = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string header;
  if (!std::getline(is, header)) throw ParseError("empty OBS stream");
  {
    std::istringstream hs(header);
    if (!(hs >> n >> d >> sigma >> seed))
      throw ParseError("bad OBS header (expected 'n d sigma seed')");
  }
  if (n < 1 || d < 2 || d > 8) throw ParseError("bad OBS dimensions");

  // The optional ground truth starts with a 3-token STACK header whose last
  // token is a group tag; a C row has nd >= 4 numeric tokens.
  std::string line;
  std::streampos before = is.tellg();
  if (!std::getline(is, line)) throw ParseError("truncated OBS payload");
  std::istringstream probe(line);
  std::string t1, t2, t3, t4;
  probe >> t1 >> t2 >> t3;
  const bool extra = static_cast<bool>(probe >> t4);
  const bool truth = !extra && (t3 == "SO" || t3 == "O");

  bool has_truth = false;
  RotationStack g_star;
  if (truth) {
    std::stringstream stack_stream;
    stack_stream << line << '\n';
    // Stack payload: n*d rows follow the header line.
    for (int r = 0; r < n * d; ++r) {
      if (!std::getline(is, line)) throw ParseError("truncated OBS truth");
      stack_stream << line << '\n';
    }
    g_star = read_stack(stack_stream);
    if (g_star.n != n || g_star.d != d)
      throw ParseError("OBS truth dimensions disagree with header");
    has_truth = true;
    before = is.tellg();
    if (!std::getline(is, line)) throw ParseError("truncated OBS payload");
  }

  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  Matrix c(nd, nd);
  {
    is.seekg(before);
    for (Eigen::Index r = 0; r < nd; ++r)
      for (Eigen::Index col = 0; col < nd; ++col)
        if (!(is >> c(r, col))) throw ParseError("truncated OBS matrix");
  }

  Observation obs = observation_from_c(std::move(c), n, d, sigma, seed);
  if (has_truth) {
    obs.has_truth = true;
    obs.g_star = g_star;
    obs.delta = obs.c - g_star.blocks * g_star.blocks.transpose();
    cache_noise_stats(obs);
  }
  return obs;
}

Observation read_observation_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_observation(is);
}

}  // namespace rotsync
