#include "rotsync/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rotsync/random.hpp"

namespace rotsync::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': bad number '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': bad integer '" + v + "'");
  }
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

}  // namespace

StepsizePolicy ExperimentConfig::policy() const {
  StepsizePolicy p;
  p.mode = step_mode;
  p.alpha = alpha;
  p.t_fixed = t_fixed > 0 ? t_fixed : conservative_stepsize(n, d);
  p.t_floor = t_floor > 0 ? t_floor : p.t_fixed / 10.0;
  return p;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "n") cfg.n = static_cast<int>(parse_int(key, val));
    else if (key == "d") cfg.d = static_cast<int>(parse_int(key, val));
    else if (key == "sigma") cfg.sigma = parse_double(key, val);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "noise_path") cfg.noise_path = val;
    else if (key == "estimator") cfg.estimator = val;
    else if (key == "group") cfg.group = parse_group(val);
    else if (key == "step_mode") {
      if (val == "safe") cfg.step_mode = StepMode::Safe;
      else if (val == "fixed") cfg.step_mode = StepMode::Fixed;
      else throw ParseError("config: step_mode must be safe|fixed");
    } else if (key == "alpha") cfg.alpha = parse_double(key, val);
    else if (key == "t_fixed") cfg.t_fixed = parse_double(key, val);
    else if (key == "t_floor") cfg.t_floor = parse_double(key, val);
    else if (key == "tol") cfg.tol = parse_double(key, val);
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_int(key, val));
    else if (key == "checks") cfg.checks = split(val, ',');
    else if (key == "sigma_grid") {
      cfg.sigma_grid.clear();
      for (const auto& tok : split(val, ',')) cfg.sigma_grid.push_back(parse_double(key, tok));
    } else if (key == "seeds") {
      cfg.seed_list.clear();
      for (const auto& tok : split(val, ','))
        cfg.seed_list.push_back(static_cast<std::uint64_t>(parse_int(key, tok)));
    } else {
      throw ParseError("config: unknown key '" + key + "'");
    }
  }

  if (cfg.n < 2) throw ParseError("config: n must be >= 2");
  if (cfg.d < 2 || cfg.d > 8) throw ParseError("config: d must be in [2, 8]");
  if (cfg.sigma < 0) throw ParseError("config: sigma must be >= 0");
  if (cfg.alpha <= 0 || cfg.alpha >= 1)
    throw ParseError("config: alpha must lie in (0, 1)");
  if (cfg.tol <= 0) throw ParseError("config: tol must be positive");
  if (cfg.max_iter < 1) throw ParseError("config: max_iter must be >= 1");
  if (cfg.t_fixed < 0 || cfg.t_floor < 0)
    throw ParseError("config: stepsizes must be nonnegative");
  if (cfg.estimator != "spectral" && cfg.estimator != "rgm" &&
      cfg.estimator != "gpm" && cfg.estimator != "spectral+rgm")
    throw ParseError("config: estimator must be spectral|rgm|gpm|spectral+rgm");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  return parse_config(is);
}

Observation build_observation(const ExperimentConfig& cfg) {
  const GroundTruth gt = random_rotation_stack(cfg.n, cfg.d, cfg.seed);
  NoiseMatrix noise;
  if (!cfg.noise_path.empty()) {
    std::ifstream is(cfg.noise_path);
    if (!is) throw Error("cannot open noise file '" + cfg.noise_path + "'");
    const Eigen::Index nd = static_cast<Eigen::Index>(cfg.n) * cfg.d;
    Matrix m(nd, nd);
    for (Eigen::Index r = 0; r < nd; ++r)
      for (Eigen::Index c = 0; c < nd; ++c)
        if (!(is >> m(r, c))) throw ParseError("truncated noise matrix");
    noise = custom_noise(cfg.n, cfg.d, m);
  } else {
    noise = gaussian_noise(cfg.n, cfg.d, cfg.sigma, cfg.seed);
  }
  return assemble_observation(gt, noise);
}

std::string obs_filename(const ExperimentConfig& cfg) {
  return "obs_n" + std::to_string(cfg.n) + "_d" + std::to_string(cfg.d) +
         "_sigma" + fmt_double(cfg.sigma) + "_seed" +
         std::to_string(cfg.seed) + ".txt";
}

int cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir,
            bool quiet) {
  const Observation obs = build_observation(cfg);
  const std::string path = out_dir + "/" + obs_filename(cfg);
  write_observation_file(path, obs);
  if (!quiet) std::cerr << "wrote " << path << "\n";
  std::cout << path << "\n";
  return 0;
}

namespace {

Estimate run_estimator(const ExperimentConfig& cfg, const Observation& obs) {
  if (cfg.estimator == "spectral") {
    Estimate est;
    est.g_hat = spectral_init(obs, cfg.group);
    est.init_kind = InitKind::Spectral;
    TraceRow row;
    row.k = 0;
    row.f = objective(obs.c, est.g_hat);
    row.grad_norm = riemannian_grad(obs.c, est.g_hat).norm();
    if (obs.has_truth) {
      const Alignment a = procrustes_align(est.g_hat, obs.g_star);
      row.dist_f_ref = a.dist_f;
      row.dist_inf_ref = a.dist_inf;
      row.has_ref = true;
    }
    est.trace.rows.push_back(row);
    est.trace.status = SolveStatus::Converged;
    return est;
  }

  RotationStack g0;
  InitKind kind = InitKind::Spectral;
  if (cfg.estimator == "rgm") {
    // Plain rgm starts from a seeded random feasible point.
    Matrix blocks(cfg.n * cfg.d, cfg.d);
    for (int i = 0; i < cfg.n; ++i) {
      Prng prng(cfg.seed, 0x696e6974, static_cast<std::uint64_t>(i));
      blocks.middleRows(i * cfg.d, cfg.d) = random_rotation(cfg.d, prng);
    }
    g0 = RotationStack(std::move(blocks), cfg.n, cfg.d, cfg.group);
    kind = InitKind::Custom;
  } else {
    g0 = spectral_init(obs, cfg.group);
  }

  Estimate est = (cfg.estimator == "gpm")
                     ? gpm_solve(obs, g0, cfg.tol, cfg.max_iter)
                     : rgm_solve(obs, g0, cfg.policy(), cfg.tol, cfg.max_iter);
  est.init_kind = kind;
  return est;
}

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, const std::string& obs_path,
              const std::string& out_dir, bool quiet) {
  const Observation obs = read_observation_file(obs_path);
  const Estimate est = run_estimator(cfg, obs);
  write_stack_file(out_dir + "/estimate.txt", est.g_hat);
  write_trace_csv_file(out_dir + "/trace.csv", est.trace);
  if (!quiet)
    std::cerr << "solve: " << est.trace.rows.size() - 1 << " iterations, "
              << "status "
              << (est.trace.status == SolveStatus::Converged ? "converged"
                  : est.trace.status == SolveStatus::MaxIterations
                      ? "max-iterations"
                      : "aborted")
              << "\n";
  if (est.trace.status == SolveStatus::Aborted) {
    std::cerr << "error: " << est.trace.message << "\n";
    return 1;
  }
  return est.trace.status == SolveStatus::Converged ? 0 : 2;
}

namespace {

bool check_requested(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& c : cfg.checks)
    if (c == "all" || c == name) return true;
  return false;
}

}  // namespace

int cmd_verify(const ExperimentConfig& cfg, const std::string& obs_path,
               const std::string& estimate_path, const std::string& out_dir,
               bool quiet) {
  const Observation obs = read_observation_file(obs_path);

  RotationStack estimate;
  bool have_estimate = false;
  if (!estimate_path.empty()) {
    estimate = read_stack_file(estimate_path);
    if (estimate.n != obs.n || estimate.d != obs.d)
      throw ParseError("estimate dimensions disagree with the observation");
    have_estimate = true;
  }
  auto est = [&]() -> const RotationStack& {
    if (!have_estimate) {
      estimate = run_estimator(cfg, obs).g_hat;
      have_estimate = true;
    }
    return estimate;
  };

  CertReport report;
  report.n = obs.n;
  report.d = obs.d;
  report.sigma = obs.sigma;
  report.seed = obs.seed;

  const RegionSpec region = RegionSpec::from_observation(obs);

  RotationStack g_hat;
  bool have_ref = false;
  auto ref = [&]() -> const RotationStack& {
    if (!have_ref) {
      g_hat = reference_optimum(obs, cfg.group);
      have_ref = true;
    }
    return g_hat;
  };

  RunCapture run;
  bool have_run = false;
  auto ensure_run = [&]() {
    if (have_run) return;
    run = capture_rgm(obs, spectral_init(obs, cfg.group), cfg.policy(),
                      cfg.tol, cfg.max_iter);
    have_run = true;
  };

  if (check_requested(cfg, "l2")) check_l2_error(obs, est(), report);
  if (check_requested(cfg, "linf")) {
    check_linf_error(obs, est(), report);
    try {
      check_linf_error_basis(obs, spectral_basis(obs), report);
    } catch (const DegenerateEigengap&) {
      report.add(inapplicable_entry("linf_error_basis", "linf-error-bound",
                                    "degenerate eigengap"));
    }
  }
  if (check_requested(cfg, "spectral")) check_spectral_bounds(obs, report);
  if (check_requested(cfg, "region"))
    check_optimum_in_region(obs, ref(), report);
  if (check_requested(cfg, "hessian"))
    check_hessian_pd(obs, ref(), ref(), region, 100, obs.seed, report);
  if (check_requested(cfg, "error_bound")) {
    ensure_run();
    check_error_bound(obs, ref(), ref(), region, report);
    check_error_bound_run(obs, run, ref(), region, report);
  }
  if (check_requested(cfg, "ascent")) {
    ensure_run();
    check_ascent_and_gap(obs, run, ref(), report);
  }
  if (check_requested(cfg, "rate")) {
    ensure_run();
    check_linear_rate(run, obs, ref(), report);
  }
  if (check_requested(cfg, "ball")) {
    if (obs.has_truth && obs.d == 3) {
      try {
        const RotationStack g0 = spectral_init(obs, cfg.group);
        check_stay_in_ball(obs, g0, 0.5 / obs.n, report);
      } catch (const DegenerateEigengap&) {
        report.add(inapplicable_entry("stay_in_ball", "stay-in-ball",
                                      "degenerate eigengap"));
      }
      ensure_run();
      check_stay_in_ball_run(obs, run, report);
    } else {
      report.add(inapplicable_entry("stay_in_ball", "stay-in-ball",
                                    "needs d = 3 and the truth handle"));
    }
  }
  if (check_requested(cfg, "chain")) {
    try {
      check_distance_chain(est(), spectral_init(obs, cfg.group), report);
    } catch (const DegenerateEigengap&) {
      report.add(inapplicable_entry("distance_chain", "chain-inf-le-f",
                                    "degenerate eigengap"));
    }
    if (obs.has_truth) check_distance_chain(est(), obs.g_star, report);
  }
  if (check_requested(cfg, "alignment")) {
    const RotationStack& anchor = ref();
    Prng prng(obs.seed, 0x616c6e);
    for (int trial = 0; trial < 5; ++trial) {
      Matrix xi1 = random_tangent(anchor, prng);
      Matrix xi2 = random_tangent(anchor, prng);
      xi1 *= 0.1 * std::sqrt(static_cast<double>(obs.n)) / xi1.norm();
      xi2 *= 0.1 * std::sqrt(static_cast<double>(obs.n)) / xi2.norm();
      RotationStack h1 = exp_map_embedded(anchor, xi1);
      RotationStack h2 = exp_map_embedded(anchor, xi2);
      h1 = right_multiply(h1, procrustes_align(anchor, h1).q);
      h2 = right_multiply(h2, procrustes_align(anchor, h2).q);
      check_alignment_lemma(anchor, h1, h2, report);
    }
  }
  if (check_requested(cfg, "radius")) check_radius(obs.seed, report);
  if (check_requested(cfg, "focp")) focp_example(obs.n, obs.seed, report);

  write_report_file(out_dir + "/report.json", report);
  if (!quiet) {
    for (const auto& e : report.entries)
      std::cout << check_status_name(e.status) << ' ' << e.check << ' '
                << e.anchor << " margin=" << e.margin << "\n";
    std::cerr << "report: " << report.count(CheckStatus::Pass) << " pass, "
              << report.count(CheckStatus::Fail) << " fail, "
              << report.count(CheckStatus::Inapplicable) << " inapplicable\n";
  }
  return report.all_applicable_pass() ? 0 : 1;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
              int jobs, bool quiet) {
  if (cfg.sigma_grid.empty())
    throw ParseError("sweep needs a nonempty sigma_grid");
  const std::vector<std::uint64_t> seeds =
      cfg.seed_list.empty() ? std::vector<std::uint64_t>{cfg.seed}
                            : cfg.seed_list;

  struct Task {
    double sigma;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const double s : cfg.sigma_grid)
    for (const auto seed : seeds) tasks.push_back({s, seed});

  std::vector<std::string> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      ExperimentConfig local = cfg;
      local.sigma = tasks[i].sigma;
      local.seed = tasks[i].seed;
      std::ostringstream os;
      os.precision(12);
      try {
        const Observation obs = build_observation(local);
        const Estimate est = run_estimator(local, obs);
        const auto& last = est.trace.rows.back();
        const double lambda = fit_gap_rate(est.trace);
        os << local.sigma << ',' << local.seed << ',' << last.dist_f_ref << ','
           << last.dist_inf_ref << ',' << est.trace.iterations() << ','
           << lambda << ','
           << (est.trace.status == SolveStatus::Converged ? "converged"
               : est.trace.status == SolveStatus::MaxIterations
                   ? "max-iterations"
                   : "aborted")
           << ','
           << admissibility(obs, HypothesisSet::LinfError).all_pass << ','
           << admissibility(obs, HypothesisSet::StrongConcavity).all_pass << ','
           << admissibility(obs, HypothesisSet::SpectralError).all_pass << ','
           << admissibility(obs, HypothesisSet::StayInBall).all_pass;
      } catch (const std::exception& e) {
        os << tasks[i].sigma << ',' << tasks[i].seed << ",,,,nan,error:"
           << e.what() << ",,,,";
      }
      rows[i] = os.str();
    }
  };

  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  const std::string path = out_dir + "/sweep.csv";
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << "sigma,seed,dist_f,dist_inf,iterations,lambda_hat,status,"
        "adm_linf,adm_concavity,adm_spectral,adm_ball\n";
  for (const auto& r : rows) os << r << '\n';
  if (!quiet) {
    // Applicability rates of the hypothesis sets across the sweep.
    int counts[4] = {0, 0, 0, 0};
    int ok_rows = 0;
    for (const auto& r : rows) {
      std::vector<std::string> cols = split(r, ',');
      if (cols.size() < 11) continue;
      ++ok_rows;
      for (int c = 0; c < 4; ++c)
        if (cols[7 + c] == "1") ++counts[c];
    }
    if (ok_rows > 0)
      std::cerr << "applicability over " << ok_rows << " rows: linf "
                << counts[0] << ", concavity " << counts[1] << ", spectral "
                << counts[2] << ", ball " << counts[3] << "\n";
    std::cerr << "wrote " << path << "\n";
  }
  std::cout << path << "\n";
  return 0;
}

}  // namespace rotsync::cli
