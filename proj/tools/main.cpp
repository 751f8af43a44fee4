// sns: simulator and experiment harness for the one-dimensional stochastic
// cubic Schrodinger equation with multiplicative spectral noise.
//
// Commands: simulate, converge, residual, depend, noise-check.
// Exit codes: 0 success, 1 statistical check failed, 2 configuration error,
// 3 blow-up, 4 nonlinear solver divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sns/experiments.hpp"
#include "sns/io.hpp"
#include "sns/parallel.hpp"

namespace fs = std::filesystem;
using namespace sns;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBlowUp = 3;
constexpr int kExitDiverged = 4;

struct CommonOpts {
  SchemeConfig cfg;
  std::string initial = "sin:k=1,amp=1";
  int modes = 32;
  double decay = 12.0;
  std::vector<double> eigenvalues;  // explicit spectrum, overrides modes/decay
  int workers = 0;
  std::string out_dir = ".";
  std::string format;  // "", "csv" or "json"
  std::string config_path;
};

void add_physics_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "Flat key=value configuration file; command line flags "
                  "override file entries");
  cmd->add_option("--n", opts.cfg.n_interior,
                  "Interior grid points N; mesh step is 1/(N+1)")
      ->capture_default_str();
  cmd->add_option("--dt", opts.cfg.dt, "Time step")->capture_default_str();
  cmd->add_option("--t", opts.cfg.t_final, "Final time T")
      ->capture_default_str();
  cmd->add_option("--lambda", opts.cfg.lambda,
                  "Nonlinearity sign: +1 focusing, -1 defocusing")
      ->capture_default_str();
  cmd->add_option("--modes", opts.modes, "Noise truncation level K")
      ->capture_default_str();
  cmd->add_option("--decay", opts.decay,
                  "Spectral decay r in q_k = k^-r")
      ->capture_default_str();
  cmd->add_option("--eigenvalues", opts.eigenvalues,
                  "Explicit eigenvalue list q_1 q_2 ...; overrides "
                  "--modes/--decay");
  cmd->add_option("--eps", opts.cfg.noise_scale,
                  "Noise scale factor multiplying dW")
      ->capture_default_str();
  cmd->add_option("--seed", opts.cfg.seed, "Base seed for the noise streams")
      ->capture_default_str();
  cmd->add_option("--initial", opts.initial,
                  "Initial data: zero | sin:k=..,amp=.. | "
                  "sech:amp=..,w=..,c=..")
      ->capture_default_str();
  cmd->add_option("--fp-tol", opts.cfg.fp_tol,
                  "Fixed-point solve tolerance (h-norm of the update)")
      ->capture_default_str();
  cmd->add_option("--fp-max-iter", opts.cfg.fp_max_iter,
                  "Fixed-point iteration cap")
      ->capture_default_str();
  cmd->add_option("--blowup-threshold", opts.cfg.blowup_threshold,
                  "l-infinity threshold that declares blow-up")
      ->capture_default_str();
  cmd->add_option("--workers", opts.workers,
                  "Worker threads for sample-parallel runs (0 = all cores)")
      ->envname("SNS_WORKERS")
      ->capture_default_str();
  cmd->add_option("--out", opts.out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_option("--format", opts.format,
                  "Restrict tabular outputs to one format")
      ->check(CLI::IsMember({"csv", "json"}));
}

SpectralCovariance make_covariance(const CommonOpts& opts) {
  if (!opts.eigenvalues.empty()) {
    return SpectralCovariance::from_eigenvalues(opts.eigenvalues);
  }
  return SpectralCovariance::power_decay(opts.modes, opts.decay);
}

ConfigMap resolved_config(const CommonOpts& opts, const std::string& command) {
  SchemeConfig cfg = opts.cfg;
  cfg.covariance = make_covariance(opts);
  ConfigMap m = config_map(cfg);
  m["command"] = command;
  m["initial"] = ProfileSpec::parse(opts.initial).canonical();
  if (!opts.eigenvalues.empty()) {
    std::ostringstream qs;
    for (std::size_t i = 0; i < opts.eigenvalues.size(); ++i) {
      qs << (i ? "," : "") << format_double(opts.eigenvalues[i]);
    }
    m["eigenvalues"] = qs.str();
  }
  return m;
}

class OutputSet {
 public:
  OutputSet(std::string dir, std::string command, ConfigMap config, int workers)
      : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.config = std::move(config);
    manifest_.workers = workers;
    manifest_.started_at = iso8601_now();
  }

  std::string path(const std::string& name) const {
    return (fs::path(dir_) / name).string();
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    out << text;
    out.close();
    names_.push_back(name);
  }

  std::ofstream open(const std::string& name) {
    names_.push_back(name);
    return std::ofstream(path(name), std::ios::binary);
  }

  void finalize() {
    manifest_.finished_at = iso8601_now();
    for (const auto& name : names_) {
      manifest_.outputs.emplace_back(name, hex64(file_digest(path(name))));
    }
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << manifest_.to_json();
  }

 private:
  std::string dir_;
  RunManifest manifest_;
  std::vector<std::string> names_;
};

bool want_csv(const CommonOpts& opts) { return opts.format != "json"; }
bool want_json(const CommonOpts& opts) { return opts.format != "csv"; }

int failure_exit_code(const Failure& failure) {
  return failure.kind == Failure::Kind::blow_up ? kExitBlowUp : kExitDiverged;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  CommonOpts common;
  std::int64_t dump_every = 0;  // 0: initial and final snapshot only
  bool dump_binary = false;
  bool dump_noise = false;
  int monitor_every = 1;
};

int cmd_simulate(const SimulateOpts& opts) {
  SchemeConfig cfg = opts.common.cfg;
  cfg.covariance = make_covariance(opts.common);
  cfg.validate();
  const Profile profile = ProfileSpec::parse(opts.common.initial).build();

  const auto grid = UniformGrid::create(cfg.n_interior);
  const GridFunction u0 = profile.sample_on(grid);
  const ConfigMap config = resolved_config(opts.common, "simulate");

  OutputSet outputs(opts.common.out_dir, "simulate", config,
                    resolve_workers(opts.common.workers));

  std::ofstream traj_csv = outputs.open("trajectory.csv");
  TrajectoryCsvWriter traj(traj_csv, config);
  std::ofstream traj_bin;
  std::unique_ptr<TrajectoryBinaryWriter> traj_binary;
  if (opts.dump_binary) {
    traj_bin = outputs.open("trajectory.bin");
    traj_binary = std::make_unique<TrajectoryBinaryWriter>(traj_bin, config);
  }
  std::ofstream noise_csv;
  if (opts.dump_noise) {
    noise_csv = outputs.open("noise.csv");
    write_noise_audit_header(noise_csv, config);
  }

  traj.snapshot(0, 0.0, u0);
  if (traj_binary) traj_binary->snapshot(0, 0.0, u0);

  // The evolve loop is inlined here so snapshots and the noise audit can
  // stream without retaining the whole trajectory.
  const StepSchedule plan = make_step_schedule(cfg.t_final, cfg.dt);
  MidpointStepper stepper(grid, cfg);
  std::unique_ptr<MidpointStepper> tail;
  if (plan.remainder > 0.0) {
    tail = std::make_unique<MidpointStepper>(grid, cfg, plan.remainder);
  }
  const NoiseSampler sampler(cfg.covariance, grid);
  GridFunction u = u0;
  std::vector<FunctionalReport> reports;
  if (opts.monitor_every > 0) {
    reports.push_back(FunctionalReport::compute(u, cfg.lambda, 0.0));
  }

  std::optional<Failure> failure;
  double t = 0.0;
  for (std::int64_t i = 0; i < plan.total(); ++i) {
    const double dt_i = plan.step_dt(i, cfg.dt);
    GaussianStream stream = fork_stream(cfg.seed, 0,
                                        static_cast<std::uint64_t>(i));
    const NoiseIncrement dw = sampler.sample(dt_i, stream, cfg.noise_scale);
    if (opts.dump_noise) write_noise_audit_rows(noise_csv, i, dw.draws);
    try {
      (i < plan.full_steps ? stepper : *tail).advance(u, dw, t, i);
    } catch (const BlowUpError& e) {
      failure = Failure{Failure::Kind::blow_up, e.t(), e.step_index(),
                        e.what()};
      break;
    } catch (const FixedPointDivergedError& e) {
      failure = Failure{Failure::Kind::fixed_point_diverged, e.t(),
                        e.step_index(), e.what()};
      break;
    }
    t = plan.time_after(i, cfg.dt, cfg.t_final);
    const bool last = i + 1 == plan.total();
    if (opts.monitor_every > 0 &&
        ((i + 1) % opts.monitor_every == 0 || last)) {
      reports.push_back(FunctionalReport::compute(u, cfg.lambda, t));
    }
    if ((opts.dump_every > 0 && (i + 1) % opts.dump_every == 0) || last) {
      traj.snapshot(i + 1, t, u);
      if (traj_binary) traj_binary->snapshot(i + 1, t, u);
    }
  }
  if (failure && opts.monitor_every > 0) {
    // retain the last healthy state in the dump as well
    traj.snapshot(failure->step_index, failure->t, u);
    if (traj_binary) traj_binary->snapshot(failure->step_index, failure->t, u);
  }

  traj_csv.close();
  if (traj_bin.is_open()) traj_bin.close();
  if (noise_csv.is_open()) noise_csv.close();
  {
    std::ofstream out = outputs.open("functionals.csv");
    write_reports_csv(out, reports, config);
  }
  outputs.finalize();

  if (failure) {
    std::cerr << "sns simulate: " << failure->message << "\n";
    return failure_exit_code(*failure);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- converge

struct ConvergeOpts {
  CommonOpts common;
  std::vector<int> coarse_n{15, 31, 63};
  int fine_n = 511;
  int samples = 64;
  int bootstrap = 1000;
};

int cmd_converge(const ConvergeOpts& opts) {
  CoupledEnsembleSpec spec;
  spec.base = opts.common.cfg;
  spec.base.covariance = make_covariance(opts.common);
  spec.coarse_n = opts.coarse_n;
  spec.fine_n = opts.fine_n;
  spec.samples = opts.samples;
  spec.workers = opts.common.workers;
  spec.initial = ProfileSpec::parse(opts.common.initial).build();
  spec.bootstrap_replicates = opts.bootstrap;
  spec.require_rate_geometry = true;

  ConfigMap config = resolved_config(opts.common, "converge");
  {
    std::ostringstream ladder;
    for (std::size_t i = 0; i < opts.coarse_n.size(); ++i) {
      ladder << (i ? "," : "") << opts.coarse_n[i];
    }
    config["coarse_n"] = ladder.str();
    config["fine_n"] = std::to_string(opts.fine_n);
    config["samples"] = std::to_string(opts.samples);
    config.erase("n");
  }

  const CoupledEnsembleResult result = run_coupled_ensemble(spec);

  OutputSet outputs(opts.common.out_dir, "converge", config,
                    resolve_workers(opts.common.workers));
  if (want_csv(opts.common)) {
    std::ofstream out = outputs.open("record.csv");
    write_convergence_csv(out, result.record, config);
  }
  if (want_json(opts.common)) {
    outputs.write_text("record.json", convergence_json(result.record, config));
  }
  outputs.write_text("summary.txt", convergence_summary(result.record));
  outputs.finalize();

  std::cout << convergence_summary(result.record);
  return kExitOk;
}

// ---------------------------------------------------------------- residual

struct ResidualOpts {
  CommonOpts common;
  std::string profile = "sin:k=1,amp=1";
  std::vector<int> n_list{15, 31, 63, 127};
};

int cmd_residual(const ResidualOpts& opts) {
  const Profile profile = ProfileSpec::parse(opts.profile).build();
  const ResidualReport report = residual_study(profile, opts.n_list);

  ConfigMap config = resolved_config(opts.common, "residual");
  config["profile"] = ProfileSpec::parse(opts.profile).canonical();
  config.erase("n");

  OutputSet outputs(opts.common.out_dir, "residual", config,
                    resolve_workers(opts.common.workers));
  if (want_csv(opts.common)) {
    std::ofstream out = outputs.open("residual.csv");
    write_residual_csv(out, report, config);
  }
  if (want_json(opts.common)) {
    outputs.write_text("residual.json", residual_json(report, config));
  }
  outputs.finalize();

  if (report.fit_valid) {
    std::cout << "stencil defect order for " << report.profile << ": "
              << format_double(report.fit.slope) << "\n";
  } else {
    std::cout << "stencil defect vanishes identically for " << report.profile
              << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------ depend

struct DependOpts {
  CommonOpts common;
  std::vector<double> deltas{1e-3, 1e-2, 1e-1};
  int perturb_k = 2;
  int samples = 64;
};

int cmd_depend(const DependOpts& opts) {
  SchemeConfig cfg = opts.common.cfg;
  cfg.covariance = make_covariance(opts.common);
  cfg.validate();
  const auto grid = UniformGrid::create(cfg.n_interior);
  const GridFunction u0 =
      ProfileSpec::parse(opts.common.initial).build().sample_on(grid);

  std::vector<DependencePoint> points;
  std::vector<std::vector<double>> sups;
  for (double delta : opts.deltas) {
    GridFunction v0 = u0;
    v0 += sine_profile(opts.perturb_k, delta).sample_on(grid);
    points.push_back(
        initial_dependence(cfg, u0, v0, opts.samples, opts.common.workers));
    sups.push_back(points.back().per_sample_sup);
  }

  RateFit fit;
  bool fit_valid = false;
  {
    std::vector<double> positive_deltas;
    std::vector<std::vector<double>> positive_sups;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (opts.deltas[i] > 0.0 && points[i].output_error > 0.0) {
        positive_deltas.push_back(opts.deltas[i]);
        positive_sups.push_back(sups[i]);
      }
    }
    if (positive_deltas.size() >= 2) {
      fit = fit_order_bootstrap(positive_deltas, positive_sups, 1000,
                                cfg.seed ^ 0x5bd1e995u);
      fit_valid = true;
    }
  }

  ConfigMap config = resolved_config(opts.common, "depend");
  {
    std::ostringstream ds;
    for (std::size_t i = 0; i < opts.deltas.size(); ++i) {
      ds << (i ? "," : "") << format_double(opts.deltas[i]);
    }
    config["deltas"] = ds.str();
    config["perturb_k"] = std::to_string(opts.perturb_k);
    config["samples"] = std::to_string(opts.samples);
  }

  OutputSet outputs(opts.common.out_dir, "depend", config,
                    resolve_workers(opts.common.workers));
  if (want_csv(opts.common)) {
    std::ofstream out = outputs.open("depend.csv");
    write_dependence_csv(out, opts.deltas, points, fit, fit_valid, config);
  }
  if (want_json(opts.common)) {
    outputs.write_text("depend.json",
                       dependence_json(opts.deltas, points, fit, fit_valid,
                                       config));
  }
  outputs.finalize();

  for (std::size_t i = 0; i < points.size(); ++i) {
    std::cout << "delta=" << format_double(opts.deltas[i])
              << "  input=" << format_double(points[i].input_distance)
              << "  error=" << format_double(points[i].output_error) << "\n";
  }
  if (fit_valid) {
    std::cout << "fitted slope: " << format_double(fit.slope) << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------- noise-check

struct NoiseCheckOpts {
  CommonOpts common;
  int samples = 100000;
  int pairs = 20;
};

int cmd_noise_check(const NoiseCheckOpts& opts) {
  SchemeConfig cfg = opts.common.cfg;
  cfg.covariance = make_covariance(opts.common);
  if (cfg.covariance.truncation() < 1) {
    throw ConfigError({"modes: need K >= 1 for the covariance check"});
  }
  const auto grid = UniformGrid::create(cfg.n_interior);
  const NoiseSampler sampler(cfg.covariance, grid);
  const double dt = cfg.dt;

  // deterministic choice of interior node pairs
  GaussianStream picker = fork_stream(cfg.seed, 0xffffffffu, 0);
  std::vector<std::pair<int, int>> pairs;
  for (int p = 0; p < opts.pairs; ++p) {
    const int a = 1 + static_cast<int>(picker.next_uniform() *
                                       cfg.n_interior);
    const int b = 1 + static_cast<int>(picker.next_uniform() *
                                       cfg.n_interior);
    pairs.emplace_back(std::min(a, cfg.n_interior),
                       std::min(b, cfg.n_interior));
  }

  std::vector<double> mean(pairs.size(), 0.0), mean_sq(pairs.size(), 0.0);
  for (int m = 0; m < opts.samples; ++m) {
    GaussianStream stream =
        fork_stream(cfg.seed, static_cast<std::uint32_t>(m), 0);
    const NoiseIncrement inc = sampler.sample(dt, stream);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double prod = inc.values[pairs[p].first].real() *
                          inc.values[pairs[p].second].real();
      mean[p] += prod;
      mean_sq[p] += prod * prod;
    }
  }

  bool all_ok = true;
  std::ostringstream csv;
  ConfigMap config = resolved_config(opts.common, "noise-check");
  config["samples"] = std::to_string(opts.samples);
  config["pairs"] = std::to_string(opts.pairs);

  csv << "la,lb,x,y,empirical,exact,stderr,ok\n";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [la, lb] = pairs[p];
    const double x = grid->node(la);
    const double y = grid->node(lb);
    double exact = 0.0;
    for (int k = 1; k <= cfg.covariance.truncation(); ++k) {
      exact += cfg.covariance.eigenvalues()[static_cast<std::size_t>(k - 1)] *
               SpectralCovariance::basis_value(k, x) *
               SpectralCovariance::basis_value(k, y);
    }
    exact *= dt * cfg.noise_scale * cfg.noise_scale;
    const double avg = mean[p] / opts.samples;
    const double var = mean_sq[p] / opts.samples - avg * avg;
    const double se = std::sqrt(var / opts.samples);
    const bool ok = std::abs(avg - exact) <= 3.0 * se;
    all_ok = all_ok && ok;
    csv << la << ',' << lb << ',' << format_double(x) << ','
        << format_double(y) << ',' << format_double(avg) << ','
        << format_double(exact) << ',' << format_double(se) << ','
        << (ok ? 1 : 0) << '\n';
  }

  OutputSet outputs(opts.common.out_dir, "noise-check", config,
                    resolve_workers(opts.common.workers));
  if (want_csv(opts.common)) {
    std::ofstream out = outputs.open("noise_check.csv");
    write_noise_audit_header(out, config);
    out << csv.str();
  }
  if (want_json(opts.common)) {
    std::ostringstream json;
    json << "{\n  \"pass\": " << (all_ok ? "true" : "false") << "\n}\n";
    outputs.write_text("noise_check.json", json.str());
  }
  outputs.finalize();

  std::cout << "covariance check: " << (all_ok ? "pass" : "FAIL") << "\n";
  return all_ok ? kExitOk : kExitCheckFailed;
}

struct AppBundle {
  CLI::App app{
      "Finite difference simulator for the 1-d stochastic cubic Schrodinger "
      "equation with multiplicative spectral noise"};
  SimulateOpts sim;
  ConvergeOpts conv;
  ResidualOpts resid;
  DependOpts dep;
  NoiseCheckOpts nc;
  CLI::App* simulate = nullptr;
  CLI::App* converge = nullptr;
  CLI::App* residual = nullptr;
  CLI::App* depend = nullptr;
  CLI::App* noise_check = nullptr;

  AppBundle() {
    app.require_subcommand(1);

    simulate = app.add_subcommand(
        "simulate",
        "Evolve one trajectory; writes trajectory.csv (columns "
        "step,t,node,x,re,im) and functionals.csv (columns t,charge,energy_h,"
        "lyapunov_2,h1_seminorm,linf,gn_slack)");
    add_physics_options(simulate, sim.common);
    simulate->add_option("--dump-every", sim.dump_every,
                         "Snapshot cadence in steps (0: first and last only)")
        ->capture_default_str();
    simulate->add_flag("--dump-binary", sim.dump_binary,
                       "Also write trajectory.bin (little-endian float64)");
    simulate->add_flag("--dump-noise", sim.dump_noise,
                       "Write noise.csv audit rows (columns step,k,xi)");
    simulate->add_option("--monitor-every", sim.monitor_every,
                         "Functional report cadence in steps (0 disables)")
        ->capture_default_str();

    converge = app.add_subcommand(
        "converge",
        "Coupled-path strong-error study over a grid ladder; writes "
        "record.csv (columns h,error,stderr), record.json and summary.txt");
    add_physics_options(converge, conv.common);
    converge->add_option("--coarse-n", conv.coarse_n,
                         "Coarse interior sizes (>= 3, nested in --fine-n)")
        ->capture_default_str();
    converge->add_option("--fine-n", conv.fine_n,
                         "Reference interior size (>= 4x finest coarse)")
        ->capture_default_str();
    converge->add_option("--samples", conv.samples, "Coupled sample count")
        ->capture_default_str();
    converge->add_option("--bootstrap", conv.bootstrap,
                         "Bootstrap replicates for the order CI")
        ->capture_default_str();

    residual = app.add_subcommand(
        "residual",
        "Second-difference stencil defect on closed-form data; writes "
        "residual.csv (columns n,h,linf) and residual.json");
    add_physics_options(residual, resid.common);
    residual->add_option("--profile", resid.profile,
                         "Closed-form profile with exact second derivative")
        ->capture_default_str();
    residual->add_option("--n-list", resid.n_list, "Grid ladder (>= 3 sizes)")
        ->capture_default_str();

    depend = app.add_subcommand(
        "depend",
        "Initial-data dependence: error between coupled runs from u0 and "
        "u0 + delta sin(k pi x); writes depend.csv (columns delta,"
        "input_distance,error,stderr,excluded) and depend.json");
    add_physics_options(depend, dep.common);
    depend->add_option("--delta", dep.deltas, "Perturbation sizes")
        ->capture_default_str();
    depend->add_option("--perturb-k", dep.perturb_k,
                       "Wavenumber of the perturbation profile")
        ->capture_default_str();
    depend->add_option("--samples", dep.samples, "Samples per delta")
        ->capture_default_str();

    noise_check = app.add_subcommand(
        "noise-check",
        "Empirical increment covariance against the spectral closed form; "
        "writes noise_check.csv (columns la,lb,x,y,empirical,exact,stderr,"
        "ok)");
    add_physics_options(noise_check, nc.common);
    noise_check->add_option("--samples", nc.samples, "Increment draws")
        ->capture_default_str();
    noise_check->add_option("--pairs", nc.pairs, "Random node pairs to test")
        ->capture_default_str();
  }

  CLI::App* parsed_subcommand() {
    for (CLI::App* sub :
         {simulate, converge, residual, depend, noise_check}) {
      if (sub->parsed()) return sub;
    }
    return nullptr;
  }

  const std::string& config_path() {
    if (simulate->parsed()) return sim.common.config_path;
    if (converge->parsed()) return conv.common.config_path;
    if (residual->parsed()) return resid.common.config_path;
    if (depend->parsed()) return dep.common.config_path;
    return nc.common.config_path;
  }

  int dispatch() {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (converge->parsed()) return cmd_converge(conv);
    if (residual->parsed()) return cmd_residual(resid);
    if (depend->parsed()) return cmd_depend(dep);
    if (noise_check->parsed()) return cmd_noise_check(nc);
    return kExitConfig;
  }
};

/// Flat key=value file: one entry per line, '#' comments, keys named after
/// the long options (dashes and underscores interchangeable). Values of
/// list options may be comma separated.
std::vector<std::pair<std::string, std::string>> read_flat_config(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError({"config: line " + std::to_string(line_no) +
                         ": expected key=value"});
    }
    std::string key = line.substr(0, line.find_last_not_of(" \t", eq - 1) + 1);
    std::string value = line.substr(eq + 1);
    const auto vbegin = value.find_first_not_of(" \t");
    value = vbegin == std::string::npos ? "" : value.substr(vbegin);
    for (auto& c : key) {
      if (c == '_') c = '-';
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

/// Command line arguments synthesized from the config file for every key
/// the user did not set explicitly; flags always win over the file.
std::vector<std::string> merge_config(AppBundle& pass1,
                                      const std::vector<std::string>& args) {
  CLI::App* sub = pass1.parsed_subcommand();
  const auto entries = read_flat_config(pass1.config_path());
  std::vector<std::string> merged;
  merged.push_back(args.front());  // the subcommand name
  std::vector<std::string> problems;
  for (const auto& [key, value] : entries) {
    const std::string flag = "--" + key;
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option(flag);
    } catch (const CLI::OptionNotFound&) {
      problems.push_back(key + ": unknown configuration key");
      continue;
    }
    if (opt->count() > 0) continue;  // explicit flag wins
    merged.push_back(flag);
    std::stringstream items(value);
    std::string item;
    while (std::getline(items, item, ',')) merged.push_back(item);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

int run(const std::vector<std::string>& args) {
  AppBundle pass1;
  std::vector<const char*> argv1{"sns"};
  for (const auto& a : args) argv1.push_back(a.c_str());
  try {
    pass1.app.parse(static_cast<int>(argv1.size()), argv1.data());
  } catch (const CLI::CallForHelp& e) {
    return pass1.app.exit(e);
  } catch (const CLI::ParseError& e) {
    pass1.app.exit(e);
    return kExitConfig;
  }

  AppBundle pass2;
  AppBundle* active = &pass1;
  if (!pass1.config_path().empty()) {
    const std::vector<std::string> merged = merge_config(pass1, args);
    std::vector<const char*> argv2{"sns"};
    for (const auto& a : merged) argv2.push_back(a.c_str());
    try {
      pass2.app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::ParseError& e) {
      pass2.app.exit(e);
      return kExitConfig;
    }
    active = &pass2;
  }
  return active->dispatch();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const ConfigError& e) {
    std::cerr << "sns: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BlowUpError& e) {
    std::cerr << "sns: " << e.what() << "\n";
    return kExitBlowUp;
  } catch (const FixedPointDivergedError& e) {
    std::cerr << "sns: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "sns: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "sns: " << e.what() << "\n";
    return kExitConfig;
  }
}
