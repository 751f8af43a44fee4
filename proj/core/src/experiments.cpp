#include "sns/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "sns/parallel.hpp"

namespace sns {

GridFunction truncation_residual(const Profile& profile,
                                 std::shared_ptr<const UniformGrid> grid) {
  if (!profile.has_second_derivative()) {
    throw std::invalid_argument(
        "truncation_residual: profile lacks an exact second derivative");
  }
  // True node values, no boundary zeroing: the stencil sees the function
  // itself, not its Dirichlet restriction.
  const GridFunction u = profile.sample_on(grid, /*enforce_dirichlet=*/false);
  GridFunction out(std::move(grid));
  const auto& g = out.grid();
  const double h = g.step();
  const double inv_h2 = 1.0 / (h * h);
  for (int l = 1; l <= g.n_interior(); ++l) {
    const Complex stencil = (u[l + 1] - 2.0 * u[l] + u[l - 1]) * inv_h2;
    out[l] = profile.second_derivative(g.node(l)) - stencil;
  }
  return out;
}

ResidualReport residual_study(const Profile& profile,
                              const std::vector<int>& n_interior) {
  if (n_interior.size() < 3) {
    throw std::invalid_argument("residual_study: need >= 3 grids");
  }
  ResidualReport report;
  report.profile = profile.name;
  report.n_interior = n_interior;
  for (int n : n_interior) {
    auto grid = UniformGrid::create(n);
    report.h.push_back(grid->step());
    report.linf.push_back(norm_linf(truncation_residual(profile, grid)));
  }
  const bool all_positive =
      std::all_of(report.linf.begin(), report.linf.end(),
                  [](double v) { return v > 0.0; });
  if (all_positive) {
    report.fit = fit_loglog(report.h, report.linf);
    report.fit_valid = true;
  }
  return report;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One trajectory participating in a lockstep ensemble sample.
struct Leg {
  GridFunction u;
  MidpointStepper stepper;
  std::optional<MidpointStepper> tail_stepper;
  NoiseIncrement increment;
  double charge0 = 0.0;

  Leg(const GridFunction& initial, const SchemeConfig& cfg,
      const StepSchedule& plan)
      : u(initial), stepper(initial.grid_ptr(), cfg) {
    if (plan.remainder > 0.0) {
      tail_stepper.emplace(initial.grid_ptr(), cfg, plan.remainder);
    }
    increment.values = GridFunction::zeros(initial.grid_ptr());
    charge0 = state_stats(u).charge;
  }

  void load_increment(const NoiseSampler& sampler,
                      std::span<const double> draws, double dt, double scale) {
    sampler.accumulate(draws, dt, scale, increment.values);
    increment.dt = dt;
  }

  void advance(const StepSchedule& plan, std::int64_t i, double t) {
    MidpointStepper& s =
        (i < plan.full_steps || !tail_stepper) ? stepper : *tail_stepper;
    s.advance(u, increment, t, i);
  }
};

struct HealthTracker {
  double max_charge_drift = 0.0;
  double min_energy_slack = kInf;

  void observe(const Leg& leg, int lambda) {
    const StateStats s = state_stats(leg.u);
    if (leg.charge0 > 0.0) {
      max_charge_drift = std::max(
          max_charge_drift, std::abs(s.charge - leg.charge0) / leg.charge0);
    }
    min_energy_slack = std::min(min_energy_slack,
                                energy_slack_from(s, lambda));
  }
};

double coupled_error_sq(const GridFunction& fine, const GridFunction& coarse,
                        int ratio) {
  double acc = 0.0;
  const int n = coarse.n_nodes();
  for (int l = 0; l < n; ++l) {
    acc += std::norm(fine[ratio * l] - coarse[l]);
  }
  return acc * coarse.grid().step();
}

double logsumexp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

CoupledEnsembleResult run_coupled_ensemble(const CoupledEnsembleSpec& spec) {
  spec.base.validate();
  if (spec.coarse_n.empty()) {
    throw std::invalid_argument("run_coupled_ensemble: empty coarse grid list");
  }
  if (spec.samples < 1) {
    throw std::invalid_argument("run_coupled_ensemble: samples must be >= 1");
  }

  const auto fine_grid = UniformGrid::create(spec.fine_n);
  std::vector<std::shared_ptr<const UniformGrid>> coarse_grids;
  std::vector<int> ratios;
  int finest_coarse = 0;
  for (int n : spec.coarse_n) {
    auto g = UniformGrid::create(n);
    const int ratio = fine_grid->refinement_ratio_from(*g);
    if (ratio == 0) {
      throw std::invalid_argument(
          "run_coupled_ensemble: coarse grid N=" + std::to_string(n) +
          " is not nested in the reference grid");
    }
    ratios.push_back(ratio);
    coarse_grids.push_back(std::move(g));
    finest_coarse = std::max(finest_coarse, n);
  }
  if (spec.require_rate_geometry) {
    std::vector<std::string> problems;
    if (spec.coarse_n.size() < 3) problems.push_back("need >= 3 coarse grids");
    if ((spec.fine_n + 1) < 4 * (finest_coarse + 1)) {
      problems.push_back(
          "reference grid must be at least 4x finer than the finest coarse "
          "grid");
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
  }

  const int n_grids = static_cast<int>(coarse_grids.size());
  const StepSchedule plan =
      make_step_schedule(spec.base.t_final, spec.base.dt);
  const int truncation = spec.base.covariance.truncation();

  // Shared immutable state: samplers, initial data.
  std::vector<NoiseSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(n_grids) + 1);
  std::vector<GridFunction> initials;
  for (const auto& g : coarse_grids) {
    samplers.emplace_back(spec.base.covariance, g);
    initials.push_back(spec.initial.sample_on(g));
  }
  samplers.emplace_back(spec.base.covariance, fine_grid);
  const GridFunction fine_initial = spec.initial.sample_on(fine_grid);

  struct SampleOutcome {
    bool excluded = false;
    std::vector<double> sup;  // per coarse grid, sup_t of the h-norm
    double charge_drift = 0.0;
    double energy_slack = kInf;
  };
  std::vector<SampleOutcome> outcomes(static_cast<std::size_t>(spec.samples));

  parallel_for_index(spec.samples, spec.workers, [&](int m) {
    SampleOutcome& out = outcomes[static_cast<std::size_t>(m)];
    out.sup.assign(static_cast<std::size_t>(n_grids), 0.0);
    try {
      SchemeConfig cfg = spec.base;
      std::vector<Leg> legs;
      legs.reserve(static_cast<std::size_t>(n_grids) + 1);
      for (int g = 0; g < n_grids; ++g) {
        cfg.n_interior = spec.coarse_n[static_cast<std::size_t>(g)];
        legs.emplace_back(initials[static_cast<std::size_t>(g)], cfg, plan);
      }
      cfg.n_interior = spec.fine_n;
      legs.emplace_back(fine_initial, cfg, plan);
      Leg& fine = legs.back();

      HealthTracker health;
      for (const Leg& leg : legs) health.observe(leg, cfg.lambda);

      std::vector<double> sup_sq(static_cast<std::size_t>(n_grids), 0.0);
      std::vector<double> draws(static_cast<std::size_t>(truncation));
      double t = 0.0;
      for (std::int64_t i = 0; i < plan.total(); ++i) {
        const double dt_i = plan.step_dt(i, spec.base.dt);
        GaussianStream stream = fork_stream(
            spec.base.seed, static_cast<std::uint32_t>(m),
            static_cast<std::uint64_t>(i));
        for (auto& d : draws) d = stream.next();

        for (int g = 0; g <= n_grids; ++g) {
          Leg& leg = legs[static_cast<std::size_t>(g)];
          leg.load_increment(samplers[static_cast<std::size_t>(g)], draws,
                             dt_i, spec.base.noise_scale);
          leg.advance(plan, i, t);
          health.observe(leg, spec.base.lambda);
        }
        t = plan.time_after(i, spec.base.dt, spec.base.t_final);

        for (int g = 0; g < n_grids; ++g) {
          sup_sq[static_cast<std::size_t>(g)] = std::max(
              sup_sq[static_cast<std::size_t>(g)],
              coupled_error_sq(fine.u, legs[static_cast<std::size_t>(g)].u,
                               ratios[static_cast<std::size_t>(g)]));
        }
      }
      for (int g = 0; g < n_grids; ++g) {
        out.sup[static_cast<std::size_t>(g)] =
            std::sqrt(sup_sq[static_cast<std::size_t>(g)]);
      }
      out.charge_drift = health.max_charge_drift;
      out.energy_slack = health.min_energy_slack;
    } catch (const SimulationError&) {
      out.excluded = true;
    }
  });

  CoupledEnsembleResult result;
  ConvergenceRecord& rec = result.record;
  rec.coarse_n = spec.coarse_n;
  rec.fine_n = spec.fine_n;
  rec.samples = spec.samples;
  rec.dt = spec.base.dt;
  rec.t_final = spec.base.t_final;
  rec.lambda = spec.base.lambda;
  rec.truncation = truncation;
  rec.noise_scale = spec.base.noise_scale;
  rec.seed = spec.base.seed;
  rec.initial_name = spec.initial.name;
  rec.min_energy_slack = kInf;

  result.sup_by_grid.assign(static_cast<std::size_t>(n_grids), {});
  for (const auto& out : outcomes) {
    if (out.excluded) {
      ++rec.excluded;
      continue;
    }
    for (int g = 0; g < n_grids; ++g) {
      result.sup_by_grid[static_cast<std::size_t>(g)].push_back(
          out.sup[static_cast<std::size_t>(g)]);
    }
    rec.max_charge_rel_drift =
        std::max(rec.max_charge_rel_drift, out.charge_drift);
    rec.min_energy_slack = std::min(rec.min_energy_slack, out.energy_slack);
  }
  rec.exclusion_fraction =
      static_cast<double>(rec.excluded) / static_cast<double>(spec.samples);
  rec.valid = rec.exclusion_fraction <= 0.05 &&
              rec.excluded < spec.samples;
  if (rec.excluded == spec.samples) {
    rec.min_energy_slack = 0.0;
    return result;
  }

  for (int g = 0; g < n_grids; ++g) {
    rec.h.push_back(coarse_grids[static_cast<std::size_t>(g)]->step());
    rec.error.push_back(rms(result.sup_by_grid[static_cast<std::size_t>(g)]));
    rec.std_error.push_back(
        rms_std_error(result.sup_by_grid[static_cast<std::size_t>(g)]));
  }
  const bool fittable =
      n_grids >= 3 && std::all_of(rec.error.begin(), rec.error.end(),
                                  [](double e) { return e > 0.0; });
  if (fittable) {
    rec.fit = fit_order_bootstrap(rec.h, result.sup_by_grid,
                                  spec.bootstrap_replicates,
                                  spec.base.seed ^ 0x9e3779b97f4a7c15ull);
    rec.fit_valid = true;
  }
  return result;
}

std::vector<double> lp_errors(const CoupledEnsembleResult& result, double p) {
  std::vector<double> out;
  out.reserve(result.sup_by_grid.size());
  for (const auto& sups : result.sup_by_grid) out.push_back(p_mean(sups, p));
  return out;
}

RateFit lp_order(const CoupledEnsembleResult& result, double p,
                 int replicates, std::uint64_t seed) {
  return fit_order_bootstrap(result.record.h, result.sup_by_grid, replicates,
                             seed, p);
}

DependencePoint initial_dependence(const SchemeConfig& cfg,
                                   const GridFunction& u0,
                                   const GridFunction& v0, int samples,
                                   int workers) {
  cfg.validate();
  if (!u0.grid().same_mesh(v0.grid())) {
    throw std::invalid_argument("initial_dependence: grid mismatch");
  }
  if (u0.grid().n_interior() != cfg.n_interior) {
    throw std::invalid_argument("initial_dependence: cfg grid mismatch");
  }
  const StepSchedule plan = make_step_schedule(cfg.t_final, cfg.dt);
  const NoiseSampler sampler(cfg.covariance, u0.grid_ptr());
  const int truncation = cfg.covariance.truncation();

  DependencePoint point;
  point.input_distance = norm_h(u0 - v0);
  point.samples = samples;

  std::vector<double> sups(static_cast<std::size_t>(samples), -1.0);
  parallel_for_index(samples, workers, [&](int m) {
    try {
      Leg a(u0, cfg, plan);
      Leg b(v0, cfg, plan);
      std::vector<double> draws(static_cast<std::size_t>(truncation));
      double sup_sq = 0.0;
      double t = 0.0;
      for (std::int64_t i = 0; i < plan.total(); ++i) {
        const double dt_i = plan.step_dt(i, cfg.dt);
        GaussianStream stream =
            fork_stream(cfg.seed, static_cast<std::uint32_t>(m),
                        static_cast<std::uint64_t>(i));
        for (auto& d : draws) d = stream.next();
        a.load_increment(sampler, draws, dt_i, cfg.noise_scale);
        b.load_increment(sampler, draws, dt_i, cfg.noise_scale);
        a.advance(plan, i, t);
        b.advance(plan, i, t);
        t = plan.time_after(i, cfg.dt, cfg.t_final);
        sup_sq = std::max(sup_sq, coupled_error_sq(a.u, b.u, 1));
      }
      sups[static_cast<std::size_t>(m)] = std::sqrt(sup_sq);
    } catch (const SimulationError&) {
      // leave the slot negative: excluded
    }
  });

  std::vector<double> kept;
  for (double s : sups) {
    if (s >= 0.0) {
      kept.push_back(s);
    } else {
      ++point.excluded;
    }
  }
  if (kept.empty()) return point;
  point.output_error = rms(kept);
  point.std_error = rms_std_error(kept);
  point.per_sample_sup = std::move(kept);
  return point;
}

NoiseScalingResult noise_scaling(const SchemeConfig& cfg,
                                 const GridFunction& u0,
                                 const std::vector<double>& eps_values,
                                 int samples, int workers,
                                 int bootstrap_replicates) {
  cfg.validate();
  if (u0.grid().n_interior() != cfg.n_interior) {
    throw std::invalid_argument("noise_scaling: cfg grid mismatch");
  }
  const StepSchedule plan = make_step_schedule(cfg.t_final, cfg.dt);
  const NoiseSampler sampler(cfg.covariance, u0.grid_ptr());
  const int truncation = cfg.covariance.truncation();
  const std::size_t n_nodes = static_cast<std::size_t>(u0.n_nodes());

  // Unperturbed trajectory, stored at every step time and shared read-only.
  std::vector<std::vector<Complex>> reference;
  reference.reserve(static_cast<std::size_t>(plan.total()) + 1);
  {
    SchemeConfig det = cfg;
    det.noise_scale = 0.0;
    Leg leg(u0, det, plan);
    reference.push_back(leg.u.values());
    std::vector<double> zero_draws(static_cast<std::size_t>(truncation), 0.0);
    double t = 0.0;
    for (std::int64_t i = 0; i < plan.total(); ++i) {
      const double dt_i = plan.step_dt(i, cfg.dt);
      leg.load_increment(sampler, zero_draws, dt_i, 0.0);
      leg.advance(plan, i, t);
      t = plan.time_after(i, cfg.dt, cfg.t_final);
      reference.push_back(leg.u.values());
    }
  }

  const double h = u0.grid().step();
  auto deviation_sq = [&](const GridFunction& u, std::size_t step) {
    const auto& ref = reference[step];
    double acc = 0.0;
    for (std::size_t l = 0; l < n_nodes; ++l) acc += std::norm(u[static_cast<int>(l)] - ref[l]);
    return acc * h;
  };

  NoiseScalingResult result;
  result.eps = eps_values;
  result.samples = samples;
  result.sup_by_eps.assign(eps_values.size(), {});

  for (std::size_t e = 0; e < eps_values.size(); ++e) {
    const double eps = eps_values[e];
    std::vector<double> sups(static_cast<std::size_t>(samples), -1.0);
    parallel_for_index(samples, workers, [&](int m) {
      try {
        SchemeConfig run_cfg = cfg;
        run_cfg.noise_scale = eps;
        Leg leg(u0, run_cfg, plan);
        std::vector<double> draws(static_cast<std::size_t>(truncation));
        double sup_sq = 0.0;
        double t = 0.0;
        for (std::int64_t i = 0; i < plan.total(); ++i) {
          const double dt_i = plan.step_dt(i, cfg.dt);
          GaussianStream stream =
              fork_stream(cfg.seed, static_cast<std::uint32_t>(m),
                          static_cast<std::uint64_t>(i));
          for (auto& d : draws) d = stream.next();
          leg.load_increment(sampler, draws, dt_i, eps);
          leg.advance(plan, i, t);
          t = plan.time_after(i, cfg.dt, cfg.t_final);
          sup_sq = std::max(sup_sq,
                            deviation_sq(leg.u, static_cast<std::size_t>(i) + 1));
        }
        sups[static_cast<std::size_t>(m)] = std::sqrt(sup_sq);
      } catch (const SimulationError&) {
      }
    });
    for (double s : sups) {
      if (s >= 0.0) {
        result.sup_by_eps[e].push_back(s);
      } else {
        ++result.excluded;
      }
    }
    if (result.sup_by_eps[e].empty()) {
      result.error.push_back(0.0);
      result.std_error.push_back(0.0);
    } else {
      result.error.push_back(rms(result.sup_by_eps[e]));
      result.std_error.push_back(rms_std_error(result.sup_by_eps[e]));
    }
  }

  // Fit over the strictly positive (eps, error) pairs, paired bootstrap
  // across sample indices.
  std::vector<double> fit_eps;
  std::vector<std::vector<double>> fit_sups;
  std::size_t kept_samples = std::numeric_limits<std::size_t>::max();
  for (std::size_t e = 0; e < eps_values.size(); ++e) {
    if (eps_values[e] > 0.0 && result.error[e] > 0.0) {
      fit_eps.push_back(eps_values[e]);
      fit_sups.push_back(result.sup_by_eps[e]);
      kept_samples = std::min(kept_samples, result.sup_by_eps[e].size());
    }
  }
  if (fit_eps.size() >= 2 && kept_samples >= 1) {
    for (auto& sups : fit_sups) sups.resize(kept_samples);
    result.fit = fit_order_bootstrap(fit_eps, fit_sups, bootstrap_replicates,
                                     cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull);
    result.fit_valid = true;
  }
  return result;
}

ExpMomentEstimate exp_moment_probe(const SchemeConfig& cfg,
                                   const GridFunction& u0, int samples,
                                   int workers) {
  cfg.validate();
  if (u0.grid().n_interior() != cfg.n_interior) {
    throw std::invalid_argument("exp_moment_probe: cfg grid mismatch");
  }
  const StepSchedule plan = make_step_schedule(cfg.t_final, cfg.dt);
  const NoiseSampler sampler(cfg.covariance, u0.grid_ptr());
  const int truncation = cfg.covariance.truncation();
  const double u0_norm = std::sqrt(state_stats(u0).charge);

  std::vector<double> integrals(static_cast<std::size_t>(samples), -kInf);
  parallel_for_index(samples, workers, [&](int m) {
    try {
      Leg leg(u0, cfg, plan);
      std::vector<double> draws(static_cast<std::size_t>(truncation));
      double integral = 0.0;
      double prev = u0_norm * std::sqrt(state_stats(leg.u).grad_sq);
      double t = 0.0;
      for (std::int64_t i = 0; i < plan.total(); ++i) {
        const double dt_i = plan.step_dt(i, cfg.dt);
        GaussianStream stream =
            fork_stream(cfg.seed, static_cast<std::uint32_t>(m),
                        static_cast<std::uint64_t>(i));
        for (auto& d : draws) d = stream.next();
        leg.load_increment(sampler, draws, dt_i, cfg.noise_scale);
        leg.advance(plan, i, t);
        t = plan.time_after(i, cfg.dt, cfg.t_final);
        const double cur = u0_norm * std::sqrt(state_stats(leg.u).grad_sq);
        integral += 0.5 * (prev + cur) * dt_i;
        prev = cur;
      }
      integrals[static_cast<std::size_t>(m)] = integral;
    } catch (const SimulationError&) {
    }
  });

  ExpMomentEstimate est;
  est.samples = samples;
  std::vector<double> kept;
  for (double v : integrals) {
    if (std::isfinite(v)) {
      kept.push_back(v);
    } else {
      ++est.excluded;
    }
  }
  if (kept.empty()) return est;
  const double log_m = std::log(static_cast<double>(kept.size()));
  // E[exp(q I)]^(1/q) computed in log space to sidestep overflow.
  std::vector<double> scaled = kept;
  est.q1 = std::exp(logsumexp(scaled) - log_m);
  for (auto& v : scaled) v = 2.0 * v;
  est.q2 = std::exp(0.5 * (logsumexp(scaled) - log_m));
  return est;
}

}  // namespace sns
