#include "sns/scheme.hpp"

#include <cmath>
#include <sstream>

namespace sns {

namespace {

std::string join_messages(const std::vector<std::string>& messages) {
  std::ostringstream out;
  out << "invalid configuration:";
  for (const auto& m : messages) out << "\n  - " << m;
  return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::runtime_error(join_messages(messages)),
      messages_(std::move(messages)) {}

void SchemeConfig::validate() const {
  std::vector<std::string> errors;
  if (n_interior < 1) errors.push_back("n_interior: must be >= 1");
  if (!(dt > 0.0)) errors.push_back("dt: must be > 0");
  if (!(t_final >= 0.0)) errors.push_back("t_final: must be >= 0");
  if (t_final > 0.0 && dt > t_final * (1.0 + 1e-12)) {
    errors.push_back("dt: must be <= t_final");
  }
  if (lambda != 1 && lambda != -1) errors.push_back("lambda: must be +1 or -1");
  if (!(fp_tol > 0.0)) errors.push_back("fp_tol: must be > 0");
  if (fp_max_iter < 1) errors.push_back("fp_max_iter: must be >= 1");
  if (!(blowup_threshold > 0.0)) {
    errors.push_back("blowup_threshold: must be > 0");
  }
  if (!std::isfinite(noise_scale)) {
    errors.push_back("noise_scale: must be finite");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

BlowUpError::BlowUpError(double t, std::int64_t step_index, double linf)
    : SimulationError(
          "blow-up: l-infinity norm " + std::to_string(linf) +
              " exceeded threshold at t = " + std::to_string(t),
          t, step_index),
      linf_(linf) {}

FixedPointDivergedError::FixedPointDivergedError(double t,
                                                 std::int64_t step_index,
                                                 int iterations)
    : SimulationError("fixed-point iteration did not reach tolerance after " +
                          std::to_string(iterations) +
                          " iterations at t = " + std::to_string(t),
                      t, step_index),
      iterations_(iterations) {}

GridFunction drift(const GridFunction& u, int lambda,
                   const GridFunction& f_q) {
  if (!u.is_dirichlet()) {
    throw std::invalid_argument("drift: requires homogeneous Dirichlet data");
  }
  const GridFunction lap = discrete_laplacian(u);
  GridFunction out(u.grid_ptr());
  const int n_int = u.grid().n_interior();
  const Complex i_unit{0.0, 1.0};
  for (int l = 1; l <= n_int; ++l) {
    out[l] = i_unit * lap[l] +
             i_unit * static_cast<double>(lambda) * std::norm(u[l]) * u[l] -
             0.5 * f_q[l].real() * u[l];
  }
  return out;
}

MidpointStepper::MidpointStepper(std::shared_ptr<const UniformGrid> grid,
                                 const SchemeConfig& cfg)
    : MidpointStepper(std::move(grid), cfg, cfg.dt) {}

MidpointStepper::MidpointStepper(std::shared_ptr<const UniformGrid> grid,
                                 const SchemeConfig& cfg, double dt_override)
    : grid_(std::move(grid)),
      dt_(dt_override),
      lambda_(cfg.lambda),
      fp_tol_(cfg.fp_tol),
      fp_max_iter_(cfg.fp_max_iter),
      blowup_threshold_(cfg.blowup_threshold) {
  const std::size_t n = static_cast<std::size_t>(grid_->n_nodes());
  rhs_base_.resize(n);
  candidate_.resize(n);
  next_.resize(n);
  solve_tmp_.resize(n);
  factor();
}

void MidpointStepper::factor() {
  const int n_int = grid_->n_interior();
  const double h = grid_->step();
  const double theta = 0.5 * dt_ / (h * h);
  // A = I - i (dt/2) L: diag 1 + 2 i theta, off-diagonal -i theta.
  const Complex diag{1.0, 2.0 * theta};
  off_ = Complex{0.0, -theta};
  upper_ratio_.assign(static_cast<std::size_t>(n_int), Complex{});
  inv_diag_.assign(static_cast<std::size_t>(n_int), Complex{});
  Complex denom = diag;
  inv_diag_[0] = 1.0 / denom;
  upper_ratio_[0] = off_ * inv_diag_[0];
  for (int i = 1; i < n_int; ++i) {
    denom = diag - off_ * upper_ratio_[static_cast<std::size_t>(i - 1)];
    inv_diag_[static_cast<std::size_t>(i)] = 1.0 / denom;
    upper_ratio_[static_cast<std::size_t>(i)] =
        off_ * inv_diag_[static_cast<std::size_t>(i)];
  }
}

void MidpointStepper::solve_in_place(std::vector<Complex>& rhs) {
  // Thomas forward/backward sweep on interior indices 1..n_int.
  const int n_int = grid_->n_interior();
  solve_tmp_[1] = rhs[1] * inv_diag_[0];
  for (int i = 2; i <= n_int; ++i) {
    solve_tmp_[static_cast<std::size_t>(i)] =
        (rhs[static_cast<std::size_t>(i)] -
         off_ * solve_tmp_[static_cast<std::size_t>(i - 1)]) *
        inv_diag_[static_cast<std::size_t>(i - 1)];
  }
  rhs[static_cast<std::size_t>(n_int)] = solve_tmp_[static_cast<std::size_t>(n_int)];
  for (int i = n_int - 1; i >= 1; --i) {
    rhs[static_cast<std::size_t>(i)] =
        solve_tmp_[static_cast<std::size_t>(i)] -
        upper_ratio_[static_cast<std::size_t>(i - 1)] *
            rhs[static_cast<std::size_t>(i + 1)];
  }
  rhs[0] = Complex{};
  rhs[static_cast<std::size_t>(n_int + 1)] = Complex{};
}

int MidpointStepper::advance(GridFunction& u, const NoiseIncrement& dw,
                             double t, std::int64_t step_index) {
  if (u.n_nodes() != grid_->n_nodes() ||
      dw.values.n_nodes() != grid_->n_nodes()) {
    throw std::invalid_argument(
        "MidpointStepper::advance: state or increment grid mismatch");
  }
  const int n_int = grid_->n_interior();
  const double h = grid_->step();
  const double theta = 0.5 * dt_ / (h * h);
  const Complex i_unit{0.0, 1.0};
  const auto& uv = u.values();
  const auto& w = dw.values.values();

  // rhs_base = (I + i dt/2 L) u on the interior.
  for (int l = 1; l <= n_int; ++l) {
    const Complex second_diff = uv[static_cast<std::size_t>(l + 1)] -
                                2.0 * uv[static_cast<std::size_t>(l)] +
                                uv[static_cast<std::size_t>(l - 1)];
    rhs_base_[static_cast<std::size_t>(l)] =
        uv[static_cast<std::size_t>(l)] + Complex{0.0, theta} * second_diff;
  }
  rhs_base_[0] = Complex{};
  rhs_base_[static_cast<std::size_t>(n_int + 1)] = Complex{};

  // Fixed-point iteration on the cubic and noise terms only.
  candidate_ = uv;
  const double lam = static_cast<double>(lambda_);
  for (int iter = 1; iter <= fp_max_iter_; ++iter) {
    for (int l = 1; l <= n_int; ++l) {
      const Complex mid = 0.5 * (uv[static_cast<std::size_t>(l)] +
                                 candidate_[static_cast<std::size_t>(l)]);
      const Complex nonlinear =
          i_unit * (dt_ * lam * std::norm(mid)) * mid -
          i_unit * w[static_cast<std::size_t>(l)].real() * mid;
      next_[static_cast<std::size_t>(l)] =
          rhs_base_[static_cast<std::size_t>(l)] + nonlinear;
    }
    next_[0] = Complex{};
    next_[static_cast<std::size_t>(n_int + 1)] = Complex{};
    solve_in_place(next_);

    double delta_sq = 0.0;
    for (int l = 1; l <= n_int; ++l) {
      delta_sq += std::norm(next_[static_cast<std::size_t>(l)] -
                            candidate_[static_cast<std::size_t>(l)]);
    }
    const double delta = std::sqrt(delta_sq * h);
    candidate_.swap(next_);
    if (!std::isfinite(delta)) {
      throw FixedPointDivergedError(t, step_index, iter);
    }
    if (delta <= fp_tol_) {
      u.values() = candidate_;
      u.zero_boundary();
      const double linf = norm_linf(u);
      if (!(linf <= blowup_threshold_) || !u.all_finite()) {
        throw BlowUpError(t + dt_, step_index + 1, linf);
      }
      return iter;
    }
  }
  throw FixedPointDivergedError(t, step_index, fp_max_iter_);
}

SpectralNoiseSource::SpectralNoiseSource(const SpectralCovariance& cov,
                                         std::shared_ptr<const UniformGrid> grid,
                                         std::uint64_t seed,
                                         std::uint32_t sample, double scale)
    : sampler_(cov, std::move(grid)),
      seed_(seed),
      sample_(sample),
      scale_(scale) {}

NoiseIncrement SpectralNoiseSource::increment(std::uint64_t step_index,
                                              double dt) {
  GaussianStream stream = fork_stream(seed_, sample_, step_index);
  return sampler_.sample(dt, stream, scale_);
}

StepSchedule make_step_schedule(double t_final, double dt) {
  StepSchedule plan;
  if (t_final <= 0.0) return plan;
  const double ratio = t_final / dt;
  const auto rounded = static_cast<std::int64_t>(std::llround(ratio));
  if (rounded > 0 && std::abs(ratio - static_cast<double>(rounded)) <
                         1e-9 * std::max(1.0, ratio)) {
    plan.full_steps = rounded;
    return plan;
  }
  plan.full_steps = static_cast<std::int64_t>(std::floor(ratio));
  plan.remainder = t_final - static_cast<double>(plan.full_steps) * dt;
  if (plan.remainder < 1e-14 * t_final) plan.remainder = 0.0;
  return plan;
}

EvolveResult evolve(const SchemeConfig& cfg, const GridFunction& initial,
                    NoiseSource& noise, const EvolveOptions& options) {
  cfg.validate();
  if (initial.grid().n_interior() != cfg.n_interior) {
    throw std::invalid_argument("evolve: initial data grid does not match cfg");
  }
  if (!initial.is_dirichlet()) {
    throw std::invalid_argument("evolve: initial data must be Dirichlet");
  }

  EvolveResult result;
  result.state.u = initial;
  result.state.t = 0.0;
  result.state.step_index = 0;

  const double charge0 = charge(initial);
  result.min_energy_slack = energy_bounds_slack(initial, cfg.lambda);
  result.sup_linf = norm_linf(initial);

  const bool monitor = options.monitor_every > 0;
  if (monitor) {
    result.state.reports.push_back(
        FunctionalReport::compute(initial, cfg.lambda, 0.0));
  }

  const StepSchedule plan = make_step_schedule(cfg.t_final, cfg.dt);
  MidpointStepper stepper(initial.grid_ptr(), cfg);
  std::unique_ptr<MidpointStepper> tail_stepper;
  if (plan.remainder > 0.0) {
    tail_stepper = std::make_unique<MidpointStepper>(initial.grid_ptr(), cfg,
                                                     plan.remainder);
  }

  const std::int64_t total_steps = plan.total();
  for (std::int64_t i = 0; i < total_steps; ++i) {
    const bool tail = i >= plan.full_steps;
    const double step_dt = plan.step_dt(i, cfg.dt);
    MidpointStepper& s = tail ? *tail_stepper : stepper;
    const NoiseIncrement dw =
        noise.increment(static_cast<std::uint64_t>(i), step_dt);
    try {
      s.advance(result.state.u, dw, result.state.t, i);
    } catch (const BlowUpError& e) {
      result.failure = Failure{Failure::Kind::blow_up, e.t(), e.step_index(),
                               e.what()};
      return result;
    } catch (const FixedPointDivergedError& e) {
      result.failure = Failure{Failure::Kind::fixed_point_diverged, e.t(),
                               e.step_index(), e.what()};
      return result;
    }
    result.state.step_index = i + 1;
    result.state.t = plan.time_after(i, cfg.dt, cfg.t_final);

    if (charge0 > 0.0) {
      const double drift_rel =
          std::abs(charge(result.state.u) - charge0) / charge0;
      result.max_charge_rel_drift =
          std::max(result.max_charge_rel_drift, drift_rel);
    }
    result.min_energy_slack =
        std::min(result.min_energy_slack,
                 energy_bounds_slack(result.state.u, cfg.lambda));
    result.sup_linf = std::max(result.sup_linf, norm_linf(result.state.u));

    if (monitor && ((i + 1) % options.monitor_every == 0 ||
                    i + 1 == total_steps)) {
      result.state.reports.push_back(FunctionalReport::compute(
          result.state.u, cfg.lambda, result.state.t));
    }
  }
  return result;
}

TrajectoryState step(const TrajectoryState& state, const SchemeConfig& cfg,
                     const NoiseIncrement& increment) {
  if (std::abs(increment.dt - cfg.dt) > 1e-15 * std::max(1.0, cfg.dt)) {
    throw std::invalid_argument("step: increment dt does not match cfg.dt");
  }
  TrajectoryState out = state;
  MidpointStepper stepper(state.u.grid_ptr(), cfg);
  stepper.advance(out.u, increment, state.t, state.step_index);
  out.step_index = state.step_index + 1;
  out.t = static_cast<double>(out.step_index) * cfg.dt;
  return out;
}

}  // namespace sns
