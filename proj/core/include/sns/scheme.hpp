#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sns/functionals.hpp"
#include "sns/grid.hpp"
#include "sns/noise.hpp"

namespace sns {

/// Thrown by SchemeConfig::validate with one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// Full specification of one run of the spatially discretized equation.
struct SchemeConfig {
  int n_interior = 63;
  double dt = 1e-4;
  double t_final = 0.5;
  int lambda = -1;  // +1 focusing, -1 defocusing
  SpectralCovariance covariance = SpectralCovariance::power_decay(32, 12.0);
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  double fp_tol = 1e-12;
  int fp_max_iter = 100;
  double blowup_threshold = 1e6;

  void validate() const;  // throws ConfigError
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, std::int64_t step_index)
      : std::runtime_error(what), t_(t), step_index_(step_index) {}
  double t() const { return t_; }
  std::int64_t step_index() const { return step_index_; }

 private:
  double t_;
  std::int64_t step_index_;
};

/// The l-infinity norm crossed the configured threshold. A valid outcome
/// for focusing runs, not a bug; callers decide how to report it.
class BlowUpError : public SimulationError {
 public:
  BlowUpError(double t, std::int64_t step_index, double linf);
  double linf() const { return linf_; }

 private:
  double linf_;
};

/// The midpoint fixed-point iteration failed to reach fp_tol.
class FixedPointDivergedError : public SimulationError {
 public:
  FixedPointDivergedError(double t, std::int64_t step_index, int iterations);
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

/// One trajectory at a step time, plus the diagnostics collected so far.
struct TrajectoryState {
  double t = 0.0;
  GridFunction u;
  std::int64_t step_index = 0;
  std::vector<FunctionalReport> reports;
};

/// Ito-form drift i L u + i lambda |u|^2 u - 1/2 F_Q u at interior nodes,
/// zero at the boundary. Diagnostic companion of the stepper; the midpoint
/// update itself works on the Stratonovich form and never evaluates F_Q.
GridFunction drift(const GridFunction& u, int lambda, const GridFunction& f_q);

/// One-step integrator: implicit midpoint on the Stratonovich form
///   u+ = u + dt (i L u_m + i lambda |u_m|^2 u_m) - i u_m dW,
///   u_m = (u + u+)/2.
/// The linear part is inverted exactly each sweep through a prefactored
/// tridiagonal solve; the fixed-point iteration carries only the cubic and
/// noise terms, so it contracts for any mesh at fixed dt. Conserves
/// ||u||_h^2 up to the solver tolerance.
///
/// One instance owns scratch buffers for one trajectory; not thread-safe.
/// Distinct trajectories use distinct instances.
class MidpointStepper {
 public:
  MidpointStepper(std::shared_ptr<const UniformGrid> grid,
                  const SchemeConfig& cfg);
  MidpointStepper(std::shared_ptr<const UniformGrid> grid,
                  const SchemeConfig& cfg, double dt_override);

  /// Advances u in place by one step; returns the iteration count.
  /// Throws FixedPointDivergedError / BlowUpError with (t, step) attached.
  int advance(GridFunction& u, const NoiseIncrement& dw, double t,
              std::int64_t step_index);

  double dt() const { return dt_; }

 private:
  std::shared_ptr<const UniformGrid> grid_;
  double dt_;
  int lambda_;
  double fp_tol_;
  int fp_max_iter_;
  double blowup_threshold_;
  // prefactored Thomas coefficients of (I - i dt/2 L) on the interior
  std::vector<Complex> upper_ratio_;
  std::vector<Complex> inv_diag_;
  Complex off_;
  // scratch
  std::vector<Complex> rhs_base_;
  std::vector<Complex> candidate_;
  std::vector<Complex> next_;
  std::vector<Complex> solve_tmp_;

  void factor();
  void solve_in_place(std::vector<Complex>& rhs);
};

/// Uniform stepping schedule for [0, t_final]: full_steps steps of dt and,
/// when t_final is not an integer multiple of dt, one trailing step with
/// the reduced remainder.
struct StepSchedule {
  std::int64_t full_steps = 0;
  double remainder = 0.0;
  std::int64_t total() const { return full_steps + (remainder > 0.0); }
  double step_dt(std::int64_t i, double dt) const {
    return i < full_steps ? dt : remainder;
  }
  double time_after(std::int64_t i, double dt, double t_final) const {
    return i + 1 == total() ? t_final : static_cast<double>(i + 1) * dt;
  }
};

StepSchedule make_step_schedule(double t_final, double dt);

/// Source of per-step noise increments for one trajectory.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual NoiseIncrement increment(std::uint64_t step_index, double dt) = 0;
};

/// Production source: spectral draws from the counter-based stream keyed
/// by (seed, sample, step), evaluated through a cached basis table.
class SpectralNoiseSource : public NoiseSource {
 public:
  SpectralNoiseSource(const SpectralCovariance& cov,
                      std::shared_ptr<const UniformGrid> grid,
                      std::uint64_t seed, std::uint32_t sample, double scale);

  NoiseIncrement increment(std::uint64_t step_index, double dt) override;

 private:
  NoiseSampler sampler_;
  std::uint64_t seed_;
  std::uint32_t sample_;
  double scale_;
};

struct Failure {
  enum class Kind { blow_up, fixed_point_diverged };
  Kind kind;
  double t = 0.0;
  std::int64_t step_index = 0;
  std::string message;
};

struct EvolveOptions {
  /// Collect a FunctionalReport every this many steps (0 disables; the
  /// initial and final states are always reported when enabled).
  int monitor_every = 1;
  /// Sample index used to key the noise stream.
  std::uint32_t sample = 0;
};

struct EvolveResult {
  TrajectoryState state;            // at T, or at the failure time
  std::optional<Failure> failure;
  double max_charge_rel_drift = 0.0;
  double min_energy_slack = 0.0;
  double sup_linf = 0.0;
  bool ok() const { return !failure.has_value(); }
};

/// Advances the trajectory from `initial` to t_final, collecting
/// diagnostics per the options. Step failures are returned structurally
/// with the trajectory retained up to the failing time. If t_final is not
/// an integer multiple of dt the last step uses the reduced remainder.
EvolveResult evolve(const SchemeConfig& cfg, const GridFunction& initial,
                    NoiseSource& noise, const EvolveOptions& options = {});

/// Single spec-surface step: advances `state` by one increment.
TrajectoryState step(const TrajectoryState& state, const SchemeConfig& cfg,
                     const NoiseIncrement& increment);

}  // namespace sns
