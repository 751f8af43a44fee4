#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sns/profiles.hpp"
#include "sns/rate_fit.hpp"
#include "sns/scheme.hpp"

namespace sns {

/// Pointwise defect of the second-difference stencil on a closed-form
/// function: R(l) = u''(x_l) - (u(l+1) - 2 u(l) + u(l-1)) / h^2 at interior
/// nodes, zero at the boundary. The profile must carry its exact second
/// derivative.
GridFunction truncation_residual(const Profile& profile,
                                 std::shared_ptr<const UniformGrid> grid);

struct ResidualReport {
  std::string profile;
  std::vector<int> n_interior;
  std::vector<double> h;
  std::vector<double> linf;
  RateFit fit;
  bool fit_valid = false;  // false when some residual is exactly zero
};

/// Sup-norm of the stencil defect across a ladder of grids with the fitted
/// log-log order; needs >= 3 grids for the fit.
ResidualReport residual_study(const Profile& profile,
                              const std::vector<int>& n_interior);

/// Per-grid strong-error estimates from coupled coarse/fine paths with the
/// fitted order and its bootstrap confidence interval.
struct ConvergenceRecord {
  std::vector<int> coarse_n;
  int fine_n = 0;
  std::vector<double> h;
  std::vector<double> error;      // rms over samples of sup_t ||.||_h
  std::vector<double> std_error;  // Monte Carlo standard error of `error`
  RateFit fit;
  bool fit_valid = false;
  int samples = 0;
  int excluded = 0;              // blow-up / solver failures, counted out
  double exclusion_fraction = 0.0;
  bool valid = false;            // false when exclusions exceed 5%
  double max_charge_rel_drift = 0.0;
  double min_energy_slack = 0.0;
  // resolved configuration echo
  double dt = 0.0;
  double t_final = 0.0;
  int lambda = 0;
  int truncation = 0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  std::string initial_name;
};

struct CoupledEnsembleSpec {
  SchemeConfig base;             // n_interior is taken from the grid lists
  std::vector<int> coarse_n;
  int fine_n = 511;
  int samples = 64;
  int workers = 0;
  Profile initial = sine_profile(1, 1.0);
  int bootstrap_replicates = 1000;
  /// Enforce the rate-experiment geometry (>= 3 grids, reference at least
  /// 4x finer than the finest coarse grid). Off by default so that the
  /// coarse == fine coupling identity remains expressible.
  bool require_rate_geometry = false;
};

struct CoupledEnsembleResult {
  ConvergenceRecord record;
  /// sup_t ||restrict(u_fine) - u_coarse||_h per kept sample, per grid.
  std::vector<std::vector<double>> sup_by_grid;
};

/// Runs M coupled samples: every grid of a sample consumes the identical
/// (seed, sample, step, mode) Gaussian draws, so per-grid differences
/// estimate discretization error, not statistical noise.
CoupledEnsembleResult run_coupled_ensemble(const CoupledEnsembleSpec& spec);

/// ((1/M) sum_m sup_t ||.||_h^p)^(1/p) per grid from a finished ensemble;
/// p = 2 reproduces the record's error column.
std::vector<double> lp_errors(const CoupledEnsembleResult& result, double p);

/// Order fit of the L^p errors with a paired bootstrap CI.
RateFit lp_order(const CoupledEnsembleResult& result, double p,
                 int replicates, std::uint64_t seed);

struct DependencePoint {
  double input_distance = 0.0;   // ||u0 - v0||_h
  double output_error = 0.0;     // (E[sup_t ||u - v||_h^2])^(1/2)
  double std_error = 0.0;
  int samples = 0;
  int excluded = 0;
  std::vector<double> per_sample_sup;
};

/// Two runs per sample from initial data u0 and v0, driven by the same
/// noise realization.
DependencePoint initial_dependence(const SchemeConfig& cfg,
                                   const GridFunction& u0,
                                   const GridFunction& v0, int samples,
                                   int workers = 0);

struct NoiseScalingResult {
  std::vector<double> eps;
  std::vector<double> error;
  std::vector<double> std_error;
  RateFit fit;
  bool fit_valid = false;
  int samples = 0;
  int excluded = 0;
  std::vector<std::vector<double>> sup_by_eps;
};

/// Deviation of the noise-scale-eps solution from the deterministic one,
/// per eps, with the fitted slope of log error against log eps. The
/// unperturbed trajectory is computed once and shared.
NoiseScalingResult noise_scaling(const SchemeConfig& cfg,
                                 const GridFunction& u0,
                                 const std::vector<double>& eps_values,
                                 int samples, int workers = 0,
                                 int bootstrap_replicates = 1000);

struct ExpMomentEstimate {
  double q1 = 1.0;  // E[exp(I)] with I the path integral
  double q2 = 1.0;  // E[exp(2 I)]^(1/2)
  int samples = 0;
  int excluded = 0;
};

/// Monte Carlo estimate of the exponential path moments
/// E[exp(q int_0^T ||u0||_h ||d+ u(r)||_h dr)]^(1/q) for q = 1, 2, with
/// trapezoidal accumulation of the integrand and log-space reduction.
ExpMomentEstimate exp_moment_probe(const SchemeConfig& cfg,
                                   const GridFunction& u0, int samples,
                                   int workers = 0);

}  // namespace sns
