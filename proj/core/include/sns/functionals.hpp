#pragma once

#include "sns/grid.hpp"

namespace sns {

/// ||u||_h^2, conserved almost surely by the dynamics.
double charge(const GridFunction& u);

/// Discrete energy 1/2 ||d+ u||_h^2 - (lambda/4) ||u||_{l4}^4.
double energy_h(const GridFunction& u, int lambda);

/// Both sides of the energy sandwich
///   1/4 ||d+ u||_h^2 - 1/4 ||u||_h^6 <= U^h(u) <= 3/4 ||d+ u||_h^2 + 1/4 ||u||_h^6
/// hold within 1e-10 absolute slack. The interior inequality is a theorem;
/// this checks the floating point evaluation of it.
bool energy_bounds_check(const GridFunction& u, int lambda);

/// Smallest of the two sandwich slacks (negative when violated).
double energy_bounds_slack(const GridFunction& u, int lambda);

/// Monitoring proxy of the smoothness functional
///   ||D^s u||_h^2 - lambda <(-L)^{s-1} u, |u|^2 u>_h
/// where L is the discrete Laplacian and D^s alternates forward/backward
/// differences to stay centered (D^2 = L). Diagnostic only; requires
/// n_interior >= s.
double lyapunov_f(const GridFunction& u, int lambda, int order);

/// ||D^m u||_h with the same alternating difference stencil; m = 0 gives
/// norm_h. Supports m <= 5 and m <= n_interior.
double sobolev_seminorm_h(const GridFunction& u, int order);

/// Raw sums behind the monitored functionals, gathered in one pass over
/// the state; the ensemble drivers use this instead of the individual
/// functions to keep the per-step overhead at a single sweep.
struct StateStats {
  double charge = 0.0;
  double grad_sq = 0.0;   // ||d+ u||_h^2
  double l4_pow4 = 0.0;   // ||u||_{l4}^4
  double linf = 0.0;
};

StateStats state_stats(const GridFunction& u);
double energy_from(const StateStats& s, int lambda);
double energy_slack_from(const StateStats& s, int lambda);

/// One row of the per-step diagnostics stream.
struct FunctionalReport {
  double time = 0.0;
  double charge = 0.0;
  double energy_h = 0.0;
  double lyapunov_2 = 0.0;   // 0 when the grid cannot support the stencil
  double h1_seminorm = 0.0;
  double linf = 0.0;
  double gn_slack = 0.0;     // 2 ||u||_h ||d+ u||_h - ||u||_linf^2

  static FunctionalReport compute(const GridFunction& u, int lambda, double t);
};

}  // namespace sns
