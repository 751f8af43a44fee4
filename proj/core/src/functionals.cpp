#include "sns/functionals.hpp"

#include <cmath>
#include <stdexcept>

namespace sns {

namespace {

void require_dirichlet(const GridFunction& u, const char* what) {
  if (!u.is_dirichlet()) {
    throw std::invalid_argument(std::string(what) +
                                ": requires homogeneous Dirichlet data");
  }
}

/// m-fold alternating difference. Each d-d+ pair equals the Dirichlet
/// Laplacian at interior nodes, so even pairs are applied through
/// discrete_laplacian; that keeps the zero-fill convention of the single
/// difference operators out of the result. Odd orders end with one forward
/// difference.
GridFunction alternating_diff(const GridFunction& u, int order) {
  GridFunction out = u;
  for (int j = 0; j < order / 2; ++j) out = discrete_laplacian(out);
  if (order % 2 == 1) out = forward_diff(out);
  return out;
}

}  // namespace

double charge(const GridFunction& u) {
  require_dirichlet(u, "charge");
  return inner_h(u, u);
}

double energy_h(const GridFunction& u, int lambda) {
  require_dirichlet(u, "energy_h");
  const double l4 = norm_l4h(u);
  return 0.5 * h1_seminorm_sq(u) -
         static_cast<double>(lambda) / 4.0 * (l4 * l4 * l4 * l4);
}

double energy_bounds_slack(const GridFunction& u, int lambda) {
  const double grad_sq = h1_seminorm_sq(u);
  const double q = charge(u);
  const double charge_cubed = q * q * q;
  const double energy = energy_h(u, lambda);
  const double lower = 0.25 * grad_sq - 0.25 * charge_cubed;
  const double upper = 0.75 * grad_sq + 0.25 * charge_cubed;
  return std::min(energy - lower, upper - energy);
}

bool energy_bounds_check(const GridFunction& u, int lambda) {
  return energy_bounds_slack(u, lambda) >= -1e-10;
}

double lyapunov_f(const GridFunction& u, int lambda, int order) {
  require_dirichlet(u, "lyapunov_f");
  if (order < 2) throw std::invalid_argument("lyapunov_f: order must be >= 2");
  if (order > u.grid().n_interior()) {
    throw std::invalid_argument("lyapunov_f: grid too small for order");
  }
  const GridFunction ds = alternating_diff(u, order);
  double quad = inner_h(ds, ds);

  // (-L)^{order-1} u
  GridFunction pow = u;
  for (int j = 0; j < order - 1; ++j) {
    pow = discrete_laplacian(pow);
    pow *= Complex{-1.0, 0.0};
  }
  GridFunction cubic(u.grid_ptr());
  for (int l = 0; l < u.n_nodes(); ++l) {
    cubic[l] = std::norm(u[l]) * u[l];
  }
  return quad - static_cast<double>(lambda) * inner_h(pow, cubic);
}

double sobolev_seminorm_h(const GridFunction& u, int order) {
  if (order < 0 || order > 5) {
    throw std::invalid_argument("sobolev_seminorm_h: order must be in [0,5]");
  }
  if (order > u.grid().n_interior()) {
    throw std::invalid_argument("sobolev_seminorm_h: grid too small for order");
  }
  if (order == 0) return norm_h(u);
  return norm_h(alternating_diff(u, order));
}

StateStats state_stats(const GridFunction& u) {
  StateStats s;
  const int n = u.n_nodes();
  const double h = u.grid().step();
  double charge_sum = 0.0, grad_sum = 0.0, quartic_sum = 0.0, linf = 0.0;
  for (int l = 0; l < n; ++l) {
    const double m2 = std::norm(u[l]);
    charge_sum += m2;
    quartic_sum += m2 * m2;
    linf = std::max(linf, m2);
    if (l + 1 < n) grad_sum += std::norm(u[l + 1] - u[l]);
  }
  s.charge = charge_sum * h;
  s.grad_sq = grad_sum / h;
  s.l4_pow4 = quartic_sum * h;
  s.linf = std::sqrt(linf);
  return s;
}

double energy_from(const StateStats& s, int lambda) {
  return 0.5 * s.grad_sq - static_cast<double>(lambda) / 4.0 * s.l4_pow4;
}

double energy_slack_from(const StateStats& s, int lambda) {
  const double charge_cubed = s.charge * s.charge * s.charge;
  const double energy = energy_from(s, lambda);
  const double lower = 0.25 * s.grad_sq - 0.25 * charge_cubed;
  const double upper = 0.75 * s.grad_sq + 0.25 * charge_cubed;
  return std::min(energy - lower, upper - energy);
}

FunctionalReport FunctionalReport::compute(const GridFunction& u, int lambda,
                                           double t) {
  FunctionalReport r;
  r.time = t;
  r.charge = sns::charge(u);
  r.energy_h = sns::energy_h(u, lambda);
  r.lyapunov_2 =
      u.grid().n_interior() >= 2 ? lyapunov_f(u, lambda, 2) : 0.0;
  r.h1_seminorm = std::sqrt(h1_seminorm_sq(u));
  r.linf = norm_linf(u);
  r.gn_slack = 2.0 * std::sqrt(r.charge) * r.h1_seminorm - r.linf * r.linf;
  return r;
}

}  // namespace sns
