#include "sns/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sns {

SpectralCovariance SpectralCovariance::power_decay(int truncation,
                                                   double decay_exponent) {
  if (truncation < 0) {
    throw std::invalid_argument("SpectralCovariance: truncation must be >= 0");
  }
  SpectralCovariance cov;
  cov.decay_exponent_ = decay_exponent;
  cov.eigenvalues_.reserve(static_cast<std::size_t>(truncation));
  cov.sqrt_eigenvalues_.reserve(static_cast<std::size_t>(truncation));
  for (int k = 1; k <= truncation; ++k) {
    const double q = std::pow(static_cast<double>(k), -decay_exponent);
    cov.eigenvalues_.push_back(q);
    cov.sqrt_eigenvalues_.push_back(std::sqrt(q));
  }
  return cov;
}

SpectralCovariance SpectralCovariance::from_eigenvalues(
    std::vector<double> eigenvalues) {
  SpectralCovariance cov;
  for (double q : eigenvalues) {
    if (!(q >= 0.0)) {
      throw std::invalid_argument(
          "SpectralCovariance: eigenvalues must be nonnegative");
    }
    cov.sqrt_eigenvalues_.push_back(std::sqrt(q));
  }
  cov.eigenvalues_ = std::move(eigenvalues);
  return cov;
}

double SpectralCovariance::basis_value(int k, double x) {
  // The sine modes are identically zero at the endpoints; return the exact
  // zero instead of sin(k*pi) roundoff so boundary nodes stay Dirichlet.
  if (x == 0.0 || x == 1.0) return 0.0;
  return std::numbers::sqrt2 * std::sin(static_cast<double>(k) *
                                        std::numbers::pi * x);
}

int SpectralCovariance::max_admissible_sobolev_order() const {
  if (decay_exponent_ <= 0.0) return -1;
  // largest integer s with decay > 2s + 1
  const double s = (decay_exponent_ - 1.0) / 2.0;
  int order = static_cast<int>(std::floor(s));
  if (static_cast<double>(order) * 2.0 + 1.0 >= decay_exponent_) --order;
  return order;
}

double hs_norm(const SpectralCovariance& cov, int sobolev_order) {
  if (sobolev_order < 0) {
    throw std::invalid_argument("hs_norm: sobolev_order must be >= 0");
  }
  double total = 0.0;
  const auto qs = cov.eigenvalues();
  for (int k = 1; k <= cov.truncation(); ++k) {
    const double kpi2 = std::pow(static_cast<double>(k) * std::numbers::pi, 2);
    double mode_norm_sq = 0.0;
    double power = 1.0;
    for (int j = 0; j <= sobolev_order; ++j) {
      mode_norm_sq += power;
      power *= kpi2;
    }
    total += qs[static_cast<std::size_t>(k - 1)] * mode_norm_sq;
  }
  return std::sqrt(total);
}

GridFunction evaluate_fq(const SpectralCovariance& cov,
                         std::shared_ptr<const UniformGrid> grid) {
  GridFunction out(std::move(grid));
  const auto& g = out.grid();
  const auto qs = cov.eigenvalues();
  for (int l = 0; l < out.n_nodes(); ++l) {
    double acc = 0.0;
    for (int k = 1; k <= cov.truncation(); ++k) {
      const double e = SpectralCovariance::basis_value(k, g.node(l));
      acc += qs[static_cast<std::size_t>(k - 1)] * e * e;
    }
    out[l] = Complex{acc, 0.0};
  }
  return out;
}

NoiseSampler::NoiseSampler(SpectralCovariance cov,
                           std::shared_ptr<const UniformGrid> grid)
    : cov_(std::move(cov)), grid_(std::move(grid)) {
  const int n = grid_->n_nodes();
  const int truncation = cov_.truncation();
  basis_.resize(static_cast<std::size_t>(truncation) *
                static_cast<std::size_t>(n));
  for (int k = 1; k <= truncation; ++k) {
    double* row = basis_.data() + static_cast<std::size_t>(k - 1) *
                                      static_cast<std::size_t>(n);
    for (int l = 0; l < n; ++l) {
      row[l] = SpectralCovariance::basis_value(k, grid_->node(l));
    }
  }
}

NoiseIncrement NoiseSampler::sample(double dt, GaussianStream& stream,
                                    double scale) const {
  std::vector<double> draws(static_cast<std::size_t>(cov_.truncation()));
  for (auto& d : draws) d = stream.next();
  NoiseIncrement inc = from_draws(draws, dt, scale);
  inc.draws = std::move(draws);
  return inc;
}

NoiseIncrement NoiseSampler::from_draws(std::span<const double> draws,
                                        double dt, double scale) const {
  NoiseIncrement inc;
  inc.values = GridFunction::zeros(grid_);
  inc.dt = dt;
  inc.draws.assign(draws.begin(), draws.end());
  accumulate(draws, dt, scale, inc.values);
  return inc;
}

void NoiseSampler::accumulate(std::span<const double> draws, double dt,
                              double scale, GridFunction& out) const {
  if (dt <= 0.0) throw std::invalid_argument("NoiseSampler: dt must be > 0");
  if (static_cast<int>(draws.size()) != cov_.truncation()) {
    throw std::invalid_argument("NoiseSampler: draw count != truncation");
  }
  const int n = grid_->n_nodes();
  const double sqrt_dt = std::sqrt(dt);
  const auto sq = cov_.sqrt_eigenvalues();
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < cov_.truncation(); ++k) {
    // Mode coefficient is formed once so both grids of a coupled pair
    // multiply the same double into their basis tables.
    const double coef =
        scale * sq[static_cast<std::size_t>(k)] * sqrt_dt *
        draws[static_cast<std::size_t>(k)];
    const double* row = basis_.data() + static_cast<std::size_t>(k) *
                                            static_cast<std::size_t>(n);
    for (int l = 0; l < n; ++l) {
      acc[static_cast<std::size_t>(l)] += coef * row[l];
    }
  }
  for (int l = 0; l < n; ++l) {
    out[l] = Complex{acc[static_cast<std::size_t>(l)], 0.0};
  }
}

NoiseIncrement sample_increment(const SpectralCovariance& cov,
                                std::shared_ptr<const UniformGrid> grid,
                                double dt, GaussianStream& stream) {
  NoiseSampler sampler(cov, std::move(grid));
  return sampler.sample(dt, stream);
}

std::vector<double> draw_modes(std::uint64_t seed, std::uint32_t sample,
                               std::uint64_t step, int truncation) {
  GaussianStream stream = fork_stream(seed, sample, step);
  std::vector<double> draws(static_cast<std::size_t>(truncation));
  for (auto& d : draws) d = stream.next();
  return draws;
}

}  // namespace sns
