#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sns/grid.hpp"
#include "sns/rng.hpp"

namespace sns {

/// Covariance operator Q given by its spectral pairs (q_k, e_k) in the
/// sine basis e_k(x) = sqrt(2) sin(k pi x), truncated at K modes. Q^{1/2}
/// acts diagonally: Q^{1/2} e_k = sqrt(q_k) e_k.
class SpectralCovariance {
 public:
  enum class BasisKind { sine };

  SpectralCovariance() = default;

  /// q_k = k^{-decay_exponent} for k = 1..truncation. The untruncated
  /// Hilbert-Schmidt sum at Sobolev order s converges iff the decay
  /// exponent exceeds 2s + 1.
  static SpectralCovariance power_decay(int truncation, double decay_exponent);

  /// Explicit nonnegative eigenvalue list.
  static SpectralCovariance from_eigenvalues(std::vector<double> eigenvalues);

  int truncation() const { return static_cast<int>(eigenvalues_.size()); }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::span<const double> sqrt_eigenvalues() const { return sqrt_eigenvalues_; }
  BasisKind basis_kind() const { return BasisKind::sine; }
  /// Decay exponent used by power_decay; 0 for explicit lists.
  double decay_exponent() const { return decay_exponent_; }

  /// e_k(x) for the sine basis, k >= 1.
  static double basis_value(int k, double x);

  /// Largest integer s with decay_exponent > 2s + 1, i.e. the highest
  /// Sobolev order at which the untruncated sum would still converge.
  /// -1 when no order is admissible or the spectrum is an explicit list.
  int max_admissible_sobolev_order() const;

 private:
  std::vector<double> eigenvalues_;
  std::vector<double> sqrt_eigenvalues_;
  double decay_exponent_ = 0.0;
};

/// Truncated Hilbert-Schmidt norm of Q^{1/2} from L^2 into H^s:
/// (sum_k q_k |e_k|_{H^s}^2)^{1/2} with |e_k|_{H^s}^2 = sum_{j=0..s} (k pi)^{2j}
/// for the sine basis.
double hs_norm(const SpectralCovariance& cov, int sobolev_order);

/// F_Q(l) = sum_k q_k e_k(x_l)^2; real, nonnegative, zero at the boundary.
GridFunction evaluate_fq(const SpectralCovariance& cov,
                         std::shared_ptr<const UniformGrid> grid);

/// One Q-Wiener increment evaluated at the grid nodes. The underlying
/// standard normal draws are retained so the same realization can be
/// re-evaluated on another (nested) grid, which is what couples paths
/// across resolutions.
struct NoiseIncrement {
  GridFunction values;       // real-valued; imaginary parts exactly 0
  double dt = 0.0;
  std::vector<double> draws; // xi_k, k = 1..K
};

/// Evaluator for increments of one covariance on one grid. Caches the
/// basis table e_k(x_l) so per-step sampling performs no transcendental
/// calls. The table entries at nodes shared between nested grids are
/// bit-identical, hence so are the evaluated increments.
class NoiseSampler {
 public:
  NoiseSampler(SpectralCovariance cov, std::shared_ptr<const UniformGrid> grid);

  const SpectralCovariance& covariance() const { return cov_; }
  const std::shared_ptr<const UniformGrid>& grid_ptr() const { return grid_; }

  /// Draws K standard normals from the stream and evaluates the increment.
  NoiseIncrement sample(double dt, GaussianStream& stream,
                        double scale = 1.0) const;

  /// Evaluates the increment for externally supplied draws (coupling path).
  NoiseIncrement from_draws(std::span<const double> draws, double dt,
                            double scale = 1.0) const;

  /// from_draws without allocating; writes into `out`.
  void accumulate(std::span<const double> draws, double dt, double scale,
                  GridFunction& out) const;

 private:
  SpectralCovariance cov_;
  std::shared_ptr<const UniformGrid> grid_;
  // basis_[k * n_nodes + l] = e_{k+1}(x_l)
  std::vector<double> basis_;
};

/// Convenience one-shot form of NoiseSampler::sample.
NoiseIncrement sample_increment(const SpectralCovariance& cov,
                                std::shared_ptr<const UniformGrid> grid,
                                double dt, GaussianStream& stream);

/// The K draws for (seed, sample, step), in mode order.
std::vector<double> draw_modes(std::uint64_t seed, std::uint32_t sample,
                               std::uint64_t step, int truncation);

}  // namespace sns
