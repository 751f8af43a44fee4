#include "sns/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sns {

RateFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_loglog: need >= 2 matching points");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("fit_loglog: values must be positive");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  RateFit fit;
  fit.n_points = static_cast<int>(x.size());
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

double rms(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("rms: empty input");
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double rms_std_error(std::span<const double> values) {
  const auto m = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  double mean_sq = 0.0;
  for (double v : values) mean_sq += v * v;
  mean_sq /= m;
  double var_sq = 0.0;
  for (double v : values) {
    const double d = v * v - mean_sq;
    var_sq += d * d;
  }
  var_sq /= (m - 1.0);
  const double se_mean_sq = std::sqrt(var_sq / m);
  const double root = std::sqrt(mean_sq);
  if (root == 0.0) return 0.0;
  // delta method: d sqrt(s) / ds = 1 / (2 sqrt(s))
  return se_mean_sq / (2.0 * root);
}

double p_mean(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("p_mean: empty input");
  if (!(p >= 1.0)) throw std::invalid_argument("p_mean: p must be >= 1");
  if (p == 2.0) return rms(values);
  double acc = 0.0;
  for (double v : values) acc += std::pow(v, p);
  return std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

RateFit fit_order_bootstrap(std::span<const double> x,
                            const std::vector<std::vector<double>>& values_by_x,
                            int replicates, std::uint64_t seed,
                            double aggregate_p) {
  if (values_by_x.size() != x.size()) {
    throw std::invalid_argument("fit_order_bootstrap: size mismatch");
  }
  const std::size_t samples = values_by_x.front().size();
  for (const auto& v : values_by_x) {
    if (v.size() != samples) {
      throw std::invalid_argument(
          "fit_order_bootstrap: unequal sample counts across grids");
    }
  }

  std::vector<double> aggregated(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    aggregated[i] = p_mean(values_by_x[i], aggregate_p);
  }
  RateFit fit = fit_loglog(x, aggregated);

  if (replicates <= 0 || samples < 2) return fit;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples - 1);
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(replicates));
  std::vector<std::size_t> idx(samples);
  std::vector<double> resampled(samples);
  std::vector<double> errs(x.size());
  for (int b = 0; b < replicates; ++b) {
    for (auto& i : idx) i = pick(rng);
    bool usable = true;
    for (std::size_t g = 0; g < x.size(); ++g) {
      for (std::size_t m = 0; m < samples; ++m) {
        resampled[m] = values_by_x[g][idx[m]];
      }
      errs[g] = p_mean(resampled, aggregate_p);
      if (!(errs[g] > 0.0)) usable = false;
    }
    if (!usable) continue;
    slopes.push_back(fit_loglog(x, errs).slope);
  }
  if (slopes.size() >= 16) {
    std::sort(slopes.begin(), slopes.end());
    const auto lo_idx = static_cast<std::size_t>(
        0.025 * static_cast<double>(slopes.size() - 1));
    const auto hi_idx = static_cast<std::size_t>(
        0.975 * static_cast<double>(slopes.size() - 1));
    fit.ci_low = slopes[lo_idx];
    fit.ci_high = slopes[hi_idx];
    fit.has_ci = true;
  }
  return fit;
}

}  // namespace sns
