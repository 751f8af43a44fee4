#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sns {

/// Least-squares fit of log(y) against log(x); the slope is the observed
/// convergence order. The confidence interval is populated only by the
/// bootstrap variants.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log space
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool has_ci = false;
  int n_points = 0;
};

/// OLS on (log x_i, log y_i). Requires >= 2 points, all positive.
RateFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Root-mean-square of per-sample values: sqrt(mean(v_i^2)).
double rms(std::span<const double> values);

/// Standard error of rms(values) by the delta method.
double rms_std_error(std::span<const double> values);

/// ((1/M) sum v_i^p)^(1/p).
double p_mean(std::span<const double> values, double p);

/// Paired bootstrap over samples for an order estimate: values_by_x[i][m]
/// is the m-th per-sample value at abscissa x[i] (same sample m across all
/// i). Resamples sample indices, recomputes the rms per abscissa, refits,
/// and reports the 95% percentile interval. `aggregate_p` = 2 gives the
/// rms aggregation; other p give the L^p analogue.
RateFit fit_order_bootstrap(std::span<const double> x,
                            const std::vector<std::vector<double>>& values_by_x,
                            int replicates, std::uint64_t seed,
                            double aggregate_p = 2.0);

}  // namespace sns
