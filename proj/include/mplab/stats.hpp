#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mplab::stats {

/// Pairwise (cascade) summation; the association order depends only on the
/// length of the input.
double pairwise_sum(std::span<const double> values);

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(count); 0 for a single value
  double sd = 0.0;
  std::size_t count = 0;
};

MeanSe mean_se(std::span<const double> values);

/// Linear-interpolation quantile (Hyndman-Fan type 7), prob in [0, 1].
double quantile(std::vector<double> values, double prob);
double median(std::vector<double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample KS critical value c(alpha) * sqrt((n+m)/(n*m)),
/// c(alpha) = sqrt(-ln(alpha/2) / 2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;   // 0 when fewer than three points
  double ci_lo = 0.0;      // 95% t-interval on the slope
  double ci_hi = 0.0;
};

/// Ordinary least squares y = intercept + slope * x; needs >= 2 distinct x.
LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

}  // namespace mplab::stats
