#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clansim {

/// Monte Carlo estimate with a two-sided confidence interval.
struct Estimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;           // samples that entered the estimate
  std::size_t excluded = 0;    // samples dropped (budget exceeded, escapes)
  std::size_t non_finite = 0;  // samples that were not finite
};

/// Two-sided standard normal quantile for the given confidence level (e.g. 0.95 -> 1.96).
double normal_quantile_two_sided(double confidence);

/// Mean with a normal-approximation interval. Non-finite samples are counted and skipped.
Estimate mean_estimate(std::span<const double> samples, double confidence = 0.95);

/// Binomial proportion with a Wilson score interval.
Estimate proportion_estimate(std::size_t successes, std::size_t trials, double confidence = 0.95);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x values.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Upper tail P(X > stat) for a chi-square variable with `dof` degrees of freedom.
double chi_square_sf(double stat, double dof);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against expected probabilities.
ChiSquareResult chi_square_gof(std::span<const std::size_t> observed, std::span<const double> probabilities);

/// Two-sample homogeneity test on binned counts; empty bins in both samples are dropped.
ChiSquareResult chi_square_two_sample(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace clansim
