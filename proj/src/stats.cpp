#include "clansim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace clansim {

double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0,1)");
  const boost::math::normal_distribution<double> nd;
  return boost::math::quantile(nd, 0.5 + confidence / 2.0);
}

Estimate mean_estimate(std::span<const double> samples, double confidence) {
  Estimate e;
  double sum = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) {
      ++e.non_finite;
      continue;
    }
    sum += v;
    ++e.n;
  }
  if (e.n == 0) return e;
  e.value = sum / static_cast<double>(e.n);
  double ss = 0.0;
  for (double v : samples)
    if (std::isfinite(v)) ss += (v - e.value) * (v - e.value);
  const double var = e.n > 1 ? ss / static_cast<double>(e.n - 1) : 0.0;
  e.std_error = std::sqrt(var / static_cast<double>(e.n));
  const double z = normal_quantile_two_sided(confidence);
  e.ci_low = e.value - z * e.std_error;
  e.ci_high = e.value + z * e.std_error;
  return e;
}

Estimate proportion_estimate(std::size_t successes, std::size_t trials, double confidence) {
  Estimate e;
  e.n = trials;
  if (trials == 0) return e;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z = normal_quantile_two_sided(confidence);
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  e.value = p;
  e.std_error = std::sqrt(p * (1 - p) / n);
  e.ci_low = std::max(0.0, centre - half);
  e.ci_high = std::min(1.0, centre + half);
  if (successes == 0) e.ci_low = 0.0;
  if (successes == trials) e.ci_high = 1.0;
  return e;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  LinearFit f;
  f.points = x.size();
  if (x.size() < 2) throw std::invalid_argument("linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

double chi_square_sf(double stat, double dof) {
  if (dof <= 0) return 1.0;
  const boost::math::chi_squared_distribution<double> cs(dof);
  return boost::math::cdf(boost::math::complement(cs, std::max(stat, 0.0)));
}

ChiSquareResult chi_square_gof(std::span<const std::size_t> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
  std::size_t total = 0;
  for (auto o : observed) total += o;
  ChiSquareResult r;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = probabilities[i] * static_cast<double>(total);
    if (expected <= 0.0) {
      if (observed[i] > 0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - expected;
    r.statistic += diff * diff / expected;
    ++bins;
  }
  r.dof = bins > 0 ? static_cast<double>(bins - 1) : 0.0;
  r.p_value = std::isfinite(r.statistic) ? chi_square_sf(r.statistic, r.dof) : 0.0;
  return r;
}

ChiSquareResult chi_square_two_sample(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("chi_square_two_sample: size mismatch");
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  ChiSquareResult r;
  if (na == 0 || nb == 0) return r;
  const double n = na + nb;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0) continue;
    ++bins;
    const double ea = col * na / n;
    const double eb = col * nb / n;
    r.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  r.dof = bins > 0 ? static_cast<double>(bins - 1) : 0.0;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace clansim
