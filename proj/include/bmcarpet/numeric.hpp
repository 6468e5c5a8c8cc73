#ifndef BMCARPET_NUMERIC_HPP
#define BMCARPET_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bmc::numeric {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(sum exp(v)) with the usual max shift; -inf entries are skipped.
inline double log_sum_exp(std::span<const double> values) {
  double top = neg_inf;
  for (double v : values) top = std::max(top, v);
  if (top == neg_inf) return neg_inf;
  double acc = 0.0;
  for (double v : values)
    if (v != neg_inf) acc += std::exp(v - top);
  return top + std::log(acc);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double max_abs_residual = 0.0;
};

// Ordinary least squares y ~ a + b x.  Needs at least two distinct x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace bmc::numeric

#endif  // BMCARPET_NUMERIC_HPP
