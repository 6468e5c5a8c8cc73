#ifndef BMCARPET_SPECTRUM_HPP
#define BMCARPET_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/error.hpp"
#include "bmcarpet/numeric.hpp"
#include "bmcarpet/parallel.hpp"

namespace bmc {

// Multifractal spectrum of the Bernoulli measure.
//
// The pressure-like function is beta(t) = log_m S(t) with
//
//   S(t) = sum_d p_d^t q_row^{(1-sigma)t} gamma_row(t)^{sigma-1}
//        = sum_r gamma_r(t)^sigma q_r^{(1-sigma)t},
//
// which is convex and decreasing with beta(1) = 0 and beta(0) the Hausdorff
// dimension of the carpet.  f(alpha) = inf_t (alpha t + beta(t)) is its
// Legendre transform, realized at the t with alpha(t) = -beta'(t) = alpha.

/// Tilted Bernoulli weights for parameter t, with beta(t) and alpha(t).
struct TiltedMeasure {
  double t = 0.0;
  std::vector<double> weights;      // P_d, one per digit
  std::vector<double> row_weights;  // Q_r, one per row (0 for empty rows)
  double beta = 0.0;
  double alpha = 0.0;
};

namespace detail {

inline double log_pressure_sum(const CarpetSpec& spec, double t, const std::vector<double>& lg) {
  std::vector<double> terms;
  terms.reserve(spec.rows().size());
  const double s = spec.sigma();
  for (int r : spec.rows())
    terms.push_back(s * lg[static_cast<std::size_t>(r)] + (1.0 - s) * t * spec.log_row_prob(r));
  return numeric::log_sum_exp(terms);
}

}  // namespace detail

inline double beta(const CarpetSpec& spec, double t) {
  return detail::log_pressure_sum(spec, t, log_gamma(spec, t)) / spec.log_m();
}

inline TiltedMeasure tilted_measure(const CarpetSpec& spec, double t) {
  const auto lg = log_gamma(spec, t);
  const double log_s = detail::log_pressure_sum(spec, t, lg);
  const double s = spec.sigma();

  TiltedMeasure tm;
  tm.t = t;
  tm.beta = log_s / spec.log_m();
  tm.weights.resize(spec.size());
  tm.row_weights.assign(static_cast<std::size_t>(spec.m()), 0.0);
  for (std::size_t d = 0; d < spec.size(); ++d) {
    const int r = spec.row_of(d);
    const double log_w = t * spec.log_probs()[d] + (1.0 - s) * t * spec.log_row_prob(r) +
                         (s - 1.0) * lg[static_cast<std::size_t>(r)] - log_s;
    tm.weights[d] = std::exp(log_w);
    tm.row_weights[static_cast<std::size_t>(r)] += tm.weights[d];
  }

  double head = 0.0, tail = 0.0;
  for (std::size_t d = 0; d < spec.size(); ++d) head += tm.weights[d] * spec.log_probs()[d];
  for (int r : spec.rows()) tail += tm.row_weights[static_cast<std::size_t>(r)] * spec.log_row_prob(r);
  tm.alpha = (-s * head - (1.0 - s) * tail) / spec.log_m();
  return tm;
}

inline double alpha_of_t(const CarpetSpec& spec, double t) { return tilted_measure(spec, t).alpha; }

/// Dimension of the projected tilted measure, t alpha(t) + beta(t).
inline double measure_dimension(const CarpetSpec& spec, double t) {
  const auto tm = tilted_measure(spec, t);
  return t * tm.alpha + tm.beta;
}

inline double hausdorff_dimension(const CarpetSpec& spec) { return beta(spec, 0.0); }

inline constexpr double endpoint_limit_t = 200.0;

struct AlphaRange {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::vector<double> exponents;  // e_d per digit
  // Numerical limits t alpha(t) + beta(t) at t = +200 and t = -200.
  double f_at_min = 0.0;
  double f_at_max = 0.0;
  bool degenerate = false;
};

inline AlphaRange alpha_range(const CarpetSpec& spec) {
  AlphaRange ar;
  const double s = spec.sigma();
  ar.exponents.reserve(spec.size());
  for (std::size_t d = 0; d < spec.size(); ++d)
    ar.exponents.push_back((-s * spec.log_probs()[d] + (s - 1.0) * spec.log_row_prob(spec.row_of(d))) /
                           spec.log_m());
  const auto [lo, hi] = std::minmax_element(ar.exponents.begin(), ar.exponents.end());
  ar.alpha_min = *lo;
  ar.alpha_max = *hi;
  ar.degenerate = ar.alpha_max - ar.alpha_min <= 1e-12 * std::abs(ar.alpha_max);
  ar.f_at_min = measure_dimension(spec, endpoint_limit_t);
  ar.f_at_max = measure_dimension(spec, -endpoint_limit_t);
  return ar;
}

struct LegendrePoint {
  double f = 0.0;
  double t_star = 0.0;
};

inline constexpr double max_bracket_t = 1e4;

/// f(alpha) and the t* with alpha(t*) = alpha, by bisection on the
/// decreasing map t -> alpha(t).
inline LegendrePoint legendre_point(const CarpetSpec& spec, double alpha) {
  const AlphaRange ar = alpha_range(spec);
  if (ar.degenerate) throw error(errc::degenerate, "alpha_min == alpha_max, spectrum is a single point");
  if (!(alpha > ar.alpha_min && alpha < ar.alpha_max))
    throw error(errc::out_of_range, "alpha " + std::to_string(alpha) + " outside (" +
                                        std::to_string(ar.alpha_min) + ", " + std::to_string(ar.alpha_max) + ")");

  double lo = -1.0, hi = 1.0;
  while (alpha_of_t(spec, hi) > alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > max_bracket_t) throw error(errc::no_convergence, "bracket for alpha exceeded t = 1e4");
  }
  while (alpha_of_t(spec, lo) < alpha) {
    hi = lo;
    lo *= 2.0;
    if (lo < -max_bracket_t) throw error(errc::no_convergence, "bracket for alpha exceeded t = -1e4");
  }

  // alpha(lo) >= alpha >= alpha(hi)
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) break;
    const double a = alpha_of_t(spec, mid);
    if (a == alpha) {
      lo = hi = mid;
      break;
    }
    (a > alpha ? lo : hi) = mid;
  }
  LegendrePoint out;
  out.t_star = 0.5 * (lo + hi);
  const auto tm = tilted_measure(spec, out.t_star);
  if (std::abs(tm.alpha - alpha) > 1e-10)
    throw error(errc::no_convergence, "alpha(t*) misses the target by " + std::to_string(tm.alpha - alpha));
  out.f = alpha * out.t_star + tm.beta;
  return out;
}

struct SpectrumSample {
  double t = 0.0;
  double alpha = 0.0;
  double f = 0.0;
  double beta = 0.0;
};

struct SpectrumCurve {
  std::vector<SpectrumSample> samples;  // increasing t
  std::string spec_hash;
  std::string grid;
};

/// `count` equally spaced points on [lo, hi] (just lo when count == 1).
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

inline SpectrumCurve spectrum_curve(const CarpetSpec& spec, std::vector<double> t_grid, unsigned threads = 1) {
  if (t_grid.empty()) throw error(errc::empty_grid, "t grid is empty");
  std::sort(t_grid.begin(), t_grid.end());

  SpectrumCurve curve;
  curve.spec_hash = spec_hash(spec);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu points in [%.15g, %.15g]", t_grid.size(), t_grid.front(), t_grid.back());
  curve.grid = buf;
  curve.samples.resize(t_grid.size());
  parallel_for(t_grid.size(), threads, [&](std::size_t i) {
    const auto tm = tilted_measure(spec, t_grid[i]);
    curve.samples[i] = {t_grid[i], tm.alpha, t_grid[i] * tm.alpha + tm.beta, tm.beta};
  });
  return curve;
}

}  // namespace bmc

#endif  // BMCARPET_SPECTRUM_HPP
