#ifndef BMCARPET_EMPIRICAL_HPP
#define BMCARPET_EMPIRICAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/error.hpp"
#include "bmcarpet/numeric.hpp"
#include "bmcarpet/parallel.hpp"
#include "bmcarpet/random.hpp"
#include "bmcarpet/spectrum.hpp"
#include "bmcarpet/symbolic.hpp"

namespace bmc {

// ---------------------------------------------------------------------------
// Sampling

/// Digits i.i.d. from the tilted weights P(t).  A function of
/// (seed, sample_index) only.
inline SymbolicPrefix sample_prefix(const CarpetSpec& spec, double t, int length, std::uint64_t seed,
                                    std::uint64_t sample_index = 0) {
  if (length < 1) throw error(errc::bad_argument, "prefix length must be >= 1");
  const auto tm = tilted_measure(spec, t);
  std::vector<double> cdf(tm.weights.size());
  std::partial_sum(tm.weights.begin(), tm.weights.end(), cdf.begin());
  auto engine = stream_engine(seed, sample_index);
  std::vector<DigitIndex> digits(static_cast<std::size_t>(length));
  for (auto& d : digits) {
    const double u = uniform01(engine) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    d = static_cast<DigitIndex>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
  }
  return SymbolicPrefix(spec, std::move(digits));
}

// ---------------------------------------------------------------------------
// Ball measures

struct BallMeasure {
  double value = 0.0;  // midpoint of [lower, upper]
  double lower = 0.0;  // mass of squares proven inside the ball
  double upper = 0.0;  // lower plus mass of unresolved boundary squares
  int depth = 0;       // deepest level refined
};

struct BallOptions {
  double rel_tol = 1e-6;
  int extra_levels = 200;            // refinement depth past the ball scale
  std::size_t node_budget = 4000000;  // total squares created
};

/// mu(B(c, r)) for the closed Euclidean ball, by refining the approximate
/// square hierarchy: squares inside the ball contribute their exact mass,
/// squares meeting the boundary are subdivided level by level until the
/// unresolved mass is within rel_tol of the estimate.
inline BallMeasure ball_measure_bounded(const CarpetSpec& spec, double cx, double cy, double radius,
                                        const BallOptions& opt = {}) {
  if (!(cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0))
    throw error(errc::bad_point, "point outside the unit square");
  if (!(radius > 0.0)) throw error(errc::bad_argument, "radius must be positive");

  struct Node {
    double x0, y0, mass;
    std::uint32_t parent;
    std::int32_t level, head, row;
  };

  const double m = spec.m(), n = spec.n();
  const int ball_level = static_cast<int>(std::ceil(-std::log(radius) / spec.log_m()));
  const int max_level = std::max(ball_level, 0) + opt.extra_levels;
  std::vector<double> mpow(static_cast<std::size_t>(max_level) + 2), npow(static_cast<std::size_t>(max_level) + 2);
  std::vector<int> lk(static_cast<std::size_t>(max_level) + 2);
  for (std::size_t i = 0; i < mpow.size(); ++i) {
    mpow[i] = std::pow(m, -static_cast<double>(i));
    npow[i] = std::pow(n, -static_cast<double>(i));
    lk[i] = l_of_k(spec, static_cast<int>(i));
  }
  const double r2 = radius * radius;

  // 0 = disjoint, 1 = boundary, 2 = inside
  auto classify = [&](double x0, double y0, int level, int head) {
    const double w = npow[static_cast<std::size_t>(head)], h = mpow[static_cast<std::size_t>(level)];
    const double dx = std::max({x0 - cx, 0.0, cx - (x0 + w)});
    const double dy = std::max({y0 - cy, 0.0, cy - (y0 + h)});
    if (dx * dx + dy * dy > r2) return 0;
    const double fx = std::max(std::abs(cx - x0), std::abs(cx - x0 - w));
    const double fy = std::max(std::abs(cy - y0), std::abs(cy - y0 - h));
    return fx * fx + fy * fy <= r2 ? 2 : 1;
  };

  BallMeasure out;
  if (classify(0.0, 0.0, 0, 0) == 2) {
    out.value = out.lower = out.upper = 1.0;
    return out;
  }

  std::vector<Node> arena;
  arena.push_back({0.0, 0.0, 1.0, 0, 0, 0, -1});
  std::vector<std::uint32_t> frontier{0}, next;
  double inside = 0.0;

  auto row_at = [&](std::uint32_t id, int position) {
    while (arena[id].level > position) id = arena[id].parent;
    return arena[id].row;
  };

  for (int level = 0;; ++level) {
    double pending = 0.0;
    for (std::uint32_t id : frontier) pending += arena[id].mass;
    out.depth = level;
    if (frontier.empty() || pending <= 2.0 * opt.rel_tol * (inside + 0.5 * pending) || level >= max_level ||
        arena.size() >= opt.node_budget) {
      out.lower = inside;
      out.upper = inside + pending;
      out.value = inside + 0.5 * pending;
      return out;
    }

    next.clear();
    const int child_level = level + 1;
    const int child_head = lk[static_cast<std::size_t>(child_level)];
    const double child_h = mpow[static_cast<std::size_t>(child_level)];
    auto emit = [&](std::uint32_t parent, double x0, double y0, double mass) {
      for (int r : spec.rows()) {
        const double y = y0 + r * child_h;
        const double mu = mass * spec.row_prob(r);
        const int c = classify(x0, y, child_level, child_head);
        if (c == 2) {
          inside += mu;
        } else if (c == 1) {
          next.push_back(static_cast<std::uint32_t>(arena.size()));
          arena.push_back({x0, y, mu, parent, child_level, child_head, r});
        }
      }
    };
    for (std::uint32_t id : frontier) {
      const Node node = arena[id];
      if (child_head == node.head) {
        emit(id, node.x0, node.y0, node.mass);
      } else {
        // position head+1 turns from a row into a full digit
        const int r_head = row_at(id, node.head + 1);
        const double scale = node.mass / spec.row_prob(r_head);
        for (std::size_t d : spec.digits_in_row(r_head))
          emit(id, node.x0 + spec.col_of(d) * npow[static_cast<std::size_t>(child_head)], node.y0,
               scale * spec.probs()[d]);
      }
    }
    frontier.swap(next);
  }
}

/// mu(B(x, m^{-k})).
inline double ball_measure(const CarpetSpec& spec, double x, double y, int k, const BallOptions& opt = {}) {
  return ball_measure_bounded(spec, x, y, std::pow(static_cast<double>(spec.m()), -k), opt).value;
}

struct LocalDimFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double max_abs_residual = 0.0;
  int k0 = 0;
  int k1 = 0;
  std::vector<double> log_measures;  // log mu(B(x, m^{-k})), k = k0..k1
};

/// Least-squares slope of log mu(B(x, m^{-k})) against log m^{-k}.
inline LocalDimFit local_dim_estimate(const CarpetSpec& spec, double x, double y, int k0, int k1,
                                      const BallOptions& opt = {}) {
  if (k0 < 5 || k1 <= k0) throw error(errc::bad_argument, "need 5 <= k0 < k1");
  LocalDimFit fit;
  fit.k0 = k0;
  fit.k1 = k1;
  std::vector<double> xs;
  for (int k = k0; k <= k1; ++k) {
    const auto b = ball_measure_bounded(spec, x, y, std::pow(static_cast<double>(spec.m()), -k), opt);
    if (!(b.value > 0.0))
      throw error(errc::zero_measure, "ball of radius m^-" + std::to_string(k) + " has measure 0");
    fit.log_measures.push_back(std::log(b.value));
    xs.push_back(-k * spec.log_m());
  }
  const auto ls = numeric::least_squares(xs, fit.log_measures);
  fit.slope = ls.slope;
  fit.intercept = ls.intercept;
  fit.residual_rms = ls.residual_rms;
  fit.max_abs_residual = ls.max_abs_residual;
  return fit;
}

// ---------------------------------------------------------------------------
// Coarse spectrum

struct CoarseOptions {
  double exact_guard = 1e8;
  bool allow_sampling = false;
  std::size_t samples_per_alpha = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CoarseSpectrum {
  int k = 0;
  double eps = 0.0;
  std::vector<double> alpha_grid;
  std::vector<double> counts;                // squares in Y(alpha, eps, k); estimated when !exact
  std::vector<std::optional<double>> f_hat;  // log(count) / (k log m), absent for empty bins
  double total_squares = 0.0;
  bool exact = true;
};

namespace detail {

// exponent bucket width for grouping equal-measure squares
inline constexpr double exponent_quantum = 1e-12;

inline bool exponent_in_window(double e, double alpha, double eps) {
  const double lo = alpha * (1.0 - eps), hi = alpha * (1.0 + eps);
  const double tol = 1e-12 * std::max(1.0, std::abs(e));
  return e >= std::min(lo, hi) - tol && e <= std::max(lo, hi) + tol;
}

}  // namespace detail

/// f_hat(alpha) = log #Y(alpha, eps, k) / (k log m) over a grid of alpha.
/// Exact mode enumerates every canonical square; past the guard, and only
/// when allowed, counts are estimated by importance sampling from a mixture
/// of tilted proposals spanning each alpha window.
inline CoarseSpectrum coarse_spectrum(const CarpetSpec& spec, int k, double eps, std::vector<double> alpha_grid,
                                      const CoarseOptions& opt = {}) {
  if (k < 1) throw error(errc::bad_argument, "level must be >= 1");
  if (!(eps > 0.0)) throw error(errc::bad_argument, "eps must be positive");
  CoarseSpectrum cs;
  cs.k = k;
  cs.eps = eps;
  cs.alpha_grid = std::move(alpha_grid);
  cs.total_squares = square_count(spec, k);
  cs.counts.assign(cs.alpha_grid.size(), 0.0);
  cs.f_hat.assign(cs.alpha_grid.size(), std::nullopt);
  const double scale = k * spec.log_m();

  if (cs.total_squares <= opt.exact_guard) {
    std::map<std::int64_t, std::uint64_t> histogram;
    for_each_square(spec, k, [&](const ApproxSquare& sq) {
      ++histogram[std::llround(sq.exponent() / detail::exponent_quantum)];
    });
    for (std::size_t i = 0; i < cs.alpha_grid.size(); ++i) {
      std::uint64_t c = 0;
      for (const auto& [key, count] : histogram)
        if (detail::exponent_in_window(static_cast<double>(key) * detail::exponent_quantum, cs.alpha_grid[i], eps))
          c += count;
      cs.counts[i] = static_cast<double>(c);
      if (c > 0) cs.f_hat[i] = std::log(static_cast<double>(c)) / scale;
    }
    return cs;
  }

  if (!opt.allow_sampling)
    throw error(errc::too_large, std::to_string(cs.total_squares) + " squares exceed the exact-mode guard");

  cs.exact = false;
  const AlphaRange ar = alpha_range(spec);
  const int l = l_of_k(spec, k);
  const std::vector<int> row_ids(spec.rows().begin(), spec.rows().end());

  // One product proposal: head digits ~ P(t*), tail rows ~ Q(t*) at the t*
  // realizing a target exponent; uniform when the target is off the open range.
  struct Proposal {
    std::vector<double> head_cdf, row_cdf, log_head, log_row;
  };
  auto make_proposal = [&](double target) {
    std::vector<double> head_w(spec.size(), 1.0 / static_cast<double>(spec.size()));
    std::vector<double> row_w(static_cast<std::size_t>(spec.m()), 1.0 / spec.nonempty_rows());
    if (!ar.degenerate && target > ar.alpha_min && target < ar.alpha_max) {
      try {
        const auto tm = tilted_measure(spec, legendre_point(spec, target).t_star);
        head_w = tm.weights;
        row_w = tm.row_weights;
      } catch (const error&) {
        // keep the uniform proposal
      }
    }
    Proposal p;
    p.head_cdf.resize(head_w.size());
    std::partial_sum(head_w.begin(), head_w.end(), p.head_cdf.begin());
    for (double w : head_w) p.log_head.push_back(std::log(w));
    p.log_row.assign(static_cast<std::size_t>(spec.m()), numeric::neg_inf);
    for (int r : row_ids) {
      p.row_cdf.push_back((p.row_cdf.empty() ? 0.0 : p.row_cdf.back()) + row_w[static_cast<std::size_t>(r)]);
      p.log_row[static_cast<std::size_t>(r)] = std::log(row_w[static_cast<std::size_t>(r)]);
    }
    return p;
  };

  parallel_for(cs.alpha_grid.size(), opt.threads, [&](std::size_t i) {
    const double alpha = cs.alpha_grid[i];
    // Defensive mixture centred on both window edges and the middle, so
    // squares anywhere in the window have bounded importance weights.
    const std::vector<Proposal> mix{make_proposal(alpha * (1.0 - eps)), make_proposal(alpha),
                                    make_proposal(alpha * (1.0 + eps))};
    const double log_mix = std::log(static_cast<double>(mix.size()));
    auto engine = stream_engine(opt.seed, i);
    std::vector<DigitIndex> head(static_cast<std::size_t>(l));
    std::vector<int> tail(static_cast<std::size_t>(k - l));
    std::vector<double> log_terms, log_q(mix.size());
    auto draw = [&](const std::vector<double>& cdf) {
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), uniform01(engine) * cdf.back());
      return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    };
    for (std::size_t s = 0; s < opt.samples_per_alpha; ++s) {
      const Proposal& src = mix[std::min<std::size_t>(static_cast<std::size_t>(uniform01(engine) * mix.size()), mix.size() - 1)];
      double log_mu = 0.0;
      for (auto& d : head) {
        d = static_cast<DigitIndex>(draw(src.head_cdf));
        log_mu += spec.log_probs()[d];
      }
      for (auto& r : tail) {
        r = row_ids[draw(src.row_cdf)];
        log_mu += spec.log_row_prob(r);
      }
      if (!detail::exponent_in_window(-log_mu / scale, alpha, eps)) continue;
      for (std::size_t j = 0; j < mix.size(); ++j) {
        double v = 0.0;
        for (DigitIndex d : head) v += mix[j].log_head[d];
        for (int r : tail) v += mix[j].log_row[static_cast<std::size_t>(r)];
        log_q[j] = v;
      }
      log_terms.push_back(log_mix - numeric::log_sum_exp(log_q));
    }
    if (!log_terms.empty()) {
      const double log_count = numeric::log_sum_exp(log_terms) - std::log(static_cast<double>(opt.samples_per_alpha));
      cs.counts[i] = std::exp(log_count);
      cs.f_hat[i] = log_count / scale;
    }
  });
  return cs;
}

// ---------------------------------------------------------------------------
// Covering sums

struct CoveringLevel {
  int k = 0;
  int l = 0;
  std::uint64_t count_Y = 0;
  std::uint64_t count_G = 0;
  double sum = 0.0;                 // S_k
  double bound = 0.0;               // C (m^{-2 eps} (1 + eps))^k
  std::optional<double> ratio;      // S_{k+1} / S_k, absent when S_k = 0 or at the last level
};

struct CoveringReport {
  double t = 0.0, alpha = 0.0, eps = 0.0, delta = 0.0, beta = 0.0;
  double exponent = 0.0;        // alpha t + beta(t) + delta
  double bound_constant = 0.0;  // C
  double bound_ratio = 0.0;     // m^{-2 eps} (1 + eps)
  int k0 = 0;                   // first level where the cylinder-sum bound is guaranteed
  std::vector<CoveringLevel> levels;
};

/// Smallest k with l(k) >= 1 and (1 + eps)^{k - l(k)} >= exp(max(C2 - C1, C2, 0)),
/// C1, C2 the extreme values of log omega over nonempty rows.
inline int cylinder_bound_level(const CarpetSpec& spec, double t, double eps) {
  const auto lw = log_omega(spec, t);
  double c1 = std::numeric_limits<double>::infinity(), c2 = -c1;
  for (int r : spec.rows()) {
    c1 = std::min(c1, lw[static_cast<std::size_t>(r)]);
    c2 = std::max(c2, lw[static_cast<std::size_t>(r)]);
  }
  const double need = std::max({c2 - c1, c2, 0.0});
  for (int k = 1;; ++k) {
    const int l = l_of_k(spec, k);
    if (l >= 1 && (k - l) * std::log1p(eps) >= need) return k;
  }
}

/// S_k = sum over R in G(alpha, eps, k) of (2 D_1 |R|)^{alpha t + beta(t) + delta}
/// for k in [k_lo, k_hi], by exact enumeration.
inline CoveringReport covering_sum_demo(const CarpetSpec& spec, double t, double alpha, double eps, double delta,
                                        int k_lo, int k_hi, double guard = 1e8) {
  if (!(eps > 0.0)) throw error(errc::bad_argument, "eps must be positive");
  if (!(delta > eps * (alpha * std::abs(t) + 2.0)))
    throw error(errc::bad_delta, "need delta > eps (alpha |t| + 2) = " + std::to_string(eps * (alpha * std::abs(t) + 2.0)));
  if (k_lo < 1 || k_hi < k_lo) throw error(errc::bad_argument, "need 1 <= k_lo <= k_hi");
  if (square_count(spec, k_hi) > guard)
    throw error(errc::too_large, "level " + std::to_string(k_hi) + " has more squares than the guard");

  CoveringReport rep;
  rep.t = t;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.delta = delta;
  rep.beta = beta(spec, t);
  rep.exponent = alpha * t + rep.beta + delta;
  const double d1 = diameter_constant(spec);
  rep.bound_constant = std::pow(2.0 * d1, rep.exponent) *
                       std::pow(d1, std::max(alpha * t, 0.0) + std::max(rep.beta, 0.0) + delta);
  rep.bound_ratio = std::pow(static_cast<double>(spec.m()), -2.0 * eps) * (1.0 + eps);
  rep.k0 = cylinder_bound_level(spec, t, eps);

  const SquareClassifier classifier(spec, alpha, eps, t);
  const double log_2d1 = std::log(2.0 * d1);
  for (int k = k_lo; k <= k_hi; ++k) {
    CoveringLevel lv;
    lv.k = k;
    lv.l = l_of_k(spec, k);
    if (lv.l >= 1) {
      for_each_square(spec, k, [&](const ApproxSquare& sq) {
        if (!classifier.in_Y(sq)) return;
        ++lv.count_Y;
        if (classifier.defect(sq) < -std::log1p(eps)) return;
        ++lv.count_G;
        lv.sum += std::exp(rep.exponent * (log_2d1 + sq.log_diameter()));
      });
    }
    lv.bound = rep.bound_constant * std::pow(rep.bound_ratio, k);
    rep.levels.push_back(lv);
  }
  for (std::size_t i = 0; i + 1 < rep.levels.size(); ++i)
    if (rep.levels[i].sum > 0.0) rep.levels[i].ratio = rep.levels[i + 1].sum / rep.levels[i].sum;
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence of local dimension estimates

struct VerifyOptions {
  int ball_samples = 0;  // how many of the samples also get a ball-based estimate
  int ball_k0 = 5;
  int ball_k1 = 30;
  double tolerance = 0.05;  // for the "within tolerance" fractions
  BallOptions ball{};
  unsigned threads = 1;
};

struct SampleEstimate {
  std::uint64_t index = 0;
  double x = 0.0, y = 0.0;
  double symbolic = 0.0;
  std::optional<double> ball;
  std::optional<double> ball_residual;
};

struct EstimateStats {
  std::size_t count = 0;
  double mean = 0.0;
  double deviation = 0.0;  // sample standard deviation
  double mean_abs_error = 0.0;
  double fraction_within = 0.0;
};

struct EmpiricalReport {
  double t = 0.0;
  int k = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  double target_alpha = 0.0;
  VerifyOptions options;
  std::vector<SampleEstimate> per_sample;
  EstimateStats symbolic;
  EstimateStats ball;
};

inline EstimateStats summarize(const std::vector<double>& values, double target, double tolerance) {
  EstimateStats s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) {
    s.mean += v;
    s.mean_abs_error += std::abs(v - target);
    if (std::abs(v - target) <= tolerance) s.fraction_within += 1.0;
  }
  const double n = static_cast<double>(values.size());
  s.mean /= n;
  s.mean_abs_error /= n;
  s.fraction_within /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.deviation = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

inline void recompute_aggregates(EmpiricalReport& rep) {
  std::vector<double> sym, ball;
  for (const auto& s : rep.per_sample) {
    sym.push_back(s.symbolic);
    if (s.ball) ball.push_back(*s.ball);
  }
  rep.symbolic = summarize(sym, rep.target_alpha, rep.options.tolerance);
  rep.ball = summarize(ball, rep.target_alpha, rep.options.tolerance);
}

/// Samples mu_t-typical prefixes and compares the symbolic local dimension at
/// level k (and optionally the ball-based estimate at the projected point)
/// with alpha(t).
inline EmpiricalReport verify_convergence(const CarpetSpec& spec, double t, int samples, int k, std::uint64_t seed,
                                          const VerifyOptions& opt = {}) {
  if (samples < 1) throw error(errc::bad_argument, "samples must be >= 1");
  if (k < 1) throw error(errc::bad_argument, "level must be >= 1");
  EmpiricalReport rep;
  rep.t = t;
  rep.k = k;
  rep.samples = samples;
  rep.seed = seed;
  rep.options = opt;
  rep.target_alpha = alpha_of_t(spec, t);
  rep.per_sample.resize(static_cast<std::size_t>(samples));
  // 64 digits pin the projected point to double precision
  const int length = std::max(k, std::max(64, opt.ball_k1 + 40));
  parallel_for(static_cast<std::size_t>(samples), opt.threads, [&](std::size_t i) {
    const auto prefix = sample_prefix(spec, t, length, seed, i);
    SampleEstimate& est = rep.per_sample[i];
    est.index = i;
    const auto pt = project_prefix(prefix);
    est.x = std::clamp(pt.x, 0.0, 1.0);
    est.y = std::clamp(pt.y, 0.0, 1.0);
    est.symbolic = symbolic_local_dim(prefix, k);
    if (static_cast<int>(i) < opt.ball_samples) {
      const auto fit = local_dim_estimate(spec, est.x, est.y, opt.ball_k0, opt.ball_k1, opt.ball);
      est.ball = fit.slope;
      est.ball_residual = fit.residual_rms;
    }
  });
  recompute_aggregates(rep);
  return rep;
}

}  // namespace bmc

#endif  // BMCARPET_EMPIRICAL_HPP
