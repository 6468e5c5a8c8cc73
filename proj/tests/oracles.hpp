#ifndef BMCARPET_TESTS_ORACLES_HPP
#define BMCARPET_TESTS_ORACLES_HPP

// Reference computations written straight from the definitions, sharing no
// code with the library beyond the RawSpec struct.  Slow on purpose.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "bmcarpet/carpet.hpp"

namespace oracle {

using bmc::RawSpec;

inline RawSpec carpet_2x3() { return {2, 3, {{0, 0}, {0, 2}, {1, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}; }

inline double sigma(const RawSpec& s) { return std::log(static_cast<double>(s.m)) / std::log(static_cast<double>(s.n)); }

inline std::vector<long double> row_mass(const RawSpec& s) {
  std::vector<long double> q(static_cast<std::size_t>(s.m), 0.0L);
  for (std::size_t i = 0; i < s.digits.size(); ++i) q[static_cast<std::size_t>(s.digits[i].row)] += s.probs[i];
  return q;
}

/// beta(t) in long double from the digit-level sum
/// sum_d p_d^t q^{(1-sigma)t} gamma^{sigma-1}.
inline long double beta(const RawSpec& s, long double t) {
  const long double sg = sigma(s);
  const auto q = row_mass(s);
  std::vector<long double> g(static_cast<std::size_t>(s.m), 0.0L);
  for (std::size_t i = 0; i < s.digits.size(); ++i)
    g[static_cast<std::size_t>(s.digits[i].row)] += std::pow(static_cast<long double>(s.probs[i]), t);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < s.digits.size(); ++i) {
    const auto r = static_cast<std::size_t>(s.digits[i].row);
    sum += std::pow(static_cast<long double>(s.probs[i]), t) * std::pow(q[r], (1.0L - sg) * t) *
           std::pow(g[r], sg - 1.0L);
  }
  return std::log(sum) / std::log(static_cast<long double>(s.m));
}

/// -beta'(t) by a 4-point central difference in long double.
inline long double alpha(const RawSpec& s, long double t) {
  const long double h = 1e-4L;
  return -(-beta(s, t + 2 * h) + 8 * beta(s, t + h) - 8 * beta(s, t - h) + beta(s, t - 2 * h)) / (12 * h);
}

/// log_m sum_r N_r^sigma.
inline double hausdorff_dimension(const RawSpec& s) {
  std::map<int, int> counts;
  for (const auto& d : s.digits) ++counts[d.row];
  double sum = 0.0;
  for (const auto& [r, c] : counts) sum += std::pow(static_cast<double>(c), sigma(s));
  return std::log(sum) / std::log(static_cast<double>(s.m));
}

/// floor(sigma k) through integer powers: the largest l with n^l <= m^k.
inline int l_of_k(const RawSpec& s, int k) {
  long double mk = std::pow(static_cast<long double>(s.m), k);
  int l = 0;
  long double nl = s.n;
  while (nl <= mk * (1.0L + 1e-15L)) {
    ++l;
    nl *= s.n;
  }
  return l;
}

/// Approximate squares at level k by brute force over all |D|^k words:
/// key = (head digits, tail rows), value = summed cylinder mass.
inline std::map<std::pair<std::vector<int>, std::vector<int>>, long double> squares_by_words(const RawSpec& s, int k) {
  const int l = l_of_k(s, k);
  std::map<std::pair<std::vector<int>, std::vector<int>>, long double> out;
  std::vector<int> word(static_cast<std::size_t>(k), 0);
  const int D = static_cast<int>(s.digits.size());
  for (;;) {
    long double mass = 1.0L;
    std::vector<int> head, tail;
    for (int u = 0; u < k; ++u) {
      mass *= s.probs[static_cast<std::size_t>(word[static_cast<std::size_t>(u)])];
      if (u < l)
        head.push_back(word[static_cast<std::size_t>(u)]);
      else
        tail.push_back(s.digits[static_cast<std::size_t>(word[static_cast<std::size_t>(u)])].row);
    }
    out[{head, tail}] += mass;
    int pos = k - 1;
    while (pos >= 0 && ++word[static_cast<std::size_t>(pos)] == D) word[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return out;
}

/// Brackets mu(closed ball) using all level-K cylinders (rectangles of
/// width n^-K, height m^-K): {fully inside, meeting the ball}.
inline std::pair<double, double> ball_bracket(const RawSpec& s, double cx, double cy, double r, int K) {
  double lo = 0.0, hi = 0.0;
  const double w = std::pow(static_cast<double>(s.n), -K), h = std::pow(static_cast<double>(s.m), -K);
  std::function<void(int, double, double, double)> rec = [&](int depth, double x, double y, double mass) {
    if (depth == K) {
      const double dx = std::max({x - cx, 0.0, cx - (x + w)});
      const double dy = std::max({y - cy, 0.0, cy - (y + h)});
      if (dx * dx + dy * dy > r * r) return;
      hi += mass;
      const double fx = std::max(std::abs(cx - x), std::abs(cx - x - w));
      const double fy = std::max(std::abs(cy - y), std::abs(cy - y - h));
      if (fx * fx + fy * fy <= r * r) lo += mass;
      return;
    }
    const double sx = std::pow(static_cast<double>(s.n), -depth - 1), sy = std::pow(static_cast<double>(s.m), -depth - 1);
    for (std::size_t i = 0; i < s.digits.size(); ++i)
      rec(depth + 1, x + s.digits[i].col * sx, y + s.digits[i].row * sy, mass * s.probs[i]);
  };
  rec(0, 0.0, 0.0, 1.0);
  return {lo, hi};
}

/// Random valid spec: 2 <= m < n <= 6, digits in >= 2 rows and >= 2 columns,
/// probabilities normalized to sum to 1.
inline RawSpec random_spec(std::mt19937_64& rng) {
  for (;;) {
    RawSpec s;
    s.m = std::uniform_int_distribution<int>(2, 5)(rng);
    s.n = std::uniform_int_distribution<int>(s.m + 1, 6)(rng);
    std::bernoulli_distribution take(0.45);
    std::set<int> rows, cols;
    for (int r = 0; r < s.m; ++r)
      for (int c = 0; c < s.n; ++c)
        if (take(rng)) {
          s.digits.push_back({r, c});
          rows.insert(r);
          cols.insert(c);
        }
    if (rows.size() < 2 || cols.size() < 2) continue;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < s.digits.size(); ++i) total += s.probs.emplace_back(u(rng));
    for (double& p : s.probs) p /= total;
    return s;
  }
}

}  // namespace oracle

#endif  // BMCARPET_TESTS_ORACLES_HPP
