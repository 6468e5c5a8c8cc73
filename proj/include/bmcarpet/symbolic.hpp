#ifndef BMCARPET_SYMBOLIC_HPP
#define BMCARPET_SYMBOLIC_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/error.hpp"

namespace bmc {

// Symbolic coding of the carpet.  Infinite digit sequences are represented
// by finite prefixes; quantities defined as limits are evaluated at a
// finite level, and "not witnessed within the prefix" is an empty optional.
//
// Positions are 1-based in the formulas below (d_1 is the first digit) and
// 0-based in storage.

using DigitIndex = std::uint32_t;

/// l(k) = floor(sigma k), i.e. the largest l with n^l <= m^k.
inline int l_of_k(const CarpetSpec& spec, int k) {
  if (k < 0) throw error(errc::bad_argument, "level must be >= 0");
  int l = static_cast<int>(std::floor(spec.sigma() * k));
  // Guard the exact-integer cases (e.g. m = 2, n = 4) against rounding.
  const double slack = 1e-12 * std::max(1.0, k * spec.log_m());
  if ((l + 1) * spec.log_n() <= k * spec.log_m() + slack) ++l;
  if (l * spec.log_n() > k * spec.log_m() + slack) --l;
  return l;
}

class SymbolicPrefix {
 public:
  SymbolicPrefix(const CarpetSpec& spec, std::vector<DigitIndex> digits) : spec_(&spec), digits_(std::move(digits)) {
    for (DigitIndex d : digits_)
      if (d >= spec.size()) throw error(errc::bad_digit, "digit index " + std::to_string(d) + " not in the digit set");
  }

  static SymbolicPrefix from_digits(const CarpetSpec& spec, std::span<const Digit> digits) {
    std::vector<DigitIndex> idx;
    idx.reserve(digits.size());
    for (const Digit& d : digits) {
      const auto found = spec.find(d);
      if (!found)
        throw error(errc::bad_digit,
                    "(" + std::to_string(d.row) + "," + std::to_string(d.col) + ") is not in the digit set");
      idx.push_back(static_cast<DigitIndex>(*found));
    }
    return SymbolicPrefix(spec, std::move(idx));
  }

  const CarpetSpec& spec() const noexcept { return *spec_; }
  int size() const noexcept { return static_cast<int>(digits_.size()); }
  std::span<const DigitIndex> digits() const noexcept { return digits_; }
  /// Digit index at 1-based position u.
  DigitIndex at(int u) const { return digits_.at(static_cast<std::size_t>(u - 1)); }
  int row(int u) const { return spec_->row_of(at(u)); }
  int col(int u) const { return spec_->col_of(at(u)); }

 private:
  const CarpetSpec* spec_;
  std::vector<DigitIndex> digits_;
};

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  // Bound on the distance to the projection of any infinite extension.
  double x_radius = 0.0;
  double y_radius = 0.0;
};

inline ProjectedPoint project_prefix(const SymbolicPrefix& prefix) {
  const CarpetSpec& spec = prefix.spec();
  const double n = spec.n(), m = spec.m();
  ProjectedPoint p;
  for (int u = prefix.size(); u >= 1; --u) {
    p.x = (p.x + prefix.col(u)) / n;
    p.y = (p.y + prefix.row(u)) / m;
  }
  const int K = prefix.size();
  p.x_radius = spec.max_col() * std::pow(n, -K) / (n - 1.0);
  p.y_radius = spec.max_row() * std::pow(m, -K) / (m - 1.0);
  return p;
}

/// Canonical identity of an approximate square: full digits d_1..d_l and
/// the rows r_{l+1}..r_k.  Two sequences share a square iff these agree.
struct SquareIndex {
  std::vector<DigitIndex> head;
  std::vector<int> tail_rows;

  auto operator<=>(const SquareIndex&) const = default;
};

/// The approximate square R_k: width n^{-l(k)}, height m^{-k}.
struct ApproxSquare {
  const CarpetSpec* spec = nullptr;
  int level = 0;  // k
  int head_length = 0;  // l(k)
  SquareIndex index;
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 1.0;
  double height = 1.0;
  double log_measure = 0.0;
  double measure = 1.0;  // underflows for very deep squares; log_measure does not

  /// Row at 1-based position u <= level.
  int row_at(int u) const {
    return u <= head_length ? spec->row_of(index.head[static_cast<std::size_t>(u - 1)])
                            : index.tail_rows[static_cast<std::size_t>(u - head_length - 1)];
  }
  double diameter() const { return std::hypot(width, height); }
  double log_diameter() const {
    const double lw = -head_length * spec->log_n(), lh = -level * spec->log_m();
    const double top = std::max(lw, lh);
    return top + 0.5 * std::log1p(std::exp(2.0 * (std::min(lw, lh) - top)));
  }
  /// Coarse local exponent -log mu(R_k) / (k log m).
  double exponent() const { return -log_measure / (level * spec->log_m()); }
};

/// sqrt(n^2 + 1): every R_k has diameter at most D_1 m^{-k}.
inline double diameter_constant(const CarpetSpec& spec) {
  return std::sqrt(static_cast<double>(spec.n()) * spec.n() + 1.0);
}

namespace detail {

inline void fill_square(ApproxSquare& sq) {
  const CarpetSpec& spec = *sq.spec;
  const double n = spec.n(), m = spec.m();
  double x = 0.0, y = 0.0, mu = 1.0, log_mu = 0.0;
  for (int u = sq.level; u >= 1; --u) y = (y + sq.row_at(u)) / m;
  for (int u = sq.head_length; u >= 1; --u) x = (x + spec.col_of(sq.index.head[static_cast<std::size_t>(u - 1)])) / n;
  for (DigitIndex d : sq.index.head) {
    mu *= spec.probs()[d];
    log_mu += spec.log_probs()[d];
  }
  for (int r : sq.index.tail_rows) {
    mu *= spec.row_prob(r);
    log_mu += spec.log_row_prob(r);
  }
  sq.x0 = x;
  sq.y0 = y;
  sq.width = std::pow(n, -sq.head_length);
  sq.height = std::pow(m, -sq.level);
  sq.measure = mu;
  sq.log_measure = log_mu;
}

}  // namespace detail

/// Builds the square named by a canonical index; head length must be l(k)
/// for k = head + tail length, and every tail row must be nonempty.
inline ApproxSquare make_square(const CarpetSpec& spec, SquareIndex index) {
  ApproxSquare sq;
  sq.spec = &spec;
  sq.level = static_cast<int>(index.head.size() + index.tail_rows.size());
  sq.head_length = static_cast<int>(index.head.size());
  if (l_of_k(spec, sq.level) != sq.head_length)
    throw error(errc::bad_argument, "head length " + std::to_string(sq.head_length) + " != l(" +
                                        std::to_string(sq.level) + ")");
  for (DigitIndex d : index.head)
    if (d >= spec.size()) throw error(errc::bad_digit, "digit index out of range");
  for (int r : index.tail_rows)
    if (r < 0 || r >= spec.m() || spec.row_count(r) == 0)
      throw error(errc::bad_digit, "row " + std::to_string(r) + " is empty");
  sq.index = std::move(index);
  detail::fill_square(sq);
  return sq;
}

inline ApproxSquare approx_square(const SymbolicPrefix& prefix, int k) {
  if (k < 0) throw error(errc::bad_argument, "level must be >= 0");
  if (prefix.size() < k)
    throw error(errc::prefix_too_short, "prefix has " + std::to_string(prefix.size()) + " digits, level " +
                                            std::to_string(k) + " requested");
  const CarpetSpec& spec = prefix.spec();
  const int l = l_of_k(spec, k);
  SquareIndex idx;
  idx.head.assign(prefix.digits().begin(), prefix.digits().begin() + l);
  for (int u = l + 1; u <= k; ++u) idx.tail_rows.push_back(prefix.row(u));
  return make_square(spec, std::move(idx));
}

/// Closed form: prod_{u<=l} p_{d_u} * prod_{l<u<=k} q_{r_u}.
inline double measure_approx_square(const ApproxSquare& square) { return square.measure; }

/// |D|^l(k) * rho^(k - l(k)), as a double.
inline double square_count(const CarpetSpec& spec, int k) {
  const int l = l_of_k(spec, k);
  return std::pow(static_cast<double>(spec.size()), l) * std::pow(static_cast<double>(spec.nonempty_rows()), k - l);
}

/// Visits every distinct level-k square in lexicographic index order.  The
/// square passed to `visit` is reused between calls.
template <class Visit>
void for_each_square(const CarpetSpec& spec, int k, Visit&& visit) {
  const int l = l_of_k(spec, k);
  const auto rows = spec.rows();
  ApproxSquare sq;
  sq.spec = &spec;
  sq.level = k;
  sq.head_length = l;
  sq.index.head.assign(static_cast<std::size_t>(l), 0);
  std::vector<std::size_t> tail_pos(static_cast<std::size_t>(k - l), 0);
  sq.index.tail_rows.assign(tail_pos.size(), rows[0]);
  const auto digits = static_cast<DigitIndex>(spec.size());
  for (;;) {
    detail::fill_square(sq);
    visit(static_cast<const ApproxSquare&>(sq));
    // odometer: tail rows vary fastest
    int pos = k - 1;
    for (; pos >= 0; --pos) {
      if (pos >= l) {
        auto& tp = tail_pos[static_cast<std::size_t>(pos - l)];
        if (++tp < rows.size()) {
          sq.index.tail_rows[static_cast<std::size_t>(pos - l)] = rows[tp];
          break;
        }
        tp = 0;
        sq.index.tail_rows[static_cast<std::size_t>(pos - l)] = rows[0];
      } else {
        auto& d = sq.index.head[static_cast<std::size_t>(pos)];
        if (++d < digits) break;
        d = 0;
      }
    }
    if (pos < 0) return;
  }
}

inline constexpr double default_gamma_guard = 1e7;

/// Gamma_k: all length-k digit strings that agree with the square's head and
/// whose rows l+1..k follow its tail rows.  Lexicographic order.
inline std::vector<std::vector<DigitIndex>> enumerate_gamma(const ApproxSquare& square,
                                                            double guard = default_gamma_guard) {
  const CarpetSpec& spec = *square.spec;
  double count = 1.0;
  for (int r : square.index.tail_rows) count *= spec.row_count(r);
  if (count > guard)
    throw error(errc::too_large, "|Gamma_k| = " + std::to_string(count) + " exceeds guard " + std::to_string(guard));

  std::vector<std::vector<DigitIndex>> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<DigitIndex> current(square.index.head.begin(), square.index.head.end());
  const std::size_t tail = square.index.tail_rows.size();
  std::vector<std::size_t> choice(tail, 0);
  current.resize(square.index.head.size() + tail);
  for (;;) {
    for (std::size_t j = 0; j < tail; ++j)
      current[square.index.head.size() + j] =
          static_cast<DigitIndex>(spec.digits_in_row(square.index.tail_rows[j])[choice[j]]);
    out.push_back(current);
    std::size_t j = tail;
    while (j > 0) {
      --j;
      if (++choice[j] < spec.digits_in_row(square.index.tail_rows[j]).size()) break;
      choice[j] = 0;
      if (j == 0) return out;
    }
    if (tail == 0) return out;
  }
}

inline double symbolic_local_dim(const SymbolicPrefix& prefix, int k) {
  if (k < 1) throw error(errc::bad_argument, "level must be >= 1");
  if (prefix.size() < k) throw error(errc::prefix_too_short, "prefix shorter than level");
  const CarpetSpec& spec = prefix.spec();
  const int l = l_of_k(spec, k);
  double log_mu = 0.0;
  for (int u = 1; u <= l; ++u) log_mu += spec.log_probs()[prefix.at(u)];
  for (int u = l + 1; u <= k; ++u) log_mu += spec.log_row_prob(prefix.row(u));
  return -log_mu / (k * spec.log_m());
}

/// log omega_r = t log q_r - log gamma_r(t) per row (-inf for empty rows).
inline std::vector<double> log_omega(const CarpetSpec& spec, double t) {
  const auto lg = log_gamma(spec, t);
  std::vector<double> out(static_cast<std::size_t>(spec.m()), numeric::neg_inf);
  for (int r : spec.rows()) out[static_cast<std::size_t>(r)] = t * spec.log_row_prob(r) - lg[static_cast<std::size_t>(r)];
  return out;
}

struct BirkhoffAverages {
  int l = 0;
  double head_average = 0.0;  // B_l
  double full_average = 0.0;  // B_k
  double defect = 0.0;        // A_k = B_l - B_k
};

namespace detail {

template <class RowAt>
BirkhoffAverages birkhoff_from_rows(const CarpetSpec& spec, double t, int k, RowAt&& row_at) {
  const int l = l_of_k(spec, k);
  if (l < 1) throw error(errc::l_too_small, "l(" + std::to_string(k) + ") = 0; A_k needs k >= 1/sigma");
  const auto lw = log_omega(spec, t);
  double head = 0.0, total = 0.0;
  for (int u = 1; u <= k; ++u) {
    const double v = lw[static_cast<std::size_t>(row_at(u))];
    if (u <= l) head += v;
    total += v;
  }
  BirkhoffAverages b;
  b.l = l;
  b.head_average = head / l;
  b.full_average = total / k;
  b.defect = b.head_average - b.full_average;
  return b;
}

}  // namespace detail

inline BirkhoffAverages birkhoff(const SymbolicPrefix& prefix, double t, int k) {
  if (prefix.size() < k) throw error(errc::prefix_too_short, "prefix shorter than level");
  return detail::birkhoff_from_rows(prefix.spec(), t, k, [&](int u) { return prefix.row(u); });
}

inline BirkhoffAverages birkhoff(const ApproxSquare& square, double t) {
  return detail::birkhoff_from_rows(*square.spec, t, square.level, [&](int u) { return square.row_at(u); });
}

/// V_k: length of the run of boundary-row digits after position k that
/// continue row(d_k).  Zero when d_{k+1} leaves that row or is a middle row
/// (and for k = 0).  Empty when the run reaches the end of the prefix.
inline std::optional<int> v_k(const SymbolicPrefix& prefix, int k) {
  if (k < 0) throw error(errc::bad_argument, "level must be >= 0");
  if (k == 0) return prefix.size() >= 1 ? std::optional<int>(0) : std::nullopt;
  if (prefix.size() < k) throw error(errc::prefix_too_short, "prefix shorter than level");
  const CarpetSpec& spec = prefix.spec();
  const int ref = prefix.row(k);
  for (int l = k + 1; l <= prefix.size(); ++l) {
    const int r = prefix.row(l);
    if (!spec.is_boundary_row(r) || r != ref) return l - k - 1;
  }
  return std::nullopt;
}

/// Z_k = max(min{eta : row(d_{k+eta}) != row(d_{k+1})},
///           sigma^{-1} min{eta : col(d_{l+eta}) != col(d_l)}),  l = l(k).
inline std::optional<double> z_k(const SymbolicPrefix& prefix, int k) {
  const CarpetSpec& spec = prefix.spec();
  const int l = l_of_k(spec, k);
  if (l < 1) throw error(errc::l_too_small, "Z_k needs l(k) >= 1");
  if (prefix.size() < k + 1) return std::nullopt;
  std::optional<int> row_change, col_change;
  for (int eta = 1; k + eta <= prefix.size(); ++eta)
    if (prefix.row(k + eta) != prefix.row(k + 1)) {
      row_change = eta;
      break;
    }
  for (int eta = 1; l + eta <= prefix.size(); ++eta)
    if (prefix.col(l + eta) != prefix.col(l)) {
      col_change = eta;
      break;
    }
  if (!row_change || !col_change) return std::nullopt;
  return std::max(static_cast<double>(*row_change), *col_change / spec.sigma());
}

struct SquareClass {
  bool in_Y = false;
  bool in_G = false;
  double alpha_hat = 0.0;
  double defect = 0.0;  // A_k
};

/// Membership test for Y(alpha, eps, k) (closed measure window) and G (Y
/// plus A_k >= -log(1 + eps)).  Caches log omega for bulk use.
class SquareClassifier {
 public:
  SquareClassifier(const CarpetSpec& spec, double alpha, double eps, double t)
      : spec_(&spec), alpha_(alpha), eps_(eps), log_omega_(log_omega(spec, t)) {
    if (!(eps > 0.0)) throw error(errc::bad_argument, "eps must be positive");
  }

  bool in_Y(const ApproxSquare& square) const {
    const double scale = square.level * spec_->log_m();
    const double a = -scale * alpha_ * (1.0 + eps_), b = -scale * alpha_ * (1.0 - eps_);
    const double tol = 1e-12 * std::max(1.0, std::abs(square.log_measure));
    return square.log_measure >= std::min(a, b) - tol && square.log_measure <= std::max(a, b) + tol;
  }

  double defect(const ApproxSquare& square) const {
    const int l = square.head_length, k = square.level;
    if (l < 1) throw error(errc::l_too_small, "A_k needs l(k) >= 1");
    double head = 0.0, total = 0.0;
    for (int u = 1; u <= k; ++u) {
      const double v = log_omega_[static_cast<std::size_t>(square.row_at(u))];
      if (u <= l) head += v;
      total += v;
    }
    return head / l - total / k;
  }

  SquareClass classify(const ApproxSquare& square) const {
    SquareClass c;
    c.alpha_hat = square.exponent();
    c.defect = defect(square);
    c.in_Y = in_Y(square);
    c.in_G = c.in_Y && c.defect >= -std::log1p(eps_);
    return c;
  }

 private:
  const CarpetSpec* spec_;
  double alpha_;
  double eps_;
  std::vector<double> log_omega_;
};

inline SquareClass classify_square(const ApproxSquare& square, double alpha, double eps, double t) {
  return SquareClassifier(*square.spec, alpha, eps, t).classify(square);
}

/// sum over Gamma_k of (p_{j_1}..p_{j_k})^t (omega_{j_1}..omega_{j_k})^{1-sigma},
/// by enumeration, in log form.
inline double log_cylinder_sum(const ApproxSquare& square, double t, double guard = default_gamma_guard) {
  const CarpetSpec& spec = *square.spec;
  const auto lw = log_omega(spec, t);
  std::vector<double> terms;
  for (const auto& word : enumerate_gamma(square, guard)) {
    double v = 0.0;
    for (DigitIndex d : word)
      v += t * spec.log_probs()[d] + (1.0 - spec.sigma()) * lw[static_cast<std::size_t>(spec.row_of(d))];
    terms.push_back(v);
  }
  return numeric::log_sum_exp(terms);
}

/// Levels k <= horizon with A_k > -eps and V_k = 0 (k with l(k) >= 1 and
/// d_{k+1} inside the prefix).
inline std::vector<int> find_good_levels(const SymbolicPrefix& prefix, double t, double eps, int horizon) {
  if (!(eps > 0.0)) throw error(errc::bad_argument, "eps must be positive");
  const CarpetSpec& spec = prefix.spec();
  const int K = std::min(horizon, prefix.size() - 1);
  const auto lw = log_omega(spec, t);
  std::vector<double> cumulative(static_cast<std::size_t>(std::max(K, 0)) + 1, 0.0);
  for (int u = 1; u <= K; ++u)
    cumulative[static_cast<std::size_t>(u)] = cumulative[static_cast<std::size_t>(u - 1)] + lw[static_cast<std::size_t>(prefix.row(u))];

  std::vector<int> good;
  for (int k = 1; k <= K; ++k) {
    const int l = l_of_k(spec, k);
    if (l < 1) continue;
    const int next = prefix.row(k + 1);
    const bool v_zero = !spec.is_boundary_row(next) || next != prefix.row(k);
    if (!v_zero) continue;
    const double a = cumulative[static_cast<std::size_t>(l)] / l - cumulative[static_cast<std::size_t>(k)] / k;
    if (a > -eps) good.push_back(k);
  }
  return good;
}

}  // namespace bmc

#endif  // BMCARPET_SYMBOLIC_HPP
