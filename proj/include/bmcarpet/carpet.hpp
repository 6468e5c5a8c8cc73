#ifndef BMCARPET_CARPET_HPP
#define BMCARPET_CARPET_HPP

#include <cfloat>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bmcarpet/error.hpp"
#include "bmcarpet/numeric.hpp"

namespace bmc {

// A cell of the m x n grid.  Rows are the vertical base-m digits (weak
// contraction), columns the horizontal base-n digits (strong contraction).
struct Digit {
  int row = 0;
  int col = 0;

  auto operator<=>(const Digit&) const = default;
};

// Unvalidated carpet description, as read from a spec file.
struct RawSpec {
  int m = 0;
  int n = 0;
  std::vector<Digit> digits;
  std::vector<double> probs;
};

inline constexpr double prob_sum_tolerance = 1e-12;

class CarpetSpec;
CarpetSpec build_spec(RawSpec raw);

/// Validated Bedford-McMullen carpet with a Bernoulli weight on each digit.
///
/// The attractor is generated by T_d(x, y) = ((x + col) / n, (y + row) / m)
/// for d in the digit set.  Immutable once built; every derived per-row
/// statistic is computed at construction.
class CarpetSpec {
 public:
  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  double sigma() const noexcept { return sigma_; }
  double log_m() const noexcept { return log_m_; }
  double log_n() const noexcept { return log_n_; }

  std::size_t size() const noexcept { return digits_.size(); }
  std::span<const Digit> digits() const noexcept { return digits_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::span<const double> log_probs() const noexcept { return log_probs_; }

  const Digit& digit(std::size_t d) const { return digits_.at(d); }
  int row_of(std::size_t d) const { return digits_[d].row; }
  int col_of(std::size_t d) const { return digits_[d].col; }

  /// q_r: total weight of row r (0 for an empty row).
  double row_prob(int r) const { return row_probs_.at(static_cast<std::size_t>(r)); }
  double log_row_prob(int r) const { return log_row_probs_.at(static_cast<std::size_t>(r)); }
  std::span<const double> row_probs() const noexcept { return row_probs_; }
  /// N_r: number of digits in row r.
  int row_count(int r) const { return static_cast<int>(row_members_.at(static_cast<std::size_t>(r)).size()); }
  std::span<const std::size_t> digits_in_row(int r) const { return row_members_.at(static_cast<std::size_t>(r)); }

  /// Nonempty rows in increasing order; their number is rho.
  std::span<const int> rows() const noexcept { return rows_; }
  int nonempty_rows() const noexcept { return static_cast<int>(rows_.size()); }
  int max_row() const noexcept { return rows_.back(); }
  int max_col() const noexcept { return max_col_; }
  bool is_boundary_row(int r) const noexcept { return r == 0 || r == m_ - 1; }

  std::optional<std::size_t> find(Digit d) const {
    for (std::size_t i = 0; i < digits_.size(); ++i)
      if (digits_[i] == d) return i;
    return std::nullopt;
  }

  RawSpec raw() const { return RawSpec{m_, n_, digits_, probs_}; }

  friend bool operator==(const CarpetSpec& a, const CarpetSpec& b) {
    return a.m_ == b.m_ && a.n_ == b.n_ && a.digits_ == b.digits_ && a.probs_ == b.probs_;
  }

 private:
  friend CarpetSpec build_spec(RawSpec raw);
  CarpetSpec() = default;

  int m_ = 0;
  int n_ = 0;
  double sigma_ = 0.0;
  double log_m_ = 0.0;
  double log_n_ = 0.0;
  int max_col_ = 0;
  std::vector<Digit> digits_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
  std::vector<double> row_probs_;
  std::vector<double> log_row_probs_;
  std::vector<std::vector<std::size_t>> row_members_;
  std::vector<int> rows_;
};

inline CarpetSpec build_spec(RawSpec raw) {
  if (raw.m < 2 || raw.n <= raw.m)
    throw error(errc::bad_bases, "need 2 <= m < n, got m=" + std::to_string(raw.m) +
                                     " n=" + std::to_string(raw.n));
  if (raw.digits.size() != raw.probs.size())
    throw error(errc::length_mismatch, std::to_string(raw.digits.size()) + " digits but " +
                                           std::to_string(raw.probs.size()) + " probs");
  if (raw.digits.empty()) throw error(errc::degenerate_rows, "empty digit set");

  std::set<Digit> seen;
  std::set<int> rows_used, cols_used;
  for (const Digit& d : raw.digits) {
    if (d.row < 0 || d.row >= raw.m || d.col < 0 || d.col >= raw.n)
      throw error(errc::bad_digit, "digit (" + std::to_string(d.row) + "," + std::to_string(d.col) +
                                       ") outside the " + std::to_string(raw.m) + "x" +
                                       std::to_string(raw.n) + " grid");
    if (!seen.insert(d).second)
      throw error(errc::duplicate_digit,
                  "digit (" + std::to_string(d.row) + "," + std::to_string(d.col) + ") repeated");
    rows_used.insert(d.row);
    cols_used.insert(d.col);
  }

  double sum = 0.0;
  for (double p : raw.probs) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw error(errc::non_positive_prob, "probability " + std::to_string(p) + " is not positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > prob_sum_tolerance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", sum);
    throw error(errc::prob_sum_mismatch, std::string("probabilities sum to ") + buf);
  }
  // Rescale only past float noise so that rebuilding a built spec is exact.
  if (std::abs(sum - 1.0) > 8.0 * DBL_EPSILON * static_cast<double>(raw.probs.size()))
    for (double& p : raw.probs) p /= sum;

  if (rows_used.size() < 2 || cols_used.size() < 2)
    throw error(errc::degenerate_rows, "digits must occupy more than one row and more than one column");

  CarpetSpec spec;
  spec.m_ = raw.m;
  spec.n_ = raw.n;
  spec.log_m_ = std::log(static_cast<double>(raw.m));
  spec.log_n_ = std::log(static_cast<double>(raw.n));
  spec.sigma_ = spec.log_m_ / spec.log_n_;
  spec.digits_ = std::move(raw.digits);
  spec.probs_ = std::move(raw.probs);
  spec.max_col_ = *cols_used.rbegin();

  const auto m = static_cast<std::size_t>(spec.m_);
  spec.row_probs_.assign(m, 0.0);
  spec.row_members_.assign(m, {});
  spec.log_probs_.reserve(spec.digits_.size());
  for (std::size_t i = 0; i < spec.digits_.size(); ++i) {
    const auto r = static_cast<std::size_t>(spec.digits_[i].row);
    spec.row_probs_[r] += spec.probs_[i];
    spec.row_members_[r].push_back(i);
    spec.log_probs_.push_back(std::log(spec.probs_[i]));
  }
  spec.log_row_probs_.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    spec.log_row_probs_[r] = spec.row_probs_[r] > 0.0 ? std::log(spec.row_probs_[r]) : numeric::neg_inf;
    if (!spec.row_members_[r].empty()) spec.rows_.push_back(static_cast<int>(r));
  }
  return spec;
}

inline constexpr double direct_power_limit = 50.0;

/// log gamma_r(t) = log sum_{d in row r} p_d^t, one entry per row (-inf for
/// empty rows).  Direct summation for |t| <= 50, max-shifted beyond.
inline std::vector<double> log_gamma(const CarpetSpec& spec, double t) {
  std::vector<double> out(static_cast<std::size_t>(spec.m()), numeric::neg_inf);
  std::vector<double> scratch;
  for (int r : spec.rows()) {
    const auto members = spec.digits_in_row(r);
    if (std::abs(t) <= direct_power_limit) {
      double acc = 0.0;
      for (std::size_t d : members) acc += std::pow(spec.probs()[d], t);
      out[static_cast<std::size_t>(r)] = std::log(acc);
    } else {
      scratch.clear();
      for (std::size_t d : members) scratch.push_back(t * spec.log_probs()[d]);
      out[static_cast<std::size_t>(r)] = numeric::log_sum_exp(scratch);
    }
  }
  return out;
}

/// gamma_r(t) per row; 0 for empty rows.  May under/overflow for extreme t,
/// where log_gamma should be used.
inline std::vector<double> gamma(const CarpetSpec& spec, double t) {
  std::vector<double> out(static_cast<std::size_t>(spec.m()), 0.0);
  for (int r : spec.rows()) {
    const auto ri = static_cast<std::size_t>(r);
    if (std::abs(t) <= direct_power_limit) {
      double acc = 0.0;
      for (std::size_t d : spec.digits_in_row(r)) acc += std::pow(spec.probs()[d], t);
      out[ri] = acc;
    } else {
      out[ri] = std::exp(log_gamma(spec, t)[ri]);
    }
  }
  return out;
}

// Stable identifier of a spec: FNV-1a over the exact (hex-float) contents.
inline std::string spec_hash(const CarpetSpec& spec) {
  std::string text = std::to_string(spec.m()) + ";" + std::to_string(spec.n());
  char buf[64];
  for (std::size_t i = 0; i < spec.size(); ++i) {
    std::snprintf(buf, sizeof buf, ";%d,%d:%a", spec.row_of(i), spec.col_of(i), spec.probs()[i]);
    text += buf;
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bmc

#endif  // BMCARPET_CARPET_HPP
