#ifndef BMCARPET_ERROR_HPP
#define BMCARPET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bmc {

enum class errc {
  bad_bases,
  bad_digit,
  length_mismatch,
  duplicate_digit,
  non_positive_prob,
  prob_sum_mismatch,
  degenerate_rows,
  out_of_range,
  degenerate,
  no_convergence,
  empty_grid,
  prefix_too_short,
  l_too_small,
  too_large,
  bad_point,
  zero_measure,
  bad_delta,
  bad_argument,
};

inline const char* to_string(errc code) noexcept {
  switch (code) {
    case errc::bad_bases: return "BadBases";
    case errc::bad_digit: return "BadDigit";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::duplicate_digit: return "DuplicateDigit";
    case errc::non_positive_prob: return "NonPositiveProb";
    case errc::prob_sum_mismatch: return "ProbSumMismatch";
    case errc::degenerate_rows: return "DegenerateRows";
    case errc::out_of_range: return "OutOfRange";
    case errc::degenerate: return "Degenerate";
    case errc::no_convergence: return "NoConvergence";
    case errc::empty_grid: return "EmptyGrid";
    case errc::prefix_too_short: return "PrefixTooShort";
    case errc::l_too_small: return "LTooSmall";
    case errc::too_large: return "TooLarge";
    case errc::bad_point: return "BadPoint";
    case errc::zero_measure: return "ZeroMeasure";
    case errc::bad_delta: return "BadDelta";
    case errc::bad_argument: return "BadArgument";
  }
  return "Unknown";
}

// Every failure in the library is reported through this type; code() says which.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace bmc

#endif  // BMCARPET_ERROR_HPP
