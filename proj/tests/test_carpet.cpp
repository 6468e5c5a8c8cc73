#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/io.hpp"
#include "bmcarpet/numeric.hpp"
#include "bmcarpet/parallel.hpp"
#include "oracles.hpp"

using namespace bmc;

namespace {

errc build_error(RawSpec raw) {
  try {
    build_spec(std::move(raw));
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected build_spec to throw";
  return errc::bad_argument;
}

}  // namespace

TEST(BuildSpec, TwoByThreeCarpetRowData) {
  const auto spec = build_spec(oracle::carpet_2x3());
  EXPECT_EQ(spec.m(), 2);
  EXPECT_EQ(spec.n(), 3);
  EXPECT_NEAR(spec.sigma(), 0.630929753571457, 1e-15);
  EXPECT_NEAR(spec.row_prob(0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(spec.row_prob(1), 1.0 / 3, 1e-15);
  EXPECT_EQ(spec.row_count(0), 2);
  EXPECT_EQ(spec.row_count(1), 1);
  EXPECT_EQ(spec.nonempty_rows(), 2);
  EXPECT_EQ(spec.max_row(), 1);
  EXPECT_EQ(spec.max_col(), 2);
  EXPECT_TRUE(spec.is_boundary_row(0));
  EXPECT_TRUE(spec.is_boundary_row(1));
  ASSERT_TRUE(spec.find({1, 1}).has_value());
  EXPECT_EQ(*spec.find({1, 1}), 2u);
  EXPECT_FALSE(spec.find({1, 0}).has_value());
}

TEST(BuildSpec, SingleRowIsDegenerate) {
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {0, 1}, {0, 2}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}), errc::degenerate_rows);
}

TEST(BuildSpec, SingleColumnIsDegenerate) {
  EXPECT_EQ(build_error({2, 3, {{0, 1}, {1, 1}}, {0.5, 0.5}}), errc::degenerate_rows);
}

TEST(BuildSpec, ProbabilitiesMustSumToOne) {
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {0, 2}, {1, 1}}, {0.5, 0.5, 0.5}}), errc::prob_sum_mismatch);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {0, 2}, {1, 1}}, {0.5, 0.25, 0.25 + 1e-11}}), errc::prob_sum_mismatch);
}

TEST(BuildSpec, RejectsBadInput) {
  EXPECT_EQ(build_error({1, 3, {{0, 0}, {0, 2}}, {0.5, 0.5}}), errc::bad_bases);
  EXPECT_EQ(build_error({3, 3, {{0, 0}, {1, 2}}, {0.5, 0.5}}), errc::bad_bases);
  EXPECT_EQ(build_error({3, 2, {{0, 0}, {1, 1}}, {0.5, 0.5}}), errc::bad_bases);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {1, 3}}, {0.5, 0.5}}), errc::bad_digit);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {2, 1}}, {0.5, 0.5}}), errc::bad_digit);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {-1, 1}}, {0.5, 0.5}}), errc::bad_digit);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {1, 1}, {0, 0}}, {0.25, 0.5, 0.25}}), errc::duplicate_digit);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {1, 1}}, {1.0, 0.0}}), errc::non_positive_prob);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {1, 1}}, {1.5, -0.5}}), errc::non_positive_prob);
  EXPECT_EQ(build_error({2, 3, {{0, 0}, {1, 1}}, {1.0}}), errc::length_mismatch);
}

TEST(BuildSpec, ErrorMessageCarriesName) {
  try {
    build_spec({2, 3, {{0, 0}, {0, 2}, {1, 1}}, {0.5, 0.5, 0.5}});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("ProbSumMismatch", 0), 0u) << e.what();
    EXPECT_STREQ(to_string(e.code()), "ProbSumMismatch");
  }
}

TEST(BuildSpec, TinySumErrorIsRescaled) {
  const auto spec = build_spec({2, 3, {{0, 0}, {0, 2}, {1, 1}}, {0.5, 0.25, 0.25 + 5e-13}});
  double sum = 0.0;
  for (double p : spec.probs()) sum += p;
  EXPECT_NEAR(sum, 1.0, 4e-16);
}

TEST(BuildSpec, RandomSpecsAreValid) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto raw = oracle::random_spec(rng);
    const auto spec = build_spec(raw);
    double total = 0.0;
    for (int r = 0; r < spec.m(); ++r) total += spec.row_prob(r);
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_GE(spec.nonempty_rows(), 2);
  }
}

TEST(Gamma, CollapsesToRowMassAtOne) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto spec = build_spec(oracle::random_spec(rng));
    const auto g = gamma(spec, 1.0);
    for (int r = 0; r < spec.m(); ++r) EXPECT_NEAR(g[static_cast<std::size_t>(r)], spec.row_prob(r), 1e-15);
  }
}

TEST(Gamma, CountsDigitsAtZero) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const auto spec = build_spec(oracle::random_spec(rng));
    const auto g = gamma(spec, 0.0);
    for (int r = 0; r < spec.m(); ++r) EXPECT_DOUBLE_EQ(g[static_cast<std::size_t>(r)], spec.row_count(r));
  }
}

TEST(Gamma, TwoByThreeAtTwo) {
  const auto spec = build_spec(oracle::carpet_2x3());
  const auto g = gamma(spec, 2.0);
  EXPECT_NEAR(g[0], 2.0 / 9, 1e-15);
  EXPECT_NEAR(g[1], 1.0 / 9, 1e-15);
}

TEST(Gamma, LargeExponentsStayFinite) {
  const auto spec = build_spec(oracle::carpet_2x3());
  const auto lg = log_gamma(spec, 400.0);
  EXPECT_NEAR(lg[0], std::log(2.0) - 400.0 * std::log(3.0), 1e-9);
  const auto lgn = log_gamma(spec, -400.0);
  EXPECT_NEAR(lgn[1], 400.0 * std::log(3.0), 1e-9);
}

TEST(Gamma, DirectAndLogPathsAgreeAtCrossover) {
  std::mt19937_64 rng(13);
  const auto spec = build_spec(oracle::random_spec(rng));
  for (double t : {49.999, 50.0, 50.001}) {
    const auto lg = log_gamma(spec, t);
    for (int r : spec.rows()) {
      long double direct = 0.0L;
      for (std::size_t d : spec.digits_in_row(r)) direct += std::pow(static_cast<long double>(spec.probs()[d]), t);
      EXPECT_NEAR(lg[static_cast<std::size_t>(r)], static_cast<double>(std::log(direct)), 1e-11);
    }
  }
}

TEST(SpecHash, StableAndSensitive) {
  const auto a = build_spec(oracle::carpet_2x3());
  const auto b = build_spec(oracle::carpet_2x3());
  EXPECT_EQ(spec_hash(a), spec_hash(b));
  EXPECT_EQ(spec_hash(a).size(), 16u);
  auto raw = oracle::carpet_2x3();
  raw.probs = {0.5, 0.25, 0.25};
  EXPECT_NE(spec_hash(a), spec_hash(build_spec(raw)));
}

TEST(SpecIo, JsonRoundTripIsExact) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const auto spec = build_spec(oracle::random_spec(rng));
    const auto again = build_spec(io::parse_spec_json(io::serialize_spec(spec)));
    EXPECT_TRUE(spec == again);
    EXPECT_EQ(spec_hash(spec), spec_hash(again));
  }
}

TEST(SpecIo, DiagnosticsNameTheField) {
  auto message = [](const std::string& text) {
    try {
      io::parse_spec_json(text);
    } catch (const io::format_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"m": 2, "n": 3, "digits": [[0,0]]})").find("'probs'"), std::string::npos);
  EXPECT_NE(message(R"({"m": 2.5, "n": 3, "digits": [], "probs": []})").find("'m'"), std::string::npos);
  EXPECT_NE(message(R"({"m": 2, "n": 3, "digits": [[0]], "probs": [1]})").find("'digits'"), std::string::npos);
  EXPECT_NE(message(R"({"m": 2, "n": 3, "digits": [[0,0]], "probs": ["x"]})").find("'probs'"), std::string::npos);
  EXPECT_NE(message(R"({"m": 2, "n": 3, "digits": [[0,0]], "probs": [1], "q": 1})").find("'q'"), std::string::npos);
  EXPECT_NE(message(R"({"m": 2, "n": 3, "dig)").find("malformed"), std::string::npos);
}

TEST(SpecIo, PrefixParsing) {
  const auto digits = io::parse_prefix("0,0; 1,1;0,2");
  ASSERT_EQ(digits.size(), 3u);
  EXPECT_EQ(digits[1], (Digit{1, 1}));
  EXPECT_EQ(digits[2], (Digit{0, 2}));
  EXPECT_THROW(io::parse_prefix("0,0;1"), io::format_error);
  EXPECT_THROW(io::parse_prefix("0,0;;1,1"), io::format_error);
  EXPECT_THROW(io::parse_prefix("0,0,1"), io::format_error);
}

TEST(SpecIo, RealsUseFifteenDigits) {
  EXPECT_EQ(io::real(1.0 / 3), "0.333333333333333");
  EXPECT_EQ(io::real(0.0), "0");
  EXPECT_EQ(io::real(-2.5e-20), "-2.5e-20");
}

TEST(Numeric, LogSumExpMatchesDirectSum) {
  const std::vector<double> v{-1.0, 0.5, 2.0, numeric::neg_inf};
  EXPECT_NEAR(numeric::log_sum_exp(v), std::log(std::exp(-1.0) + std::exp(0.5) + std::exp(2.0)), 1e-15);
  const std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(numeric::log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> none{numeric::neg_inf};
  EXPECT_EQ(numeric::log_sum_exp(none), numeric::neg_inf);
}

TEST(Numeric, LeastSquaresRecoversLine) {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(2.5 * i - 1.0);
  }
  const auto fit = numeric::least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.5, 1e-12);
  EXPECT_NEAR(fit.intercept, -1.0, 1e-12);
  EXPECT_NEAR(fit.residual_rms, 0.0, 1e-12);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 7, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
