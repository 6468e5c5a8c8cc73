#ifndef BMCARPET_CLI_HPP
#define BMCARPET_CLI_HPP

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/empirical.hpp"
#include "bmcarpet/error.hpp"
#include "bmcarpet/io.hpp"
#include "bmcarpet/spectrum.hpp"
#include "bmcarpet/symbolic.hpp"

namespace bmc::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 2;
inline constexpr int exit_numeric = 3;

struct CliConfig {
  std::string subcommand;
  std::string spec_path;
  std::string out_path;  // empty: standard output
  unsigned threads = 1;

  // curve
  double t_min = -10.0, t_max = 10.0;
  int points = 201;
  std::vector<double> t_list;
  // f, square, coarse, cover
  std::optional<double> alpha;
  // square, verify, cover
  std::optional<double> t;
  int k = 0;
  double eps = 0.05;
  std::string prefix;
  // coarse
  std::optional<double> alpha_min, alpha_max;
  bool sample = false;
  int samples_per_alpha = 20000;
  // verify
  int samples = 100;
  std::uint64_t seed = 1;
  int ball_samples = 0;
  int k0 = 5, k1 = 30;
  double tolerance = 0.05;
  // cover
  double delta = 0.0;
  int k_min = 1, k_max = 12;
};

namespace detail {

// Flags are checked before any computation; a bad flag names itself.
class flag_error : public std::runtime_error {
 public:
  flag_error(const std::string& flag, const std::string& what) : std::runtime_error("--" + flag + ": " + what) {}
};

inline const char* spec_field(errc code) {
  switch (code) {
    case errc::bad_bases: return "m/n";
    case errc::length_mismatch: return "digits/probs";
    case errc::bad_digit:
    case errc::duplicate_digit:
    case errc::degenerate_rows: return "digits";
    case errc::non_positive_prob:
    case errc::prob_sum_mismatch: return "probs";
    default: return nullptr;
  }
}

class Header {
 public:
  Header(const std::string& subcommand, const CliConfig& cfg, const CarpetSpec& spec) {
    text_ += "# bmcarpet " + subcommand + "\n";
    add("spec", cfg.spec_path);
    add("spec_hash", spec_hash(spec));
    add("m", spec.m());
    add("n", spec.n());
  }
  void add(const std::string& key, const std::string& value) { text_ += "# " + key + "=" + value + "\n"; }
  void add(const std::string& key, double value) { add(key, io::real(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

inline std::string opt_real(const std::optional<double>& v) { return v ? io::real(*v) : std::string(); }

inline std::string join_reals(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + io::real(values[i]);
  return out;
}

inline void require(bool ok, const std::string& flag, const std::string& what) {
  if (!ok) throw flag_error(flag, what);
}

inline void validate(const CliConfig& c) {
  const auto& s = c.subcommand;
  require(c.threads >= 1, "threads", "must be >= 1");
  if (s == "curve") {
    if (c.t_list.empty()) {
      require(c.points >= 1, "points", "must be >= 1");
      require(c.t_min <= c.t_max, "t-min", "must not exceed --t-max");
    }
  } else if (s == "f") {
    require(c.alpha.has_value(), "alpha", "is required");
  } else if (s == "square") {
    require(!c.prefix.empty(), "prefix", "is required");
    require(c.k >= 1, "k", "must be >= 1");
    require(c.eps > 0.0, "eps", "must be positive");
  } else if (s == "coarse") {
    require(c.k >= 1, "k", "must be >= 1");
    require(c.eps > 0.0, "eps", "must be positive");
    require(c.points >= 1, "points", "must be >= 1");
    require(c.samples_per_alpha >= 1, "samples-per-alpha", "must be >= 1");
  } else if (s == "verify") {
    require(c.samples >= 1, "samples", "must be >= 1");
    require(c.k >= 1, "k", "must be >= 1");
    require(c.ball_samples >= 0 && c.ball_samples <= c.samples, "ball-samples", "must lie in [0, --samples]");
    require(c.k0 >= 5, "k0", "must be >= 5");
    require(c.k1 > c.k0, "k1", "must exceed --k0");
    require(c.tolerance > 0.0, "tolerance", "must be positive");
  } else if (s == "cover") {
    require(c.eps > 0.0, "eps", "must be positive");
    require(c.k_min >= 1, "k-min", "must be >= 1");
    require(c.k_max >= c.k_min, "k-max", "must be >= --k-min");
  }
}

inline std::string run_info(const CliConfig& cfg, const CarpetSpec& spec) {
  Header h("info", cfg, spec);
  std::ostringstream o;
  o << h.str();
  std::vector<double> q(spec.row_probs().begin(), spec.row_probs().end());
  std::string counts;
  for (int r = 0; r < spec.m(); ++r) counts += (r ? "," : "") + std::to_string(spec.row_count(r));
  const AlphaRange ar = alpha_range(spec);
  o << "m=" << spec.m() << "\n"
    << "n=" << spec.n() << "\n"
    << "sigma=" << io::real(spec.sigma()) << "\n"
    << "q=" << join_reals(q) << "\n"
    << "N=" << counts << "\n"
    << "beta0=" << io::real(hausdorff_dimension(spec)) << "\n"
    << "alpha_min=" << io::real(ar.alpha_min) << "\n"
    << "alpha_max=" << io::real(ar.alpha_max) << "\n"
    << "f_at_alpha_min=" << io::real(ar.f_at_min) << "\n"
    << "f_at_alpha_max=" << io::real(ar.f_at_max) << "\n";
  return o.str();
}

inline std::string run_curve(const CliConfig& cfg, const CarpetSpec& spec) {
  const auto grid = cfg.t_list.empty()
                        ? linear_grid(cfg.t_min, cfg.t_max, static_cast<std::size_t>(cfg.points))
                        : cfg.t_list;
  const auto curve = spectrum_curve(spec, grid, cfg.threads);
  Header h("curve", cfg, spec);
  h.add("grid", curve.grid);
  std::ostringstream o;
  o << h.str() << "t,alpha,f,beta\n";
  for (const auto& s : curve.samples)
    o << io::real(s.t) << "," << io::real(s.alpha) << "," << io::real(s.f) << "," << io::real(s.beta) << "\n";
  return o.str();
}

inline std::string run_f(const CliConfig& cfg, const CarpetSpec& spec) {
  const auto lp = legendre_point(spec, *cfg.alpha);
  Header h("f", cfg, spec);
  h.add("alpha", *cfg.alpha);
  std::ostringstream o;
  o << h.str() << "alpha=" << io::real(*cfg.alpha) << "\n"
    << "f=" << io::real(lp.f) << "\n"
    << "t_star=" << io::real(lp.t_star) << "\n";
  return o.str();
}

inline std::string run_square(const CliConfig& cfg, const CarpetSpec& spec) {
  const auto prefix = SymbolicPrefix::from_digits(spec, io::parse_prefix(cfg.prefix));
  const double t = cfg.t.value_or(1.0);
  const double alpha = cfg.alpha.value_or(alpha_of_t(spec, t));
  const auto sq = approx_square(prefix, cfg.k);
  Header h("square", cfg, spec);
  h.add("prefix", io::format_prefix(prefix));
  h.add("k", cfg.k);
  h.add("t", t);
  h.add("alpha", alpha);
  h.add("eps", cfg.eps);

  std::ostringstream o;
  o << h.str() << "k=" << sq.level << "\n"
    << "l=" << sq.head_length << "\n"
    << "x0=" << io::real(sq.x0) << "\n"
    << "y0=" << io::real(sq.y0) << "\n"
    << "width=" << io::real(sq.width) << "\n"
    << "height=" << io::real(sq.height) << "\n"
    << "log_measure=" << io::real(sq.log_measure) << "\n"
    << "measure=" << io::real(sq.measure) << "\n"
    << "delta_hat=" << io::real(symbolic_local_dim(prefix, cfg.k)) << "\n";
  const auto v = v_k(prefix, cfg.k);
  if (sq.head_length >= 1) {
    const auto cls = classify_square(sq, alpha, cfg.eps, t);
    const auto z = z_k(prefix, cfg.k);
    o << "A_k=" << io::real(cls.defect) << "\n"
      << "V_k=" << (v ? std::to_string(*v) : std::string("exceeds_horizon")) << "\n"
      << "Z_k=" << (z ? io::real(*z) : std::string("exceeds_horizon")) << "\n"
      << "in_Y=" << (cls.in_Y ? "true" : "false") << "\n"
      << "in_G=" << (cls.in_G ? "true" : "false") << "\n";
  } else {
    // A_k, Z_k and G need l(k) >= 1
    o << "A_k=undefined\n"
      << "V_k=" << (v ? std::to_string(*v) : std::string("exceeds_horizon")) << "\n"
      << "Z_k=undefined\n"
      << "in_Y=" << (SquareClassifier(spec, alpha, cfg.eps, t).in_Y(sq) ? "true" : "false") << "\n"
      << "in_G=undefined\n";
  }
  return o.str();
}

inline std::string run_coarse(const CliConfig& cfg, const CarpetSpec& spec) {
  const AlphaRange ar = alpha_range(spec);
  const double lo = cfg.alpha_min.value_or(ar.alpha_min);
  const double hi = cfg.alpha_max.value_or(ar.alpha_max);
  if (lo > hi) throw flag_error("alpha-min", "must not exceed --alpha-max");
  CoarseOptions opt;
  opt.allow_sampling = cfg.sample;
  opt.samples_per_alpha = static_cast<std::size_t>(cfg.samples_per_alpha);
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  const auto cs = coarse_spectrum(spec, cfg.k, cfg.eps, linear_grid(lo, hi, static_cast<std::size_t>(cfg.points)), opt);

  Header h("coarse", cfg, spec);
  h.add("k", cfg.k);
  h.add("eps", cfg.eps);
  h.add("alpha_min", lo);
  h.add("alpha_max", hi);
  h.add("points", cfg.points);
  h.add("mode", cs.exact ? std::string("exact") : std::string("sampled"));
  if (!cs.exact) {
    h.add("seed", cfg.seed);
    h.add("samples_per_alpha", cfg.samples_per_alpha);
  }
  h.add("total_squares", cs.total_squares);
  std::ostringstream o;
  o << h.str() << "alpha,count,f_hat\n";
  for (std::size_t i = 0; i < cs.alpha_grid.size(); ++i)
    o << io::real(cs.alpha_grid[i]) << "," << io::real(cs.counts[i]) << "," << opt_real(cs.f_hat[i]) << "\n";
  return o.str();
}

inline std::string run_verify(const CliConfig& cfg, const CarpetSpec& spec) {
  const double t = cfg.t.value_or(1.0);
  VerifyOptions opt;
  opt.ball_samples = cfg.ball_samples;
  opt.ball_k0 = cfg.k0;
  opt.ball_k1 = cfg.k1;
  opt.tolerance = cfg.tolerance;
  opt.threads = cfg.threads;
  const auto rep = verify_convergence(spec, t, cfg.samples, cfg.k, cfg.seed, opt);

  Header h("verify", cfg, spec);
  h.add("t", t);
  h.add("samples", cfg.samples);
  h.add("k", cfg.k);
  h.add("seed", cfg.seed);
  h.add("ball_samples", cfg.ball_samples);
  h.add("k0", cfg.k0);
  h.add("k1", cfg.k1);
  h.add("tolerance", cfg.tolerance);
  h.add("alpha_t", rep.target_alpha);
  h.add("symbolic_mean", rep.symbolic.mean);
  h.add("symbolic_mean_abs_error", rep.symbolic.mean_abs_error);
  h.add("symbolic_fraction_within", rep.symbolic.fraction_within);
  if (rep.ball.count > 0) {
    h.add("ball_mean", rep.ball.mean);
    h.add("ball_mean_abs_error", rep.ball.mean_abs_error);
    h.add("ball_fraction_within", rep.ball.fraction_within);
  }
  std::ostringstream o;
  o << h.str() << "index,x,y,symbolic,ball,ball_residual\n";
  for (const auto& s : rep.per_sample)
    o << s.index << "," << io::real(s.x) << "," << io::real(s.y) << "," << io::real(s.symbolic) << ","
      << opt_real(s.ball) << "," << opt_real(s.ball_residual) << "\n";
  return o.str();
}

inline std::string run_cover(const CliConfig& cfg, const CarpetSpec& spec) {
  const double t = cfg.t.value_or(1.0);
  const double alpha = cfg.alpha.value_or(alpha_of_t(spec, t));
  const auto rep = covering_sum_demo(spec, t, alpha, cfg.eps, cfg.delta, cfg.k_min, cfg.k_max);

  Header h("cover", cfg, spec);
  h.add("t", t);
  h.add("alpha", alpha);
  h.add("eps", cfg.eps);
  h.add("delta", cfg.delta);
  h.add("k_min", cfg.k_min);
  h.add("k_max", cfg.k_max);
  h.add("beta", rep.beta);
  h.add("exponent", rep.exponent);
  h.add("bound_constant", rep.bound_constant);
  h.add("bound_ratio", rep.bound_ratio);
  h.add("k0", rep.k0);
  std::ostringstream o;
  o << h.str() << "k,l,count_Y,count_G,S_k,bound,ratio\n";
  for (const auto& lv : rep.levels)
    o << lv.k << "," << lv.l << "," << lv.count_Y << "," << lv.count_G << "," << io::real(lv.sum) << ","
      << io::real(lv.bound) << "," << opt_real(lv.ratio) << "\n";
  return o.str();
}

inline std::string dispatch(const CliConfig& cfg, const CarpetSpec& spec) {
  const auto& s = cfg.subcommand;
  if (s == "info") return run_info(cfg, spec);
  if (s == "curve") return run_curve(cfg, spec);
  if (s == "f") return run_f(cfg, spec);
  if (s == "square") return run_square(cfg, spec);
  if (s == "coarse") return run_coarse(cfg, spec);
  if (s == "verify") return run_verify(cfg, spec);
  return run_cover(cfg, spec);
}

}  // namespace detail

/// Parses argv, loads the spec, runs the subcommand and writes its report to
/// --out (or `out`). Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Multifractal spectrum of Bernoulli measures on Bedford-McMullen carpets", "bmcarpet"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--spec", cfg.spec_path, "carpet spec file (JSON)")->required();
  app.add_option("--out", cfg.out_path, "output file (default: standard output)");
  app.add_option("--threads", cfg.threads, "worker threads; output does not depend on it");

  auto* info = app.add_subcommand("info", "print bases, row data, dimension and alpha range");
  (void)info;

  auto* curve = app.add_subcommand("curve", "CSV of t, alpha(t), f(alpha(t)), beta(t)");
  curve->add_option("--t-min", cfg.t_min, "grid start");
  curve->add_option("--t-max", cfg.t_max, "grid end");
  curve->add_option("--points", cfg.points, "grid size");
  curve->add_option("--t", cfg.t_list, "explicit t values (comma separated)")->delimiter(',');

  auto* f = app.add_subcommand("f", "f(alpha) and the t* realizing it");
  f->add_option("--alpha", cfg.alpha, "local dimension")->required();

  auto* square = app.add_subcommand("square", "approximate square of a digit prefix");
  square->add_option("--prefix", cfg.prefix, "digits as row,col;row,col;...")->required();
  square->add_option("--k", cfg.k, "level")->required();
  square->add_option("--alpha", cfg.alpha, "target exponent (default alpha(t))");
  square->add_option("--eps", cfg.eps, "window half-width, relative");
  square->add_option("--t", cfg.t, "tilt parameter (default 1)");

  auto* coarse = app.add_subcommand("coarse", "coarse spectrum from counts of approximate squares");
  coarse->add_option("--k", cfg.k, "level")->required();
  coarse->add_option("--eps", cfg.eps, "window half-width, relative");
  coarse->add_option("--points", cfg.points, "alpha grid size");
  coarse->add_option("--alpha-min", cfg.alpha_min, "grid start (default alpha_min)");
  coarse->add_option("--alpha-max", cfg.alpha_max, "grid end (default alpha_max)");
  coarse->add_flag("--sample", cfg.sample, "estimate counts by importance sampling when enumeration is too large");
  coarse->add_option("--samples-per-alpha", cfg.samples_per_alpha, "samples per grid point in sampling mode");
  coarse->add_option("--seed", cfg.seed, "random seed for sampling mode");

  auto* verify = app.add_subcommand("verify", "local dimension estimates at mu_t-typical points");
  verify->add_option("--t", cfg.t, "tilt parameter (default 1)");
  verify->add_option("--samples", cfg.samples, "number of sampled points");
  verify->add_option("--k", cfg.k, "symbolic level")->required();
  verify->add_option("--seed", cfg.seed, "random seed");
  verify->add_option("--ball-samples", cfg.ball_samples, "how many points also get a ball-based estimate");
  verify->add_option("--k0", cfg.k0, "first ball level");
  verify->add_option("--k1", cfg.k1, "last ball level");
  verify->add_option("--tolerance", cfg.tolerance, "distance to alpha(t) counted as agreement");

  auto* cover = app.add_subcommand("cover", "covering sums over good approximate squares");
  cover->add_option("--t", cfg.t, "tilt parameter (default 1)");
  cover->add_option("--alpha", cfg.alpha, "target exponent (default alpha(t))");
  cover->add_option("--eps", cfg.eps, "window half-width, relative");
  cover->add_option("--delta", cfg.delta, "exponent slack, must exceed eps (alpha |t| + 2)")->required();
  cover->add_option("--k-min", cfg.k_min, "first level");
  cover->add_option("--k-max", cfg.k_max, "last level");

  // the points default differs between curve and coarse
  bool coarse_points_given = false;
  try {
    app.parse(argc, argv);
    coarse_points_given = coarse->count("--points") > 0;
  } catch (const CLI::Success&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return exit_input;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (cfg.subcommand == "coarse" && !coarse_points_given) cfg.points = 101;

  try {
    detail::validate(cfg);
    CarpetSpec spec = [&] {
      RawSpec raw = io::parse_spec_json(io::read_file(cfg.spec_path));
      try {
        return build_spec(std::move(raw));
      } catch (const error& e) {
        const char* field = detail::spec_field(e.code());
        throw io::format_error(std::string("spec: ") + (field ? std::string("field '") + field + "': " : "") +
                               e.what());
      }
    }();
    const std::string report = detail::dispatch(cfg, spec);
    if (cfg.out_path.empty()) {
      out << report;
    } else {
      std::ofstream file(cfg.out_path, std::ios::binary | std::ios::trunc);
      if (!file) throw detail::flag_error("out", "cannot open '" + cfg.out_path + "' for writing");
      file << report;
      if (!file.flush()) throw detail::flag_error("out", "write to '" + cfg.out_path + "' failed");
    }
    return exit_ok;
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == errc::no_convergence ? exit_numeric : exit_input;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bmcarpet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bmc::cli

#endif  // BMCARPET_CLI_HPP
