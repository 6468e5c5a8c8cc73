// Spectrum of the equal-weight measure on the 2x3 carpet with digits
// (0,0), (0,2), (1,1): prints the endpoints and a coarse table of f(alpha).
#include <cstdio>

#include "bmcarpet/bmcarpet.hpp"

int main() {
  const bmc::CarpetSpec spec = bmc::build_spec({2, 3, {{0, 0}, {0, 2}, {1, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  const auto ar = bmc::alpha_range(spec);
  std::printf("sigma      %.10f\n", spec.sigma());
  std::printf("dim_H      %.10f\n", bmc::hausdorff_dimension(spec));
  std::printf("alpha_min  %.10f  f -> %.10f\n", ar.alpha_min, ar.f_at_min);
  std::printf("alpha_max  %.10f  f -> %.10f\n", ar.alpha_max, ar.f_at_max);
  std::printf("\n%8s %14s %14s\n", "t", "alpha", "f");
  for (double t : bmc::linear_grid(-8.0, 8.0, 17)) {
    const auto tm = bmc::tilted_measure(spec, t);
    std::printf("%8.2f %14.10f %14.10f\n", t, tm.alpha, t * tm.alpha + tm.beta);
  }
}
