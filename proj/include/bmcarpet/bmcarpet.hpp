#ifndef BMCARPET_BMCARPET_HPP
#define BMCARPET_BMCARPET_HPP

#include "bmcarpet/carpet.hpp"
#include "bmcarpet/empirical.hpp"
#include "bmcarpet/error.hpp"
#include "bmcarpet/io.hpp"
#include "bmcarpet/numeric.hpp"
#include "bmcarpet/parallel.hpp"
#include "bmcarpet/random.hpp"
#include "bmcarpet/spectrum.hpp"
#include "bmcarpet/symbolic.hpp"

#endif  // BMCARPET_BMCARPET_HPP
