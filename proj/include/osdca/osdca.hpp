#ifndef OSDCA_OSDCA_HPP
#define OSDCA_OSDCA_HPP

#include "osdca/core.hpp"
#include "osdca/random.hpp"
#include "osdca/feasible_set.hpp"
#include "osdca/problem.hpp"
#include "osdca/schedules.hpp"
#include "osdca/data.hpp"
#include "osdca/epca.hpp"
#include "osdca/solvers.hpp"
#include "osdca/bench.hpp"

#endif  // OSDCA_OSDCA_HPP
