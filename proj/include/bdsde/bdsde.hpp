#pragma once

// Umbrella header for the BDSDE laboratory.

#include "bdsde/brownian.hpp"
#include "bdsde/comparison.hpp"
#include "bdsde/config.hpp"
#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/expr.hpp"
#include "bdsde/gronwall.hpp"
#include "bdsde/horizon.hpp"
#include "bdsde/integrals.hpp"
#include "bdsde/ito.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/phi.hpp"
#include "bdsde/runner.hpp"
#include "bdsde/solver.hpp"
#include "bdsde/time_grid.hpp"
#include "bdsde/version.hpp"
