#pragma once

// Umbrella header for the loggas library: high-temperature beta-ensemble
// equilibrium measures, finite-N samplers, and local Poisson statistics.

#include "loggas/grid.hpp"
#include "loggas/potential.hpp"
#include "loggas/rng.hpp"
#include "loggas/tridiagonal.hpp"
#include "loggas/equilibrium.hpp"
#include "loggas/stats.hpp"
#include "loggas/sampler.hpp"
#include "loggas/localstats.hpp"
#include "loggas/io.hpp"
#include "loggas/experiment.hpp"
#include "loggas/commands.hpp"
#include "loggas/validate.hpp"
