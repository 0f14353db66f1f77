#pragma once

// Umbrella header: variance-reduced Monte Carlo integral estimation via
// cross-validated surrogate control variates.

#include "stackmc/distributions.hpp"
#include "stackmc/error.hpp"
#include "stackmc/estimators.hpp"
#include "stackmc/fitters.hpp"
#include "stackmc/harness.hpp"
#include "stackmc/rng.hpp"
#include "stackmc/testfunctions.hpp"
#include "stackmc/worked_example.hpp"
