#pragma once

// Umbrella header for the core library (no I/O dependencies).
#include "itrbounds/distribution.hpp"
#include "itrbounds/errors.hpp"
#include "itrbounds/model.hpp"
#include "itrbounds/radix.hpp"
#include "itrbounds/response_lp.hpp"
#include "itrbounds/simplex.hpp"
#include "itrbounds/simulation.hpp"
#include "itrbounds/strategies.hpp"
#include "itrbounds/version.hpp"
