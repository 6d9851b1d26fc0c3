#pragma once

#include "mlmask/analytic.hpp"
#include "mlmask/config_io.hpp"
#include "mlmask/errors.hpp"
#include "mlmask/network.hpp"
#include "mlmask/oracle.hpp"
#include "mlmask/pgf.hpp"
#include "mlmask/rng.hpp"
#include "mlmask/scenario.hpp"
#include "mlmask/simulate.hpp"
#include "mlmask/spectral.hpp"
#include "mlmask/sweep.hpp"
