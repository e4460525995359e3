#pragma once

// Umbrella header for the boundary-driven traffic replay engine.

#include "wavecell/cosim.hpp"
#include "wavecell/dataset.hpp"
#include "wavecell/errors.hpp"
#include "wavecell/idm.hpp"
#include "wavecell/metrics.hpp"
#include "wavecell/scenario.hpp"
#include "wavecell/simlog.hpp"
#include "wavecell/svg.hpp"
#include "wavecell/synthgen.hpp"
#include "wavecell/util.hpp"
#include "wavecell/vehicle.hpp"
