#pragma once

#include "cwr/analysis.hpp"
#include "cwr/components.hpp"
#include "cwr/experiment.hpp"
#include "cwr/geometry.hpp"
#include "cwr/io.hpp"
#include "cwr/mcmc.hpp"
#include "cwr/multitype.hpp"
#include "cwr/radius_law.hpp"
#include "cwr/random.hpp"
#include "cwr/sampling.hpp"
#include "cwr/slab.hpp"
#include "cwr/spatial_grid.hpp"
#include "cwr/stats.hpp"
