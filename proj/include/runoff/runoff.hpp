#pragma once

// Umbrella header for the stochastic reserving library.

#include "runoff/boosting.hpp"
#include "runoff/chain_ladder.hpp"
#include "runoff/csr.hpp"
#include "runoff/distribution.hpp"
#include "runoff/errors.hpp"
#include "runoff/evaluation.hpp"
#include "runoff/forest.hpp"
#include "runoff/grid_search.hpp"
#include "runoff/lognormal.hpp"
#include "runoff/mack.hpp"
#include "runoff/neural_net.hpp"
#include "runoff/odp.hpp"
#include "runoff/pipeline.hpp"
#include "runoff/rng.hpp"
#include "runoff/schedule_p.hpp"
#include "runoff/stacking.hpp"
#include "runoff/tree.hpp"
#include "runoff/triangle.hpp"
