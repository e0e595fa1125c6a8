#pragma once

// Umbrella header for the mcomplete library.

#include "mcomplete/coherence.hpp"
#include "mcomplete/ensembles.hpp"
#include "mcomplete/error.hpp"
#include "mcomplete/harness.hpp"
#include "mcomplete/linalg.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"
#include "mcomplete/sampling.hpp"
#include "mcomplete/solver.hpp"
#include "mcomplete/tangent.hpp"
