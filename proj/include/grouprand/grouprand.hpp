#pragma once

#include "grouprand/design.hpp"
#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/inference.hpp"
#include "grouprand/optimal_design.hpp"
#include "grouprand/permutation.hpp"
#include "grouprand/population.hpp"
#include "grouprand/report.hpp"
#include "grouprand/rng.hpp"
#include "grouprand/simplex.hpp"
#include "grouprand/simulation.hpp"
#include "grouprand/stats.hpp"
