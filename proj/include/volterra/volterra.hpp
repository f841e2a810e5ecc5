#pragma once

#include "volterra/analysis.hpp"
#include "volterra/bsvie.hpp"
#include "volterra/condexp.hpp"
#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/io.hpp"
#include "volterra/linalg.hpp"
#include "volterra/parallel.hpp"
#include "volterra/paths.hpp"
#include "volterra/problems.hpp"
#include "volterra/rng.hpp"
#include "volterra/svg.hpp"
#include "volterra/svie.hpp"
#include "volterra/tree.hpp"
