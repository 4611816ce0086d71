#pragma once

// Umbrella header: interval arithmetic, expression graphs, inclusion
// functions, embedding systems, integrators, neural-network bounds,
// partitioned reachability and the synthesis demo.

#include "ivreach/config.hpp"
#include "ivreach/dual.hpp"
#include "ivreach/embedding.hpp"
#include "ivreach/errors.hpp"
#include "ivreach/expr.hpp"
#include "ivreach/expr_eval.hpp"
#include "ivreach/expr_parse.hpp"
#include "ivreach/inclusion.hpp"
#include "ivreach/integrate.hpp"
#include "ivreach/interval.hpp"
#include "ivreach/neural.hpp"
#include "ivreach/partition.hpp"
#include "ivreach/runner.hpp"
#include "ivreach/synthesis.hpp"
#include "ivreach/systems.hpp"
#include "ivreach/tensor.hpp"
