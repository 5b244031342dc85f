#pragma once

// Umbrella header.

#include "gpwc/catalog.hpp"
#include "gpwc/comparison.hpp"
#include "gpwc/core.hpp"
#include "gpwc/dynamics.hpp"
#include "gpwc/expr.hpp"
#include "gpwc/geometry.hpp"
#include "gpwc/gpw.hpp"
#include "gpwc/hypotheses.hpp"
#include "gpwc/integrate.hpp"
#include "gpwc/quadrature.hpp"
#include "gpwc/runner.hpp"
#include "gpwc/sampling.hpp"
#include "gpwc/scenario.hpp"
#include "gpwc/trajectory.hpp"
