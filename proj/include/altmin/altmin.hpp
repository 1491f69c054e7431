#pragma once

#include "altmin/analysis.hpp"
#include "altmin/errors.hpp"
#include "altmin/experiment.hpp"
#include "altmin/graph.hpp"
#include "altmin/instance.hpp"
#include "altmin/io.hpp"
#include "altmin/least_squares.hpp"
#include "altmin/metrics.hpp"
#include "altmin/random.hpp"
#include "altmin/solver.hpp"
#include "altmin/state.hpp"
#include "altmin/svg.hpp"
