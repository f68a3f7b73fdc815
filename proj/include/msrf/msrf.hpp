#pragma once

#include "msrf/csv.hpp"
#include "msrf/evaluation.hpp"
#include "msrf/forest.hpp"
#include "msrf/maxstat.hpp"
#include "msrf/model_io.hpp"
#include "msrf/multiple_testing.hpp"
#include "msrf/random.hpp"
#include "msrf/simgen.hpp"
#include "msrf/step_function.hpp"
#include "msrf/studies.hpp"
#include "msrf/survival.hpp"
