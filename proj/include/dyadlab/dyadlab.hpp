#pragma once

// Umbrella header for the full toolkit.

#include "dyadlab/config.hpp"
#include "dyadlab/errors.hpp"
#include "dyadlab/estimators.hpp"
#include "dyadlab/haar.hpp"
#include "dyadlab/interval.hpp"
#include "dyadlab/linalg.hpp"
#include "dyadlab/mvee.hpp"
#include "dyadlab/operators.hpp"
#include "dyadlab/parallel.hpp"
#include "dyadlab/reducing.hpp"
#include "dyadlab/reports.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/runner.hpp"
#include "dyadlab/sphere.hpp"
#include "dyadlab/step_function.hpp"
#include "dyadlab/stopping.hpp"
#include "dyadlab/version.hpp"
#include "dyadlab/weights.hpp"
