#pragma once

#include "strata/errors.hpp"
#include "strata/age_profile.hpp"
#include "strata/hazard.hpp"
#include "strata/params.hpp"
#include "strata/r0.hpp"
#include "strata/strategy.hpp"
#include "strata/parallel.hpp"
#include "strata/comparison.hpp"
