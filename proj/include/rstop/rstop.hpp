#pragma once

#include "rstop/baselines.hpp"
#include "rstop/battery.hpp"
#include "rstop/core_model.hpp"
#include "rstop/enumerate.hpp"
#include "rstop/errors.hpp"
#include "rstop/harness.hpp"
#include "rstop/optimal_dp.hpp"
#include "rstop/policies.hpp"
#include "rstop/rng.hpp"
#include "rstop/switching.hpp"
