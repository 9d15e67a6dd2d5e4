#pragma once

#include "hstkm/dp.hpp"
#include "hstkm/experiment.hpp"
#include "hstkm/hst.hpp"
#include "hstkm/local_search.hpp"
#include "hstkm/metric.hpp"
#include "hstkm/rng.hpp"
#include "hstkm/seeding.hpp"
#include "hstkm/version.hpp"
