#pragma once

#include "reluinit/analytics.hpp"
#include "reluinit/errors.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/netcore.hpp"
#include "reluinit/quadrature.hpp"
#include "reluinit/ratiodist.hpp"
#include "reluinit/rng.hpp"
#include "reluinit/special.hpp"
