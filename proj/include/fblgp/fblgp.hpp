#pragma once

#include "fblgp/concurrent_learning.hpp"
#include "fblgp/config.hpp"
#include "fblgp/controller.hpp"
#include "fblgp/errors.hpp"
#include "fblgp/gp.hpp"
#include "fblgp/numerics.hpp"
#include "fblgp/plant.hpp"
#include "fblgp/simulator.hpp"
#include "fblgp/trace_io.hpp"
