#pragma once

#include "wiploc/codec.hpp"
#include "wiploc/energy.hpp"
#include "wiploc/error.hpp"
#include "wiploc/geometry.hpp"
#include "wiploc/phy.hpp"
#include "wiploc/protocol.hpp"
#include "wiploc/rng.hpp"
#include "wiploc/sim/metrics.hpp"
#include "wiploc/sim/scenario.hpp"
#include "wiploc/sim/simulator.hpp"
#include "wiploc/sim/sweep.hpp"
