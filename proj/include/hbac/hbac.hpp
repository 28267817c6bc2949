#pragma once

#include "hbac/core.hpp"
#include "hbac/protocol.hpp"
#include "hbac/kinetics.hpp"
#include "hbac/fit.hpp"
#include "hbac/coherent.hpp"
#include "hbac/harness.hpp"
