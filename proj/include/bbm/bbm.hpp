#pragma once

#include "bbm/atoms.hpp"
#include "bbm/distance.hpp"
#include "bbm/errors.hpp"
#include "bbm/family.hpp"
#include "bbm/generators.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"
#include "bbm/mollifier.hpp"
#include "bbm/oscillation.hpp"
#include "bbm/parallel.hpp"
#include "bbm/selection.hpp"
