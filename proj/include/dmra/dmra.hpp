#pragma once

#include "dmra/bench.hpp"
#include "dmra/dataset_io.hpp"
#include "dmra/error.hpp"
#include "dmra/estimators.hpp"
#include "dmra/group.hpp"
#include "dmra/inversion.hpp"
#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"
