#pragma once

#include "dmra/em.hpp"
#include "dmra/estimate_result.hpp"
#include "dmra/mom.hpp"
#include "dmra/sync.hpp"
