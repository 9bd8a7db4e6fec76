#pragma once

#include "bcs/baselines.hpp"
#include "bcs/bench.hpp"
#include "bcs/conic.hpp"
#include "bcs/evaluation.hpp"
#include "bcs/instance.hpp"
#include "bcs/relaxation.hpp"
