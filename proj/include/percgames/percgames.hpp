#pragma once

#include "percgames/duration.hpp"
#include "percgames/engine.hpp"
#include "percgames/errors.hpp"
#include "percgames/fixedpoint.hpp"
#include "percgames/offspring.hpp"
#include "percgames/phase.hpp"
#include "percgames/pta.hpp"
#include "percgames/random.hpp"
#include "percgames/version.hpp"
