#pragma once

#include "orthokalman/covariance.hpp"
#include "orthokalman/errors.hpp"
#include "orthokalman/kalman.hpp"
#include "orthokalman/matrix.hpp"
#include "orthokalman/model.hpp"
#include "orthokalman/oracle.hpp"
#include "orthokalman/random.hpp"
#include "orthokalman/scenario_io.hpp"
#include "orthokalman/scenarios.hpp"
