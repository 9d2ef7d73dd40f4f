#pragma once

#include "chronodil/clocks.hpp"
#include "chronodil/config.hpp"
#include "chronodil/constants.hpp"
#include "chronodil/csv.hpp"
#include "chronodil/dilation.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/kinematics.hpp"
#include "chronodil/linalg.hpp"
#include "chronodil/measurement.hpp"
#include "chronodil/oracle.hpp"
#include "chronodil/precision.hpp"
#include "chronodil/run.hpp"
