#pragma once

#include "cqnn/core.hpp"
#include "cqnn/dataio.hpp"
#include "cqnn/model.hpp"
#include "cqnn/oracle.hpp"
#include "cqnn/regressor.hpp"
#include "cqnn/solver.hpp"
#include "cqnn/verify.hpp"
