#pragma once

#include "cardopt/models/bounds.hpp"
#include "cardopt/models/covering.hpp"
#include "cardopt/models/exact.hpp"
#include "cardopt/models/milp.hpp"
#include "cardopt/models/portfolio.hpp"
#include "cardopt/models/restricted.hpp"
#include "cardopt/models/support_bnb.hpp"
