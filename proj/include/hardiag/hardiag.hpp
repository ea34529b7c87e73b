#pragma once

#include "hardiag/checks.hpp"
#include "hardiag/covmodel.hpp"
#include "hardiag/design.hpp"
#include "hardiag/diagnostics.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/estimators.hpp"
#include "hardiag/io.hpp"
#include "hardiag/linalg.hpp"
#include "hardiag/montecarlo.hpp"
#include "hardiag/quadform.hpp"
#include "hardiag/quadrature.hpp"
#include "hardiag/teststat.hpp"
