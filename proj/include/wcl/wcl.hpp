#pragma once

#include "wcl/analysis.hpp"
#include "wcl/domain.hpp"
#include "wcl/errors.hpp"
#include "wcl/generators.hpp"
#include "wcl/io.hpp"
#include "wcl/kernels.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/propagate.hpp"
#include "wcl/quadrature.hpp"
#include "wcl/rng.hpp"
#include "wcl/threads.hpp"
