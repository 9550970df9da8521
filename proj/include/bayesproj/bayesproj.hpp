#pragma once

#include "bayesproj/beta_binomial.hpp"
#include "bayesproj/cooccurrence.hpp"
#include "bayesproj/engine.hpp"
#include "bayesproj/errors.hpp"
#include "bayesproj/experiments.hpp"
#include "bayesproj/filter_bank.hpp"
#include "bayesproj/io.hpp"
#include "bayesproj/parallel.hpp"
#include "bayesproj/snapshot.hpp"
#include "bayesproj/synthgen.hpp"
