#pragma once

#include "collatz_lab/bench.hpp"
#include "collatz_lab/census.hpp"
#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/density.hpp"
#include "collatz_lab/log_compare.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"
#include "collatz_lab/rational.hpp"
#include "collatz_lab/step_table.hpp"
#include "collatz_lab/stopping_stats.hpp"
#include "collatz_lab/verification.hpp"
