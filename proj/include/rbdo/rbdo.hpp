#pragma once

#include "rbdo/benchmarks.hpp"
#include "rbdo/cli.hpp"
#include "rbdo/ga.hpp"
#include "rbdo/kriging.hpp"
#include "rbdo/optimizer.hpp"
#include "rbdo/problem.hpp"
#include "rbdo/proposer.hpp"
#include "rbdo/reliability.hpp"
#include "rbdo/sampling.hpp"
