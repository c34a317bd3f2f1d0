#pragma once

#include "sles/error.hpp"
#include "sles/spectral.hpp"
#include "sles/memory_solver.hpp"
#include "sles/filtering.hpp"
#include "sles/random.hpp"
#include "sles/fbm.hpp"
#include "sles/calibration.hpp"
#include "sles/sles_runner.hpp"
#include "sles/config.hpp"
#include "sles/io.hpp"
#include "sles/pipeline.hpp"
