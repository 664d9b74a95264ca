#pragma once

#include "ccd/errors.hpp"
#include "ccd/core_model.hpp"
#include "ccd/geometry.hpp"
#include "ccd/lateral_detector.hpp"
#include "ccd/longitudinal_detector.hpp"
#include "ccd/fusion_response.hpp"
#include "ccd/run_log.hpp"
#include "ccd/sim_harness.hpp"
#include "ccd/scenario_file.hpp"
#include "ccd/bundled_scenarios.hpp"
#include "ccd/replay.hpp"
