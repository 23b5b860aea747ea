#ifndef WAAM_WAAM_HPP
#define WAAM_WAAM_HPP

#include "waam/cli.hpp"
#include "waam/correction_controller.hpp"
#include "waam/deposition_model.hpp"
#include "waam/error.hpp"
#include "waam/experiment_harness.hpp"
#include "waam/layer_planner.hpp"
#include "waam/plant_simulator.hpp"
#include "waam/results_io.hpp"
#include "waam/run_config.hpp"
#include "waam/velocity_profile.hpp"

#endif // WAAM_WAAM_HPP
