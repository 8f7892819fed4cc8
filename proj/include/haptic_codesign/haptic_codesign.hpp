#pragma once

#include "haptic_codesign/units.hpp"
#include "haptic_codesign/special_functions.hpp"
#include "haptic_codesign/comm_model.hpp"
#include "haptic_codesign/tradeoff_table.hpp"
#include "haptic_codesign/reliability.hpp"
#include "haptic_codesign/prediction.hpp"
#include "haptic_codesign/optimizer.hpp"
#include "haptic_codesign/simulator.hpp"
#include "haptic_codesign/presets.hpp"
