#pragma once

// Umbrella header.

#include "cimsim/adc.hpp"
#include "cimsim/crossbar.hpp"
#include "cimsim/dataset.hpp"
#include "cimsim/encoding.hpp"
#include "cimsim/energy.hpp"
#include "cimsim/error.hpp"
#include "cimsim/format.hpp"
#include "cimsim/inference.hpp"
#include "cimsim/lowering.hpp"
#include "cimsim/matrix.hpp"
#include "cimsim/model.hpp"
#include "cimsim/model_gen.hpp"
#include "cimsim/random.hpp"
#include "cimsim/runner.hpp"
#include "cimsim/simulator.hpp"
#include "cimsim/svg.hpp"
#include "cimsim/technology.hpp"
