#pragma once

#include "ddc/error.hpp"
#include "ddc/numerics.hpp"
#include "ddc/behavior.hpp"
#include "ddc/analysis.hpp"
#include "ddc/synthesis.hpp"
#include "ddc/plant.hpp"
#include "ddc/io.hpp"
#include "ddc/pipeline.hpp"
