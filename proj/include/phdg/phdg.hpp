#pragma once

// Umbrella header for the phdg library.

#include "phdg/discrete_gradient.hpp"
#include "phdg/experiments.hpp"
#include "phdg/integrators.hpp"
#include "phdg/io.hpp"
#include "phdg/models.hpp"
#include "phdg/newton.hpp"
#include "phdg/structure.hpp"
#include "phdg/system.hpp"
