#pragma once
// Everything at once.

#include "tfdw/cartesian.hpp"
#include "tfdw/cartesian_model.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/curves.hpp"
#include "tfdw/descent.hpp"
#include "tfdw/diagnostics.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/functional.hpp"
#include "tfdw/io.hpp"
#include "tfdw/minimize.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"
#include "tfdw/radial_grid.hpp"
#include "tfdw/radial_model.hpp"
