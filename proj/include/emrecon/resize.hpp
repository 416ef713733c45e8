#pragma once

#include "emrecon/field.hpp"

namespace emrecon {

/// Bilinear resample of a 2D scalar field onto new dims. Values are treated as
/// node samples with the grid endpoints aligned, so a constant field stays
/// constant and output values stay inside the input min/max envelope.
ScalarField resize_bilinear(const ScalarField& in, int new_nx, int new_ny);

/// Same resampling for a 2D vector field; components are additionally scaled
/// by (new_dim/old_dim) per axis so displacements remain in units of the new
/// grid's cells.
DisplacementField resize_bilinear(const DisplacementField& in, int new_nx, int new_ny);

}  // namespace emrecon
