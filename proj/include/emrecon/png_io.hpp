#pragma once

#include <filesystem>
#include <vector>

#include "emrecon/field.hpp"

namespace emrecon {

/// 8-bit grayscale PNG of a 2D field (or one z-slice of a 3D field), values
/// mapped linearly from [lo, hi] to [0, 255].
void write_field_png(const std::filesystem::path& path, const ScalarField& f, double lo = 0.0,
                     double hi = 1.0, int z_slice = 0);

/// Minimal line plot of y(x) as a grayscale PNG (for error/training curves).
void write_curve_png(const std::filesystem::path& path, const std::vector<double>& xs,
                     const std::vector<double>& ys, int width = 480, int height = 320);

}  // namespace emrecon
