#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "emrecon/field.hpp"

namespace emrecon {

/// Reconstruction error statistics: per-frame mean absolute error, the
/// dataset mean, the spread across frame means, the spread across all pooled
/// absolute differences, and accuracy = 100*(1 - mean).
struct ErrorReport {
    std::vector<double> per_frame_mae;
    double mean_mae = 0.0;
    double sigma_frames = 0.0;
    double sigma_pooled = 0.0;
    double accuracy = 0.0;
};

ErrorReport error_report(const std::vector<ScalarField>& recon,
                         const std::vector<ScalarField>& truth);

/// Analytic signal of a real series via the frequency-domain Hilbert
/// transform (temporal mean removed first). Throws if the series is shorter
/// than min_len or has (numerically) zero amplitude.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& series);
std::vector<double> hilbert_phase(const std::vector<double>& series, int min_len = 64);

/// Per-cell Hilbert phase of a frame stack. Cells whose series has zero
/// amplitude are marked invalid (phase 0, valid 0). Frames must share shape.
struct PhaseStack {
    std::vector<ScalarField> phase;  // one field per frame, values in (-pi, pi]
    ScalarField valid;               // 1 = usable phase series
};
PhaseStack hilbert_phase_fields(const std::vector<ScalarField>& u_frames, int min_len = 64);

struct FilamentPoint {
    double x = 0, y = 0, z = 0;
    int chirality = 0;  // sign of the phase winding
};

/// Phase singularities (2D) or voxelized filament points (3D), per frame.
struct FilamentSet {
    GridShape shape;
    std::vector<std::vector<FilamentPoint>> per_frame;
};

/// 2D: plaquettes whose wrapped phase differences wind by +-2pi. The mask
/// (if given) suppresses plaquettes touching invalid cells.
std::vector<FilamentPoint> phase_singularities_frame(const ScalarField& phase,
                                                     const ScalarField* valid = nullptr);
FilamentSet phase_singularities(const PhaseStack& stack);

/// 3D: 2D detection on every x-y, x-z and y-z slice, merged into a voxel
/// point set per frame.
FilamentSet filaments_3d(const PhaseStack& stack);

struct FilamentDistance {
    double mean = 0.0;       // symmetrized mean nearest-neighbor distance (voxels)
    int frames_used = 0;     // frames where both sets are non-empty
    int frames_excluded = 0; // frames where exactly one set is empty
    bool empty = false;      // every compared frame had both sets empty
};

/// Symmetrized mean nearest-neighbor distance between two filament sets.
/// Frames where one side is empty are excluded but counted; both-empty frames
/// contribute distance 0.
FilamentDistance filament_distance(const FilamentSet& truth, const FilamentSet& recon);

/// Number of connected filament components (26-connectivity on voxelized
/// points; 8-connectivity in 2D).
int filament_component_count(const std::vector<FilamentPoint>& points);

}  // namespace emrecon
