#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emrecon/electro.hpp"
#include "emrecon/mech.hpp"

namespace emrecon {

/// Stimulation protocol producing the simulated regimes: traveling plane
/// waves, S1-S2 cross-field spirals, multi-spiral chaos, spherical 3D waves
/// and scroll break-up.
struct Protocol {
    enum class Kind { plane_wave, s1s2_spiral, multi_spiral, spherical_3d, scroll_breakup };
    Kind kind = Kind::plane_wave;

    int s1_width = 5;              // S1 slab thickness in cells (x direction)
    int s2_step = 0;               // S2 delivery step for s1s2_spiral
    double s2_frac_x = 0.5;        // S2 block covers [0, fx*nx) x [0, fy*ny)
    double s2_frac_y = 0.5;
    int n_stimuli = 3;             // extra random stimuli (multi_spiral / scroll_breakup)
    int stim_window_lo = 0;        // random stimulus timing window in steps
    int stim_window_hi = 0;
    double stim_radius_frac = 0.15;  // ball radius / block half-size as fraction of min dim
    std::uint64_t seed = 1;

    void validate(const GridShape& grid) const;
};

struct RunConfig {
    std::string name = "run";
    GridShape grid{64, 64};
    ElectroParams electro;
    MechParams mech;
    FiberConfig fiber;
    Protocol protocol;
    long total_steps = 10000;
    int frame_interval = 50;  // simulation steps per saved frame
    std::uint64_t seed = 1;

    void validate() const;
};

struct RunResult {
    std::filesystem::path dir;
    int frames_written = 0;
    double max_rotation_deg = 0.0;
    bool rotation_flagged = false;
};

/// Names of the per-frame fields written by run().
namespace frame_field {
inline constexpr const char* u = "u";
inline constexpr const char* v = "v";
inline constexpr const char* Ta = "Ta";
inline constexpr const char* A = "A";
inline constexpr const char* ur = "ur";
inline constexpr const char* ui = "ui";
}  // namespace frame_field

/// Coupled electromechanical run: alternating electro and mechanics steps,
/// frames written every frame_interval steps as frame_%06d.emec plus
/// manifest.json and fibers.emec. Aborts with the failing step recorded in
/// the manifest if the integrator diverges.
RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// One run per G_s value (values must lie within [0, 2]), otherwise identical
/// configs and seeds. Returns the run directories.
std::vector<std::filesystem::path> sweep_Gs(const RunConfig& base, const std::vector<double>& values,
                                            const std::filesystem::path& out_root);

std::filesystem::path frame_path(const std::filesystem::path& run_dir, int frame_number);

/// Load the frames of a run directory (optionally restricted to named fields).
FrameSequence load_run_frames(const std::filesystem::path& run_dir,
                              const std::vector<std::string>& fields = {});

}  // namespace emrecon
