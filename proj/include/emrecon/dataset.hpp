#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "emrecon/nn/train.hpp"
#include "emrecon/rng.hpp"
#include "emrecon/scenario.hpp"

namespace emrecon {

enum class DispVariant { u_r, u_i, u_r_star };
enum class TargetKind { excitation, active_stress };

/// Lattice symmetry op: optional quarter-turns (2D only, counter-clockwise)
/// followed by axis flips. Vector components transform with the lattice.
struct AugOp {
    int quarter_turns = 0;           // 0..3, 2D only
    std::array<bool, 3> flip{false, false, false};

    bool identity() const { return quarter_turns == 0 && !flip[0] && !flip[1] && !flip[2]; }
    std::string describe() const;
};

struct Sample {
    std::vector<DisplacementField> inputs;  // temporal frames, oldest first
    ScalarField target;                     // in [0, 1]
    struct Provenance {
        std::string run_id;
        int frame_index = 0;
        std::string aug_op = "id";
        double noise_xi = 0.0;
    } prov;

    int channels() const {
        return static_cast<int>(inputs.size()) * (inputs.empty() ? 0 : inputs[0].shape.ndim());
    }
};

struct DatasetSpec {
    std::vector<std::string> runs;   // run directories, resolved against a root
    std::string heldout_run;         // excluded from training
    int n_T = 3;
    DispVariant variant = DispVariant::u_r;
    TargetKind target = TargetKind::excitation;
    bool augment = true;
    std::vector<double> noise_levels;  // training noise xi options; empty = clean
    double noisy_fraction = 0.5;
    std::uint64_t split_seed = 1;
    int resize_nx = 0, resize_ny = 0;  // 0 = native resolution (3D is always native)
    std::size_t train_count = 0;       // 0 = whole augmented pool
    double T_max = 0.45;

    void validate() const;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> train;
    std::vector<Sample> heldout;
};

/// Axis flip of a scalar/vector field; vector fields negate the flipped
/// component. axis: 0=x, 1=y, 2=z.
ScalarField flip_field(const ScalarField& f, int axis);
DisplacementField flip_field(const DisplacementField& f, int axis);

/// Counter-clockwise quarter turn of a 2D field; vectors map (ux,uy) ->
/// (-uy, ux).
ScalarField rot90_field(const ScalarField& f);
DisplacementField rot90_field(const DisplacementField& f);

Sample augment(const Sample& s, const AugOp& op);

/// I.i.d. Gaussian(0, xi^2) added to every displacement component of every
/// input frame; the target is untouched and xi is recorded in provenance.
Sample add_noise(const Sample& s, double xi, Rng& rng);

/// Deterministic sample assembly from simulation runs: training samples from
/// all runs except the held-out one, held-out samples from that run alone.
Dataset assemble(const DatasetSpec& spec, const std::filesystem::path& root);

/// Channel assembly: frame-major, component-minor (channel = frame*ndim + c).
nn::SampleSet to_sample_set(const std::vector<Sample>& samples);

void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace emrecon
