#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "emrecon/electro.hpp"
#include "emrecon/field.hpp"

namespace emrecon {

class MechBlowupError : public SimDivergenceError {
public:
    using SimDivergenceError::SimDivergenceError;
};

/// Per-cell preferred contraction axis. uniform2d aligns every cell with one
/// angle (degrees, counter-clockwise from +x); sheet_stack3d rotates the
/// in-plane angle linearly across z-layers by total_rotation degrees.
struct FiberConfig {
    enum class Mode { uniform2d, sheet_stack3d };
    Mode mode = Mode::uniform2d;
    double angle_deg = 0.0;
    double total_rotation_deg = 90.0;
};

struct MechParams {
    double k_edge = 1.0;    // passive edge spring stiffness
    double k_center = 1.0;  // center spring stiffness
    double gamma = 0.5;     // velocity damping coefficient
    double mass = 1.0;      // per particle
    double c_act = 0.3;     // active-contraction gain T_a -> rest-length reduction
    double dt = 0.05;
    double max_contraction = 0.4;

    void validate() const;
};

/// Center-spring endpoint: weighted blend of up to 4 particles on a cell face
/// or edge. Weights are fixed in material coordinates.
struct Attachment {
    int idx[4] = {0, 0, 0, 0};
    double w[4] = {0, 0, 0, 0};
    int count = 0;
};

struct EdgeSpring {
    int a = 0, b = 0;
    double rest_len = 1.0;
};

struct CenterSpring {
    Attachment p0, p1;
    double rest_len = 1.0;
    int cell = 0;
    bool active = false;  // the fiber-aligned spring contracts with T_a
};

enum class DispReference { Chi0, PreviousFrame, FrameT };

struct MechState {
    GridShape cells;                // cell grid (matches the electrics grid)
    std::vector<double> pos;        // particle positions, ndim interleaved
    std::vector<double> prev;       // Verlet history
    std::vector<double> rest;       // reference configuration chi0
    std::vector<EdgeSpring> edges;
    std::vector<CenterSpring> centers;
    std::vector<double> fiber;      // per-cell unit vector, ndim interleaved
    std::vector<double> rest_measure;  // per cell: rest area (2D) / fiber rest length (3D)

    // Retained frame history for displacement references.
    std::deque<std::pair<int, std::vector<double>>> history;
    std::size_t history_limit = 4;

    // Derived data and reusable work buffers (built once, not part of the state).
    std::vector<int> adj_offsets;                    // CSR particle -> incident springs
    std::vector<std::pair<int, double>> adjacency;   // (spring slot, signed weight)
    std::vector<double> spring_force;                // per spring, ndim interleaved
    std::vector<double> scratch_pos;

    int ndim() const { return cells.ndim(); }
    std::size_t particle_count() const { return pos.size() / cells.ndim(); }
    int particles_x() const { return cells.nx() + 1; }
    int particles_y() const { return cells.ny() + 1; }
    int particles_z() const { return ndim() == 3 ? cells.nz() + 1 : 1; }
    std::size_t particle_index(int x, int y, int z = 0) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(particles_x()) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(particles_y()) * z);
    }

    void record_frame(int time_index);
};

/// Build a resting lattice: positions = prev = chi0, edge springs on all
/// lattice edges, ndim center springs per cell (one active along the fiber).
MechState build_lattice(const GridShape& cells, const FiberConfig& fibers,
                        const MechParams& params);

/// One position-Verlet step driven by normalized active stress on the cell
/// grid. Net linear momentum is removed each step by recentering the center
/// of mass at its rest location. Throws MechBlowupError on degenerate cells.
void mech_step(MechState& state, const ScalarField& Ta_norm, const MechParams& params);

/// Per-cell deformation measure: 2D shoelace area over rest area; 3D squared
/// stretch ratio along the cell fiber. Throws MechBlowupError on degenerate
/// cells.
ScalarField cell_area_ratio(const MechState& state);

/// Subtract the center-of-mass drift so the mean position matches chi0's.
void remove_net_translation(MechState& state);

/// Displacement of each cell center against the chosen reference, sampled on
/// the material lattice (mean of the cell's corner particles).
DisplacementField displacements(const MechState& state, DispReference ref, int frame_index = -1);

/// In-plane rotation of the lattice about its centroid relative to chi0
/// (degrees); used to flag runs that accumulate net rotation.
double net_rotation_deg(const MechState& state);

/// Elastic + kinetic energy; velocities from backward differences. Active
/// rest lengths use Ta_norm when given.
double mech_energy(const MechState& state, const MechParams& params,
                   const ScalarField* Ta_norm = nullptr);

}  // namespace emrecon
