#include "emrecon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "emrecon/container.hpp"
#include "emrecon/json_io.hpp"
#include "emrecon/rng.hpp"
#include "emrecon/version.hpp"

namespace emrecon {

namespace {

struct Stimulus {
    long step = 0;
    // box [x0,x1) x [y0,y1) x [z0,z1); spherical if radius > 0 (center cx,cy,cz)
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0, z0 = 0, z1 = 1;
    double radius = 0.0;
    double cx = 0, cy = 0, cz = 0;
};

void apply_stimulus(ScalarField& u, const Stimulus& s) {
    const GridShape& g = u.shape;
    const int nz = g.ndim() == 3 ? g.nz() : 1;
    if (s.radius > 0.0) {
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < g.ny(); ++y)
                for (int x = 0; x < g.nx(); ++x) {
                    const double dx = x - s.cx, dy = y - s.cy, dz = z - s.cz;
                    if (dx * dx + dy * dy + dz * dz <= s.radius * s.radius)
                        u.values[g.index(x, y, z)] = 1.0;
                }
        return;
    }
    for (int z = std::max(0, s.z0); z < std::min(nz, s.z1); ++z)
        for (int y = std::max(0, s.y0); y < std::min(g.ny(), s.y1); ++y)
            for (int x = std::max(0, s.x0); x < std::min(g.nx(), s.x1); ++x)
                u.values[g.index(x, y, z)] = 1.0;
}

std::vector<Stimulus> build_schedule(const RunConfig& cfg) {
    const GridShape& g = cfg.grid;
    const Protocol& p = cfg.protocol;
    const int nz = g.ndim() == 3 ? g.nz() : 1;
    std::vector<Stimulus> sched;
    Rng rng(p.seed ^ cfg.seed);

    auto s1_slab = [&](long step) {
        Stimulus s;
        s.step = step;
        s.x1 = p.s1_width;
        s.y1 = g.ny();
        s.z1 = nz;
        return s;
    };
    auto random_block = [&](long step) {
        Stimulus s;
        s.step = step;
        const int half = std::max(2, static_cast<int>(p.stim_radius_frac * std::min(g.nx(), g.ny())));
        const int cx = static_cast<int>(rng.below(g.nx()));
        const int cy = static_cast<int>(rng.below(g.ny()));
        s.x0 = cx - half;
        s.x1 = cx + half;
        s.y0 = cy - half;
        s.y1 = cy + half;
        s.z0 = 0;
        s.z1 = nz;
        return s;
    };

    switch (p.kind) {
        case Protocol::Kind::plane_wave:
            sched.push_back(s1_slab(0));
            break;
        case Protocol::Kind::s1s2_spiral: {
            sched.push_back(s1_slab(0));
            Stimulus s2;
            s2.step = p.s2_step;
            s2.x1 = static_cast<int>(p.s2_frac_x * g.nx());
            s2.y1 = static_cast<int>(p.s2_frac_y * g.ny());
            s2.z1 = nz;
            sched.push_back(s2);
            break;
        }
        case Protocol::Kind::multi_spiral: {
            sched.push_back(s1_slab(0));
            for (int i = 0; i < p.n_stimuli; ++i) {
                const long lo = p.stim_window_lo;
                const long hi = std::max<long>(p.stim_window_hi, lo + 1);
                sched.push_back(random_block(lo + static_cast<long>(rng.below(hi - lo))));
            }
            break;
        }
        case Protocol::Kind::spherical_3d: {
            Stimulus s;
            s.step = 0;
            s.radius = std::max(2.0, p.stim_radius_frac * std::min({g.nx(), g.ny(), nz}));
            s.cx = g.nx() / 2.0;
            s.cy = g.ny() / 2.0;
            s.cz = nz / 2.0;
            sched.push_back(s);
            break;
        }
        case Protocol::Kind::scroll_breakup: {
            sched.push_back(s1_slab(0));
            for (int i = 0; i < p.n_stimuli; ++i) {
                const long lo = p.stim_window_lo;
                const long hi = std::max<long>(p.stim_window_hi, lo + 1);
                sched.push_back(random_block(lo + static_cast<long>(rng.below(hi - lo))));
            }
            break;
        }
    }
    std::stable_sort(sched.begin(), sched.end(),
                     [](const Stimulus& a, const Stimulus& b) { return a.step < b.step; });
    return sched;
}

}  // namespace

void Protocol::validate(const GridShape& grid) const {
    if (s1_width < 1 || s1_width > grid.nx())
        throw std::invalid_argument("Protocol: S1 slab must lie inside the domain");
    if (s2_frac_x < 0 || s2_frac_x > 1 || s2_frac_y < 0 || s2_frac_y > 1)
        throw std::invalid_argument("Protocol: S2 fractions must lie in [0,1]");
    if (s2_step < 0) throw std::invalid_argument("Protocol: s2_step must be >= 0");
    if (stim_window_hi < stim_window_lo)
        throw std::invalid_argument("Protocol: stimulus window must be ordered");
    if (stim_radius_frac <= 0 || stim_radius_frac > 0.5)
        throw std::invalid_argument("Protocol: stim_radius_frac must be in (0, 0.5]");
}

void RunConfig::validate() const {
    grid.validate();
    for (int d : grid.dims)
        if (d < 3) throw std::invalid_argument("RunConfig: simulation grid dims must be >= 3");
    electro.validate(grid.ndim());
    mech.validate();
    protocol.validate(grid);
    if (frame_interval < 1) throw std::invalid_argument("RunConfig: frame_interval must be >= 1");
    if (total_steps < 1) throw std::invalid_argument("RunConfig: total_steps must be >= 1");
}

std::filesystem::path frame_path(const std::filesystem::path& run_dir, int frame_number) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.emec", frame_number);
    return run_dir / buf;
}

RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    MechState mech = build_lattice(cfg.grid, cfg.fiber, cfg.mech);
    mech.history_limit = 2;
    ElectroState state(cfg.grid);
    ElectroState next(cfg.grid);
    const std::vector<Stimulus> schedule = build_schedule(cfg);
    std::size_t next_stim = 0;

    // Fiber field exported once per run.
    {
        DisplacementField fibers(cfg.grid);
        fibers.vectors = mech.fiber;
        write_container(out_dir / "fibers.emec", {{"fibers", fibers}},
                        {{"kind", "fiber_unit_vectors"}});
    }

    RunResult result;
    result.dir = out_dir;

    json manifest = cfg;
    manifest["version"] = kVersion;
    manifest["fields"] = {frame_field::u, frame_field::v, frame_field::Ta,
                          frame_field::A, frame_field::ur, frame_field::ui};

    long step = 0;
    try {
        for (; step < cfg.total_steps; ++step) {
            while (next_stim < schedule.size() && schedule[next_stim].step == step) {
                apply_stimulus(state.u, schedule[next_stim]);
                ++next_stim;
            }

            const ScalarField area = cell_area_ratio(mech);
            electro_step_into(state, area, cfg.electro, next);
            std::swap(state.u.values, next.u.values);
            std::swap(state.v.values, next.v.values);
            std::swap(state.Ta.values, next.Ta.values);

            const ScalarField Ta_norm = normalize_Ta(state.Ta, cfg.electro.T_max);
            mech_step(mech, Ta_norm, cfg.mech);

            if ((step + 1) % cfg.frame_interval == 0) {
                const int t = static_cast<int>(step + 1);
                const DisplacementField ur = displacements(mech, DispReference::Chi0);
                DisplacementField ui(cfg.grid);
                if (!mech.history.empty()) ui = displacements(mech, DispReference::PreviousFrame);
                mech.record_frame(t);

                std::map<std::string, FieldVariant> fields;
                fields.emplace(frame_field::u, state.u);
                fields.emplace(frame_field::v, state.v);
                fields.emplace(frame_field::Ta, state.Ta);
                fields.emplace(frame_field::A, cell_area_ratio(mech));
                fields.emplace(frame_field::ur, ur);
                fields.emplace(frame_field::ui, ui);
                write_container(frame_path(out_dir, result.frames_written),
                                fields, {{"time_step", std::to_string(t)}});
                ++result.frames_written;

                const double rot = std::abs(net_rotation_deg(mech));
                result.max_rotation_deg = std::max(result.max_rotation_deg, rot);
            }
        }
    } catch (const SimDivergenceError& e) {
        manifest["failed"] = true;
        manifest["failure"] = e.what();
        manifest["failed_step"] = step;
        manifest["frames"] = result.frames_written;
        save_json_file(out_dir / "manifest.json", manifest);
        throw;
    }

    result.rotation_flagged = result.max_rotation_deg > 5.0;
    manifest["frames"] = result.frames_written;
    manifest["max_rotation_deg"] = result.max_rotation_deg;
    manifest["rotation_flagged"] = result.rotation_flagged;
    save_json_file(out_dir / "manifest.json", manifest);
    return result;
}

std::vector<std::filesystem::path> sweep_Gs(const RunConfig& base, const std::vector<double>& values,
                                            const std::filesystem::path& out_root) {
    for (double v : values)
        if (v < 0.0 || v > 2.0)
            throw std::invalid_argument("sweep_Gs: values must lie within [0, 2]");
    std::vector<std::filesystem::path> dirs;
    for (double v : values) {
        RunConfig cfg = base;
        cfg.electro.G_s = v;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "gs_%.3f", v);
        cfg.name = base.name + "_" + buf;
        const std::filesystem::path dir = out_root / buf;
        run(cfg, dir);
        dirs.push_back(dir);
    }
    return dirs;
}

FrameSequence load_run_frames(const std::filesystem::path& run_dir,
                              const std::vector<std::string>& fields) {
    FrameSequence seq;
    for (int i = 0;; ++i) {
        const std::filesystem::path p = frame_path(run_dir, i);
        if (!std::filesystem::exists(p)) break;
        Container c = read_container(p);
        FrameSequence::Frame f;
        f.time_index = c.metadata.count("time_step") ? std::stoi(c.metadata["time_step"]) : i;
        if (fields.empty()) {
            f.fields = std::move(c.fields);
        } else {
            for (const std::string& name : fields) {
                auto it = c.fields.find(name);
                if (it == c.fields.end())
                    throw std::runtime_error("load_run_frames: field " + name + " missing in " +
                                             p.string());
                f.fields.emplace(name, std::move(it->second));
            }
        }
        seq.append(std::move(f));
    }
    if (seq.empty()) throw std::runtime_error("load_run_frames: no frames in " + run_dir.string());
    return seq;
}

}  // namespace emrecon
