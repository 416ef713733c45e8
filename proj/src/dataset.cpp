#include "emrecon/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "emrecon/container.hpp"
#include "emrecon/json_io.hpp"
#include "emrecon/resize.hpp"

namespace emrecon {

std::string AugOp::describe() const {
    if (identity()) return "id";
    std::string s;
    if (quarter_turns) s += "rot" + std::to_string(90 * quarter_turns);
    const char* names[3] = {"flip_h", "flip_v", "flip_z"};
    for (int a = 0; a < 3; ++a)
        if (flip[a]) {
            if (!s.empty()) s += "+";
            s += names[a];
        }
    return s;
}

void DatasetSpec::validate() const {
    if (runs.empty()) throw std::invalid_argument("DatasetSpec: no runs");
    if (std::find(runs.begin(), runs.end(), heldout_run) == runs.end())
        throw std::invalid_argument("DatasetSpec: heldout_run must be one of the runs");
    if (n_T < 1 || n_T > 3) throw std::invalid_argument("DatasetSpec: n_T must be in {1,2,3}");
    if (variant == DispVariant::u_r_star && n_T < 2)
        throw std::invalid_argument("DatasetSpec: u_r_star needs n_T >= 2");
    if (noisy_fraction < 0 || noisy_fraction > 1)
        throw std::invalid_argument("DatasetSpec: noisy_fraction must be in [0,1]");
    for (double xi : noise_levels)
        if (xi < 0) throw std::invalid_argument("DatasetSpec: noise levels must be >= 0");
    if (T_max <= 0) throw std::invalid_argument("DatasetSpec: T_max must be > 0");
    if ((resize_nx == 0) != (resize_ny == 0))
        throw std::invalid_argument("DatasetSpec: resize dims must both be set or both zero");
}

ScalarField flip_field(const ScalarField& f, int axis) {
    const GridShape& g = f.shape;
    if (axis < 0 || axis >= g.ndim()) throw std::invalid_argument("flip_field: bad axis");
    ScalarField out(g);
    const int nx = g.nx(), ny = g.ny(), nz = g.ndim() == 3 ? g.nz() : 1;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int sx = axis == 0 ? nx - 1 - x : x;
                const int sy = axis == 1 ? ny - 1 - y : y;
                const int sz = axis == 2 ? nz - 1 - z : z;
                out.values[g.index(x, y, z)] = f.values[g.index(sx, sy, sz)];
            }
    return out;
}

DisplacementField flip_field(const DisplacementField& f, int axis) {
    const GridShape& g = f.shape;
    if (axis < 0 || axis >= g.ndim()) throw std::invalid_argument("flip_field: bad axis");
    DisplacementField out(g);
    const int nx = g.nx(), ny = g.ny(), nz = g.ndim() == 3 ? g.nz() : 1;
    const int ndim = g.ndim();
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int sx = axis == 0 ? nx - 1 - x : x;
                const int sy = axis == 1 ? ny - 1 - y : y;
                const int sz = axis == 2 ? nz - 1 - z : z;
                const std::size_t src = g.index(sx, sy, sz) * ndim;
                const std::size_t dst = g.index(x, y, z) * ndim;
                for (int c = 0; c < ndim; ++c)
                    out.vectors[dst + c] = (c == axis ? -1.0 : 1.0) * f.vectors[src + c];
            }
    return out;
}

ScalarField rot90_field(const ScalarField& f) {
    if (f.shape.ndim() != 2) throw std::invalid_argument("rot90_field: 2D only");
    const int nx = f.shape.nx(), ny = f.shape.ny();
    ScalarField out(GridShape(ny, nx, f.shape.spacing));
    for (int y = 0; y < nx; ++y)
        for (int x = 0; x < ny; ++x)
            out.at(x, y) = f.at(y, ny - 1 - x);
    return out;
}

DisplacementField rot90_field(const DisplacementField& f) {
    if (f.shape.ndim() != 2) throw std::invalid_argument("rot90_field: 2D only");
    const int nx = f.shape.nx(), ny = f.shape.ny();
    DisplacementField out(GridShape(ny, nx, f.shape.spacing));
    for (int y = 0; y < nx; ++y)
        for (int x = 0; x < ny; ++x) {
            const double ux = f.comp(y, ny - 1 - x, 0);
            const double uy = f.comp(y, ny - 1 - x, 1);
            out.comp(x, y, 0) = -uy;
            out.comp(x, y, 1) = ux;
        }
    return out;
}

Sample augment(const Sample& s, const AugOp& op) {
    const int ndim = s.target.shape.ndim();
    if (op.quarter_turns != 0 && ndim != 2)
        throw std::invalid_argument("augment: quarter turns are 2D only");
    if (ndim == 2 && op.flip[2]) throw std::invalid_argument("augment: flip_z is 3D only");

    Sample out = s;
    for (int q = 0; q < ((op.quarter_turns % 4) + 4) % 4; ++q) {
        out.target = rot90_field(out.target);
        for (auto& f : out.inputs) f = rot90_field(f);
    }
    for (int a = 0; a < 3; ++a)
        if (op.flip[a]) {
            out.target = flip_field(out.target, a);
            for (auto& f : out.inputs) f = flip_field(f, a);
        }
    out.prov.aug_op = op.describe();
    return out;
}

Sample add_noise(const Sample& s, double xi, Rng& rng) {
    if (xi < 0) throw std::invalid_argument("add_noise: xi must be >= 0");
    Sample out = s;
    if (xi > 0)
        for (auto& f : out.inputs)
            for (auto& v : f.vectors) v += rng.gaussian(0.0, xi);
    out.prov.noise_xi = xi;
    return out;
}

namespace {

ScalarField clamp01(ScalarField f) {
    for (auto& v : f.values) v = std::clamp(v, 0.0, 1.0);
    return f;
}

/// Base (unaugmented) samples of one run. Frames must carry the needed fields.
std::vector<Sample> run_base_samples(const DatasetSpec& spec, const FrameSequence& frames,
                                     const std::string& run_id) {
    const int n_T = spec.n_T;
    const char* disp_field =
        spec.variant == DispVariant::u_i ? frame_field::ui : frame_field::ur;
    const char* target_field =
        spec.target == TargetKind::excitation ? frame_field::u : frame_field::Ta;

    // ui of the very first frame has no predecessor; skip windows touching it.
    const int lo = spec.variant == DispVariant::u_i ? n_T : n_T - 1;

    std::vector<Sample> out;
    for (std::size_t t = static_cast<std::size_t>(lo); t < frames.size(); ++t) {
        Sample s;
        s.prov.run_id = run_id;
        s.prov.frame_index = static_cast<int>(t);

        std::vector<DisplacementField> window;
        for (int j = n_T - 1; j >= 0; --j)
            window.push_back(
                std::get<DisplacementField>(frames.frames[t - j].fields.at(disp_field)));

        if (spec.variant == DispVariant::u_r_star) {
            // Re-reference to the first frame of the window; the reference
            // frame itself (identically zero) is dropped.
            for (std::size_t j = 1; j < window.size(); ++j) {
                DisplacementField d = window[j];
                for (std::size_t i = 0; i < d.vectors.size(); ++i)
                    d.vectors[i] -= window[0].vectors[i];
                s.inputs.push_back(std::move(d));
            }
        } else {
            s.inputs = std::move(window);
        }

        ScalarField target = std::get<ScalarField>(frames.frames[t].fields.at(target_field));
        if (spec.target == TargetKind::active_stress) target = normalize_Ta(target, spec.T_max);
        s.target = clamp01(std::move(target));

        if (spec.resize_nx > 0 && s.target.shape.ndim() == 2) {
            s.target = resize_bilinear(s.target, spec.resize_nx, spec.resize_ny);
            for (auto& f : s.inputs) f = resize_bilinear(f, spec.resize_nx, spec.resize_ny);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<AugOp> dihedral_ops(int ndim) {
    std::vector<AugOp> ops;
    if (ndim == 2) {
        for (int q = 0; q < 4; ++q)
            for (int fh = 0; fh < 2; ++fh) {
                AugOp op;
                op.quarter_turns = q;
                op.flip[0] = fh;
                ops.push_back(op);
            }
    } else {
        for (int fx = 0; fx < 2; ++fx)
            for (int fy = 0; fy < 2; ++fy)
                for (int fz = 0; fz < 2; ++fz) {
                    AugOp op;
                    op.flip = {fx != 0, fy != 0, fz != 0};
                    ops.push_back(op);
                }
    }
    return ops;
}

}  // namespace

Dataset assemble(const DatasetSpec& spec, const std::filesystem::path& root) {
    spec.validate();
    Dataset ds;
    ds.spec = spec;

    const char* disp_field =
        spec.variant == DispVariant::u_i ? frame_field::ui : frame_field::ur;
    const char* target_field =
        spec.target == TargetKind::excitation ? frame_field::u : frame_field::Ta;
    const std::vector<std::string> wanted = {disp_field, target_field};

    // Pool bookkeeping without loading frames: frame counts from manifests.
    struct RunInfo {
        std::string id;
        std::filesystem::path dir;
        int frames = 0;
        int base_samples = 0;
        int ndim = 2;
    };
    std::vector<RunInfo> train_runs;
    const int lo = spec.variant == DispVariant::u_i ? spec.n_T : spec.n_T - 1;
    for (const std::string& r : spec.runs) {
        if (r == spec.heldout_run) continue;
        RunInfo info;
        info.id = r;
        info.dir = root / r;
        const json manifest = load_json_file(info.dir / "manifest.json");
        info.frames = manifest.at("frames").get<int>();
        info.ndim = static_cast<int>(manifest.at("grid").at("dims").size());
        info.base_samples = std::max(0, info.frames - lo);
        train_runs.push_back(info);
    }
    if (train_runs.empty()) throw std::invalid_argument("assemble: no training runs");

    const int ndim = train_runs.front().ndim;
    const std::vector<AugOp> ops =
        spec.augment ? dihedral_ops(ndim) : std::vector<AugOp>{AugOp{}};

    // Global pool index: (run, window, op). Selection is a seeded partial
    // shuffle so the draw is uniform without replacement.
    std::size_t pool = 0;
    for (const RunInfo& r : train_runs) pool += static_cast<std::size_t>(r.base_samples) * ops.size();
    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.split_seed);
    const std::size_t want = spec.train_count > 0 ? std::min(spec.train_count, pool) : pool;
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
    }
    order.resize(want);
    std::sort(order.begin(), order.end());  // per-run contiguous materialization

    // Noise decisions, fixed before materialization for reproducibility.
    std::vector<double> xi_of(want, 0.0);
    if (!spec.noise_levels.empty()) {
        Rng noise_rng = rng.fork(0x6e6f6973ULL);
        for (std::size_t i = 0; i < want; ++i)
            if (noise_rng.uniform() < spec.noisy_fraction)
                xi_of[i] = spec.noise_levels[noise_rng.below(spec.noise_levels.size())];
    }
    Rng sample_noise_rng = rng.fork(0x616464ULL);

    std::size_t cursor = 0;
    std::size_t run_offset = 0;
    for (const RunInfo& r : train_runs) {
        const std::size_t run_pool = static_cast<std::size_t>(r.base_samples) * ops.size();
        const std::size_t run_end = run_offset + run_pool;
        if (cursor < order.size() && order[cursor] < run_end) {
            const FrameSequence frames = load_run_frames(r.dir, wanted);
            const std::vector<Sample> base = run_base_samples(spec, frames, r.id);
            for (; cursor < order.size() && order[cursor] < run_end; ++cursor) {
                const std::size_t local = order[cursor] - run_offset;
                const std::size_t b = local / ops.size();
                const AugOp& op = ops[local % ops.size()];
                Sample s = op.identity() ? base[b] : augment(base[b], op);
                if (xi_of[cursor] > 0) s = add_noise(s, xi_of[cursor], sample_noise_rng);
                ds.train.push_back(std::move(s));
            }
        }
        run_offset = run_end;
    }

    const FrameSequence heldout_frames = load_run_frames(root / spec.heldout_run, wanted);
    ds.heldout = run_base_samples(spec, heldout_frames, spec.heldout_run);
    return ds;
}

nn::SampleSet to_sample_set(const std::vector<Sample>& samples) {
    nn::SampleSet set;
    if (samples.empty()) return set;
    const GridShape& g = samples.front().target.shape;
    const int ndim = g.ndim();
    set.channels = samples.front().channels();
    set.sp = g.dims;
    const std::size_t vox = g.cell_count();

    for (const Sample& s : samples) {
        if (s.target.shape != g || s.channels() != set.channels)
            throw std::invalid_argument("to_sample_set: inhomogeneous samples");
        nn::TensorSample ts;
        ts.input.resize(static_cast<std::size_t>(set.channels) * vox);
        for (std::size_t f = 0; f < s.inputs.size(); ++f)
            for (int c = 0; c < ndim; ++c) {
                float* dst = ts.input.data() + (f * ndim + c) * vox;
                const double* src = s.inputs[f].vectors.data();
                for (std::size_t i = 0; i < vox; ++i)
                    dst[i] = static_cast<float>(src[i * ndim + c]);
            }
        ts.target.resize(vox);
        for (std::size_t i = 0; i < vox; ++i)
            ts.target[i] = static_cast<float>(s.target.values[i]);
        set.samples.push_back(std::move(ts));
    }
    return set;
}

namespace {

json spec_to_json(const DatasetSpec& s) {
    const char* variant = s.variant == DispVariant::u_r    ? "u_r"
                          : s.variant == DispVariant::u_i  ? "u_i"
                                                           : "u_r_star";
    return json{{"runs", s.runs},
                {"heldout_run", s.heldout_run},
                {"n_T", s.n_T},
                {"variant", variant},
                {"target", s.target == TargetKind::excitation ? "excitation" : "active_stress"},
                {"augment", s.augment},
                {"noise_levels", s.noise_levels},
                {"noisy_fraction", s.noisy_fraction},
                {"split_seed", s.split_seed},
                {"resize", {s.resize_nx, s.resize_ny}},
                {"train_count", s.train_count},
                {"T_max", s.T_max}};
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    json index;
    index["spec"] = spec_to_json(ds.spec);
    auto dump = [&](const std::vector<Sample>& samples, const std::string& stem, json& list) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            char name[48];
            std::snprintf(name, sizeof(name), "%s_%06zu.emec", stem.c_str(), i);
            const Sample& s = samples[i];
            std::map<std::string, FieldVariant> fields;
            for (std::size_t f = 0; f < s.inputs.size(); ++f)
                fields.emplace("in" + std::to_string(f), s.inputs[f]);
            fields.emplace("target", s.target);
            write_container(dir / name, fields,
                            {{"run", s.prov.run_id},
                             {"frame", std::to_string(s.prov.frame_index)},
                             {"aug", s.prov.aug_op},
                             {"xi", std::to_string(s.prov.noise_xi)}});
            list.push_back(name);
        }
    };
    index["train"] = json::array();
    index["heldout"] = json::array();
    dump(ds.train, "train", index["train"]);
    dump(ds.heldout, "heldout", index["heldout"]);
    save_json_file(dir / "dataset.json", index);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const json index = load_json_file(dir / "dataset.json");
    Dataset ds;
    const json& sj = index.at("spec");
    sj.at("runs").get_to(ds.spec.runs);
    sj.at("heldout_run").get_to(ds.spec.heldout_run);
    ds.spec.n_T = sj.at("n_T").get<int>();
    const std::string variant = sj.at("variant").get<std::string>();
    ds.spec.variant = variant == "u_r"      ? DispVariant::u_r
                      : variant == "u_i"    ? DispVariant::u_i
                                            : DispVariant::u_r_star;
    ds.spec.target = sj.at("target").get<std::string>() == "excitation"
                         ? TargetKind::excitation
                         : TargetKind::active_stress;
    sj.at("augment").get_to(ds.spec.augment);
    sj.at("noise_levels").get_to(ds.spec.noise_levels);
    sj.at("noisy_fraction").get_to(ds.spec.noisy_fraction);
    sj.at("split_seed").get_to(ds.spec.split_seed);
    ds.spec.resize_nx = sj.at("resize")[0].get<int>();
    ds.spec.resize_ny = sj.at("resize")[1].get<int>();
    sj.at("train_count").get_to(ds.spec.train_count);
    sj.at("T_max").get_to(ds.spec.T_max);

    auto slurp = [&](const json& list, std::vector<Sample>& out) {
        for (const auto& name : list) {
            Container c = read_container(dir / name.get<std::string>());
            Sample s;
            for (int f = 0;; ++f) {
                auto it = c.fields.find("in" + std::to_string(f));
                if (it == c.fields.end()) break;
                s.inputs.push_back(std::get<DisplacementField>(it->second));
            }
            s.target = std::get<ScalarField>(c.fields.at("target"));
            s.prov.run_id = c.metadata["run"];
            s.prov.frame_index = std::stoi(c.metadata["frame"]);
            s.prov.aug_op = c.metadata["aug"];
            s.prov.noise_xi = std::stod(c.metadata["xi"]);
            out.push_back(std::move(s));
        }
    };
    slurp(index.at("train"), ds.train);
    slurp(index.at("heldout"), ds.heldout);
    return ds;
}

}  // namespace emrecon
