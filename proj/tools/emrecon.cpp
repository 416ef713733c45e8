#include <CLI11.hpp>

#include <future>
#include <iostream>

#include "emrecon/container.hpp"
#include "emrecon/pipeline.hpp"
#include "emrecon/png_io.hpp"
#include "emrecon/version.hpp"

namespace fs = std::filesystem;
using namespace emrecon;
using emrecon::json;

namespace {

DatasetSpec dataset_spec_from_cli(const json& j) {
    std::vector<std::string> runs = j.at("runs").get<std::vector<std::string>>();
    json copy = j;
    DatasetSpec spec;
    spec.runs = runs;
    spec.heldout_run = copy.at("heldout_run").get<std::string>();
    spec.n_T = copy.value("n_T", 3);
    const std::string variant = copy.value("variant", "u_r");
    spec.variant = variant == "u_r"   ? DispVariant::u_r
                   : variant == "u_i" ? DispVariant::u_i
                                      : DispVariant::u_r_star;
    spec.target = copy.value("target", "excitation") == "excitation"
                      ? TargetKind::excitation
                      : TargetKind::active_stress;
    spec.augment = copy.value("augment", true);
    if (copy.contains("noise_levels")) copy.at("noise_levels").get_to(spec.noise_levels);
    spec.noisy_fraction = copy.value("noisy_fraction", 0.5);
    spec.split_seed = copy.value("split_seed", 1);
    if (copy.contains("resize")) {
        spec.resize_nx = copy.at("resize")[0].get<int>();
        spec.resize_ny = copy.at("resize")[1].get<int>();
    }
    spec.train_count = copy.value("train_count", 0);
    spec.T_max = copy.value("T_max", 0.45);
    return spec;
}

/// Reconstruct a run directory with a trained model; channel assembly comes
/// from the model file's metadata.
json reconstruct_run(const fs::path& model_path, const fs::path& frames_dir,
                     const fs::path& out_dir) {
    nn::Network<float> net = nn::load_model(model_path);
    Container c = read_container(model_path);
    DatasetSpec spec;
    spec.runs = {frames_dir.filename().string()};
    spec.heldout_run = spec.runs[0];
    spec.n_T = std::stoi(c.metadata.at("n_T"));
    const std::string variant = c.metadata.at("variant");
    spec.variant = variant == "u_r"   ? DispVariant::u_r
                   : variant == "u_i" ? DispVariant::u_i
                                      : DispVariant::u_r_star;
    spec.resize_nx = std::stoi(c.metadata.at("resize_nx"));
    spec.resize_ny = std::stoi(c.metadata.at("resize_ny"));
    spec.target = c.metadata.at("target") == "excitation" ? TargetKind::excitation
                                                          : TargetKind::active_stress;
    spec.T_max = std::stod(c.metadata.at("T_max"));
    spec.augment = false;

    Dataset ds = assemble(spec, frames_dir.parent_path());
    pipeline::ReconResult recon = pipeline::reconstruct_samples(net, ds.heldout);

    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < recon.fields.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "recon_%06zu.emec", i);
        write_container(out_dir / name, {{"u", recon.fields[i]}},
                        {{"frame", std::to_string(ds.heldout[i].prov.frame_index)}});
    }
    json report;
    report["frames"] = recon.fields.size();
    report["ms_per_frame"] = recon.ms_per_frame;
    save_json_file(out_dir / "recon.json", report);
    return report;
}

std::vector<ScalarField> load_recon_fields(const fs::path& dir, std::vector<int>& frame_index) {
    std::vector<ScalarField> out;
    for (int i = 0;; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "recon_%06d.emec", i);
        if (!fs::exists(dir / name)) break;
        Container c = read_container(dir / name);
        out.push_back(std::get<ScalarField>(c.fields.at("u")));
        frame_index.push_back(std::stoi(c.metadata.at("frame")));
    }
    if (out.empty()) throw std::runtime_error("no recon frames in " + dir.string());
    return out;
}

json evaluate_dirs(const fs::path& truth_dir, const fs::path& recon_dir, bool with_filaments) {
    std::vector<int> frame_index;
    std::vector<ScalarField> recon = load_recon_fields(recon_dir, frame_index);
    FrameSequence truth_frames = load_run_frames(truth_dir, {frame_field::u});

    std::vector<ScalarField> truth;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        const int t = frame_index[i];
        if (t < 0 || t >= static_cast<int>(truth_frames.size()))
            throw std::runtime_error("recon frame index out of range of truth run");
        ScalarField u = std::get<ScalarField>(truth_frames.frames[t].fields.at(frame_field::u));
        for (auto& v : u.values) v = std::clamp(v, 0.0, 1.0);
        if (u.shape.ndim() == 2 && u.shape != recon[i].shape)
            u = resize_bilinear(u, recon[i].shape.nx(), recon[i].shape.ny());
        truth.push_back(std::move(u));
    }

    const ErrorReport er = error_report(recon, truth);
    json report;
    report["accuracy"] = er.accuracy;
    report["mean_mae"] = er.mean_mae;
    report["sigma_frames"] = er.sigma_frames;
    report["sigma_pooled"] = er.sigma_pooled;
    report["frames"] = er.per_frame_mae.size();
    report["per_frame_mae"] = er.per_frame_mae;

    if (with_filaments && !truth.empty() && truth.front().shape.ndim() == 3) {
        PhaseStack pt = hilbert_phase_fields(truth);
        PhaseStack pr = hilbert_phase_fields(recon);
        const FilamentDistance fd = filament_distance(filaments_3d(pt), filaments_3d(pr));
        report["filament_distance"] = fd.mean;
        report["filament_frames_used"] = fd.frames_used;
        report["filament_frames_excluded"] = fd.frames_excluded;
    }
    return report;
}

json filaments_cmd(const fs::path& run_dir, bool include_points) {
    FrameSequence frames = load_run_frames(run_dir, {frame_field::u});
    std::vector<ScalarField> u;
    for (auto& f : frames.frames)
        u.push_back(std::get<ScalarField>(f.fields.at(frame_field::u)));
    PhaseStack phase = hilbert_phase_fields(u);
    const bool is3d = u.front().shape.ndim() == 3;
    FilamentSet set = is3d ? filaments_3d(phase) : phase_singularities(phase);

    json report;
    report["frames"] = set.per_frame.size();
    report["counts"] = json::array();
    for (const auto& pts : set.per_frame) report["counts"].push_back(pts.size());
    if (include_points) {
        report["points"] = json::array();
        for (const auto& pts : set.per_frame) {
            json frame = json::array();
            for (const auto& p : pts)
                frame.push_back({{"x", p.x}, {"y", p.y}, {"z", p.z}, {"chirality", p.chirality}});
            report["points"].push_back(frame);
        }
    }
    return report;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emrecon: electromechanical simulation and inverse reconstruction"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path, spec_path, out_path, model_name = "mini2d-t", model_path;
    std::string frames_dir, truth_dir, recon_dir, recipe, values_str = "0,0.5,1,1.5,2";
    std::string runs_root = ".", recipes_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, with_filaments = false, include_points = false;
    int epochs = 0, jobs = 1;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Override the configured seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* sim = app.add_subcommand("simulate", "Run a coupled electromechanical simulation");
    sim->add_option("--config", config_path, "RunConfig JSON")->required();
    sim->add_option("--out", out_path, "Output run directory")->required();
    add_seed(sim);

    auto* dat = app.add_subcommand("dataset", "Assemble and store a training dataset");
    dat->add_option("--spec", spec_path, "DatasetSpec JSON")->required();
    dat->add_option("--runs", runs_root, "Directory containing the runs");
    dat->add_option("--out", out_path, "Output dataset directory")->required();

    auto* tr = app.add_subcommand("train", "Train a model on a stored dataset");
    tr->add_option("--dataset", spec_path, "Dataset directory")->required();
    tr->add_option("--model", model_name, "Model name (Table of architectures)");
    tr->add_option("--epochs", epochs, "Training epochs (default per config)");
    tr->add_option("--out", out_path, "Output directory")->required();
    add_seed(tr);

    auto* rc = app.add_subcommand("reconstruct", "Reconstruct excitation from a run's frames");
    rc->add_option("--model", model_path, "Trained model file")->required();
    rc->add_option("--frames", frames_dir, "Run directory with frames")->required();
    rc->add_option("--out", out_path, "Output reconstruction directory")->required();

    auto* ev = app.add_subcommand("evaluate", "Compare a reconstruction against ground truth");
    ev->add_option("--truth", truth_dir, "Ground-truth run directory")->required();
    ev->add_option("--recon", recon_dir, "Reconstruction directory")->required();
    ev->add_option("--out", out_path, "Report JSON path")->required();
    ev->add_flag("--filaments", with_filaments, "Include 3D filament metrics");

    auto* fl = app.add_subcommand("filaments", "Phase singularities / vortex filaments of a run");
    fl->add_option("--run", frames_dir, "Run directory")->required();
    fl->add_option("--out", out_path, "Report JSON path")->required();
    fl->add_flag("--points", include_points, "Include the full point sets");

    auto* sw = app.add_subcommand("sweep", "Sweep mechano-electrical feedback strength G_s");
    sw->add_option("--config", config_path, "Base RunConfig JSON")->required();
    sw->add_option("--values", values_str, "Comma-separated G_s values");
    sw->add_option("--out", out_path, "Output root directory")->required();
    sw->add_option("--jobs", jobs, "Parallel workers");

    auto* rp = app.add_subcommand("repro", "Run a named recipe end to end");
    rp->add_option("--recipe", recipe, "Recipe name or JSON path")->required();
    rp->add_option("--out", out_path, "Output directory")->required();
    rp->add_option("--epochs", epochs, "Override training epochs");
    rp->add_option("--recipes", recipes_dir, "Recipes directory");
    add_seed(rp);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            RunConfig cfg = load_json_file(config_path).get<RunConfig>();
            if (seed_set) cfg.seed = seed;
            const RunResult r = run(cfg, out_path);
            std::cout << "wrote " << r.frames_written << " frames to " << r.dir.string() << "\n";
        } else if (dat->parsed()) {
            const DatasetSpec spec = dataset_spec_from_cli(load_json_file(spec_path));
            Dataset ds = assemble(spec, runs_root);
            save_dataset(out_path, ds);
            std::cout << "dataset: " << ds.train.size() << " train / " << ds.heldout.size()
                      << " held-out samples\n";
        } else if (tr->parsed()) {
            Dataset ds = load_dataset(spec_path);
            nn::TrainConfig cfg;
            if (epochs > 0) cfg.epochs = epochs;
            if (seed_set) cfg.seed = seed;
            const nn::ModelSpec mspec =
                nn::model_spec(model_name).with_input_channels(
                    to_sample_set({ds.heldout.front()}).channels);
            nn::Network<float> net(mspec, cfg.seed);
            const nn::TrainHistory hist = pipeline::train_model(net, ds, cfg, out_path);
            std::cout << "final held-out accuracy "
                      << hist.epochs.back().heldout_acc << "%\n";
        } else if (rc->parsed()) {
            const json r = reconstruct_run(model_path, frames_dir, out_path);
            std::cout << r["frames"] << " frames, " << r["ms_per_frame"] << " ms/frame\n";
        } else if (ev->parsed()) {
            const json r = evaluate_dirs(truth_dir, recon_dir, with_filaments);
            save_json_file(out_path, r);
            std::cout << "accuracy " << r["accuracy"] << "%\n";
        } else if (fl->parsed()) {
            const json r = filaments_cmd(frames_dir, include_points);
            save_json_file(out_path, r);
            std::cout << "frames: " << r["frames"] << "\n";
        } else if (sw->parsed()) {
            RunConfig cfg = load_json_file(config_path).get<RunConfig>();
            std::vector<double> values;
            std::stringstream ss(values_str);
            std::string tok;
            while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
            if (jobs <= 1) {
                sweep_Gs(cfg, values, out_path);
            } else {
                std::vector<std::future<void>> futs;
                std::size_t next = 0;
                while (next < values.size()) {
                    while (static_cast<int>(futs.size()) < jobs && next < values.size()) {
                        const double v = values[next++];
                        futs.push_back(std::async(std::launch::async, [cfg, v, &out_path] {
                            sweep_Gs(cfg, {v}, out_path);
                        }));
                    }
                    for (auto& f : futs) f.get();
                    futs.clear();
                }
            }
            std::cout << values.size() << " runs under " << out_path << "\n";
        } else if (rp->parsed()) {
            pipeline::ReproOptions opts;
            if (seed_set) opts.seed = seed;
            if (epochs > 0) opts.epochs = epochs;
            if (!recipes_dir.empty()) opts.recipes_dir = recipes_dir;
            const json report = pipeline::repro(recipe, out_path, opts);
            if (report.contains("accuracy"))
                std::cout << "accuracy " << report["accuracy"] << "%\n";
            std::cout << "report: " << (fs::path(out_path) / "report.json").string() << "\n";
        }
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        err["command"] = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
