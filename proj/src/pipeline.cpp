#include "emrecon/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <memory>

#include "emrecon/container.hpp"
#include "emrecon/png_io.hpp"

namespace emrecon::pipeline {

namespace {

namespace fs = std::filesystem;

std::string g_stage = "simulate";
void set_stage(const std::string& s) { g_stage = s; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

DatasetSpec dataset_spec_from(const json& j, const std::vector<std::string>& run_names) {
    DatasetSpec spec;
    spec.runs = run_names;
    spec.heldout_run = j.at("heldout_run").get<std::string>();
    spec.n_T = j.value("n_T", 3);
    const std::string variant = j.value("variant", "u_r");
    spec.variant = variant == "u_r"   ? DispVariant::u_r
                   : variant == "u_i" ? DispVariant::u_i
                                      : DispVariant::u_r_star;
    spec.target = j.value("target", "excitation") == "excitation" ? TargetKind::excitation
                                                                  : TargetKind::active_stress;
    spec.augment = j.value("augment", true);
    if (j.contains("noise_levels")) j.at("noise_levels").get_to(spec.noise_levels);
    spec.noisy_fraction = j.value("noisy_fraction", 0.5);
    spec.split_seed = j.value("split_seed", 1);
    if (j.contains("resize")) {
        spec.resize_nx = j.at("resize")[0].get<int>();
        spec.resize_ny = j.at("resize")[1].get<int>();
    }
    spec.train_count = j.value("train_count", 0);
    spec.T_max = j.value("T_max", 0.45);
    return spec;
}

nn::TrainConfig train_config_from(const json& j) {
    nn::TrainConfig cfg;
    cfg.epochs = j.value("epochs", 50);
    cfg.batch_size = j.value("batch_size", 32);
    cfg.lr = j.value("lr", 1e-3);
    cfg.seed = j.value("seed", 1);
    return cfg;
}

/// Evaluate one trained model on held-out samples, optionally with input noise.
struct EvalOutcome {
    ErrorReport report;
    double ms_per_frame = 0.0;
};

EvalOutcome evaluate_model(nn::Network<float>& net, const std::vector<Sample>& heldout,
                           double eval_noise_xi, std::uint64_t noise_seed) {
    const std::vector<Sample>* samples = &heldout;
    std::vector<Sample> noisy;
    if (eval_noise_xi > 0) {
        Rng rng(noise_seed);
        noisy.reserve(heldout.size());
        for (const Sample& s : heldout) noisy.push_back(add_noise(s, eval_noise_xi, rng));
        samples = &noisy;
    }
    ReconResult recon = reconstruct_samples(net, *samples);
    EvalOutcome out;
    out.report = error_report(recon.fields, sample_targets(heldout));
    out.ms_per_frame = recon.ms_per_frame;
    return out;
}

json report_from(const ErrorReport& r) {
    return json{{"accuracy", r.accuracy},
                {"mean_mae", r.mean_mae},
                {"sigma_frames", r.sigma_frames},
                {"sigma_pooled", r.sigma_pooled},
                {"frames", r.per_frame_mae.size()}};
}

void snapshot_pngs(const fs::path& dir, const std::vector<ScalarField>& recon,
                   const std::vector<ScalarField>& truth) {
    fs::create_directories(dir);
    const std::size_t n = recon.size();
    for (std::size_t f : {std::size_t(0), n / 2, n - 1}) {
        const std::string stem = "frame" + std::to_string(f);
        write_field_png(dir / (stem + "_recon.png"), recon[f]);
        write_field_png(dir / (stem + "_truth.png"), truth[f]);
        ScalarField diff(truth[f].shape);
        for (std::size_t i = 0; i < diff.values.size(); ++i)
            diff.values[i] = std::abs(recon[f].values[i] - truth[f].values[i]);
        write_field_png(dir / (stem + "_du.png"), diff);
    }
}

json run_desk(const json& recipe, const fs::path& out, const ReproOptions& opts);
json run_noise_curve(const json& recipe, const fs::path& out, const ReproOptions& opts);
json run_epochs_curve(const json& recipe, const fs::path& out, const ReproOptions& opts);
json run_gs_sweep(const json& recipe, const fs::path& out, const ReproOptions& opts);

}  // namespace

json load_recipe(const std::string& name_or_path,
                 const std::optional<fs::path>& recipes_dir) {
    std::vector<fs::path> candidates;
    if (name_or_path.find('/') != std::string::npos || name_or_path.ends_with(".json"))
        candidates.push_back(name_or_path);
    else {
        if (recipes_dir) candidates.push_back(*recipes_dir / (name_or_path + ".json"));
        candidates.push_back(fs::path("recipes") / (name_or_path + ".json"));
        if (const char* env = std::getenv("EMRECON_RECIPES"))
            candidates.push_back(fs::path(env) / (name_or_path + ".json"));
    }
    for (const auto& p : candidates)
        if (fs::exists(p)) return load_json_file(p);
    throw std::runtime_error("unknown recipe: " + name_or_path);
}

std::vector<RunConfig> expand_sims(const json& sims) {
    std::vector<RunConfig> configs;
    if (sims.contains("base")) {
        const json base = sims.at("base");
        for (const json& patch : sims.at("variants")) {
            json merged = base;
            merged.merge_patch(patch);
            configs.push_back(merged.get<RunConfig>());
        }
    } else {
        for (const json& j : sims) configs.push_back(j.get<RunConfig>());
    }
    return configs;
}

std::vector<std::string> simulate_runs(const json& sims, const fs::path& runs_dir,
                                       std::optional<std::uint64_t> seed_override) {
    std::vector<RunConfig> configs = expand_sims(sims);
    std::vector<std::string> names;
    int i = 0;
    for (RunConfig& cfg : configs) {
        if (seed_override) cfg.seed = *seed_override + i;
        if (cfg.name == "run") cfg.name = "run" + std::to_string(i);
        const fs::path dir = runs_dir / cfg.name;
        const json cfg_json = cfg;
        const std::string hash = std::to_string(fnv1a(cfg_json.dump()));
        bool reuse = false;
        if (fs::exists(dir / "manifest.json")) {
            const json manifest = load_json_file(dir / "manifest.json");
            reuse = manifest.value("config_hash", "") == hash && !manifest.value("failed", false);
        }
        if (!reuse) {
            run(cfg, dir);
            json manifest = load_json_file(dir / "manifest.json");
            manifest["config_hash"] = hash;
            save_json_file(dir / "manifest.json", manifest);
        }
        names.push_back(cfg.name);
        ++i;
    }
    return names;
}

nn::TrainHistory train_model(nn::Network<float>& net, const Dataset& ds,
                             const nn::TrainConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    nn::SampleSet train_set = to_sample_set(ds.train);
    nn::SampleSet heldout_set = to_sample_set(ds.heldout);
    nn::TrainHistory hist = nn::train(net, train_set, heldout_set, cfg);

    nn::save_model(out_dir / "model.emec", net);
    {
        // channel-assembly info so reconstruct can rebuild inputs from frames
        Container c = read_container(out_dir / "model.emec");
        const char* variant = ds.spec.variant == DispVariant::u_r    ? "u_r"
                              : ds.spec.variant == DispVariant::u_i  ? "u_i"
                                                                     : "u_r_star";
        c.metadata["n_T"] = std::to_string(ds.spec.n_T);
        c.metadata["variant"] = variant;
        c.metadata["resize_nx"] = std::to_string(ds.spec.resize_nx);
        c.metadata["resize_ny"] = std::to_string(ds.spec.resize_ny);
        c.metadata["target"] =
            ds.spec.target == TargetKind::excitation ? "excitation" : "active_stress";
        c.metadata["T_max"] = std::to_string(ds.spec.T_max);
        write_container(out_dir / "model.emec", c.fields, c.metadata);
    }

    json hj;
    hj["meta"] = hist.meta;
    hj["epochs"] = json::array();
    std::vector<double> xs, ys;
    for (std::size_t e = 0; e < hist.epochs.size(); ++e) {
        hj["epochs"].push_back({{"train_loss", hist.epochs[e].train_loss},
                                {"heldout_mae", hist.epochs[e].heldout_mae},
                                {"heldout_acc", hist.epochs[e].heldout_acc}});
        xs.push_back(static_cast<double>(e + 1));
        ys.push_back(hist.epochs[e].heldout_mae);
    }
    save_json_file(out_dir / "history.json", hj);
    write_curve_png(out_dir / "heldout_error_vs_epoch.png", xs, ys);
    return hist;
}

ReconResult reconstruct_samples(nn::Network<float>& net, const std::vector<Sample>& samples) {
    ReconResult out;
    if (samples.empty()) return out;
    nn::SampleSet set = to_sample_set(samples);
    const auto t0 = std::chrono::steady_clock::now();
    for (const nn::TensorSample& ts : set.samples) {
        const std::vector<float> y = nn::reconstruct(net, ts.input, set.sp, set.channels);
        ScalarField f(samples.front().target.shape);
        for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = y[i];
        out.fields.push_back(std::move(f));
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.ms_per_frame =
        std::chrono::duration<double, std::milli>(t1 - t0).count() / samples.size();
    return out;
}

double baseline_constant_mean_mae(const std::vector<ScalarField>& truth) {
    double mean = 0.0;
    std::size_t n = 0;
    for (const auto& f : truth) {
        for (double v : f.values) mean += v;
        n += f.values.size();
    }
    mean /= static_cast<double>(n);
    double mae = 0.0;
    for (const auto& f : truth)
        for (double v : f.values) mae += std::abs(v - mean);
    return mae / static_cast<double>(n);
}

std::vector<ScalarField> sample_targets(const std::vector<Sample>& samples) {
    std::vector<ScalarField> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.target);
    return out;
}

namespace {

/// Shared simulate -> dataset -> train -> evaluate body for desk recipes.
struct DeskArtifacts {
    Dataset dataset;
    nn::TrainHistory history;
    std::unique_ptr<nn::Network<float>> net;
    ErrorReport report;
    std::vector<ScalarField> recon;
    double baseline_mae = 0.0;
    double ms_per_frame = 0.0;
};

DeskArtifacts run_desk_body(const json& recipe, const fs::path& out, const ReproOptions& opts) {
    DeskArtifacts art;
    set_stage("simulate");
    const std::vector<std::string> runs =
        simulate_runs(recipe.at("sims"), out / "runs", opts.seed);

    set_stage("dataset");
    DatasetSpec spec = dataset_spec_from(recipe.at("dataset"), runs);
    if (opts.seed) spec.split_seed = *opts.seed;
    art.dataset = assemble(spec, out / "runs");
    if (recipe.value("save_dataset", false)) save_dataset(out / "dataset", art.dataset);

    set_stage("train");
    nn::TrainConfig tc = train_config_from(recipe.at("train"));
    if (opts.seed) tc.seed = *opts.seed;
    if (opts.epochs) tc.epochs = *opts.epochs;
    const nn::ModelSpec mspec =
        nn::model_spec(recipe.value("model", "mini2d-t"))
            .with_input_channels(to_sample_set({art.dataset.heldout.front()}).channels);
    art.net = std::make_unique<nn::Network<float>>(mspec, tc.seed);
    art.history = train_model(*art.net, art.dataset, tc, out);

    set_stage("reconstruct");
    ReconResult recon = reconstruct_samples(*art.net, art.dataset.heldout);
    art.recon = std::move(recon.fields);
    art.ms_per_frame = recon.ms_per_frame;
    set_stage("evaluate");
    const std::vector<ScalarField> truth = sample_targets(art.dataset.heldout);
    art.report = error_report(art.recon, truth);
    art.baseline_mae = baseline_constant_mean_mae(truth);
    snapshot_pngs(out / "snapshots", art.recon, truth);
    return art;
}

json run_desk(const json& recipe, const fs::path& out, const ReproOptions& opts) {
    DeskArtifacts art = run_desk_body(recipe, out, opts);
    json report;
    report["recipe"] = recipe.value("name", "desk");
    report["evaluation"] = report_from(art.report);
    report["accuracy"] = art.report.accuracy;
    report["mean_mae"] = art.report.mean_mae;
    report["baseline_mae"] = art.baseline_mae;
    report["inference_ms_per_frame"] = art.ms_per_frame;
    report["history"] = load_json_file(out / "history.json");

    const bool is3d = art.dataset.heldout.front().target.shape.ndim() == 3;
    if (is3d) {
        const std::vector<ScalarField> truth = sample_targets(art.dataset.heldout);
        PhaseStack truth_phase = hilbert_phase_fields(truth);
        PhaseStack recon_phase = hilbert_phase_fields(art.recon);
        FilamentSet f_truth = filaments_3d(truth_phase);
        FilamentSet f_recon = filaments_3d(recon_phase);
        const FilamentDistance fd = filament_distance(f_truth, f_recon);
        report["filament_distance"] = fd.mean;
        report["filament_frames_used"] = fd.frames_used;
        report["filament_frames_excluded"] = fd.frames_excluded;
        std::size_t mid = f_truth.per_frame.size() / 2;
        report["filament_count_truth_mid"] =
            filament_component_count(f_truth.per_frame[mid]);
    }
    return report;
}

json run_epochs_curve(const json& recipe, const fs::path& out, const ReproOptions& opts) {
    json report = run_desk(recipe, out, opts);
    const std::vector<int> snaps = recipe.value("snapshot_epochs", std::vector<int>{2, 10, 50});
    json curve = json::array();
    const json& epochs = report["history"]["epochs"];
    for (int e : snaps)
        if (e >= 1 && e <= static_cast<int>(epochs.size()))
            curve.push_back({{"epoch", e}, {"heldout_mae", epochs[e - 1]["heldout_mae"]}});
    report["epochs_curve"] = curve;
    return report;
}

json run_noise_curve(const json& recipe, const fs::path& out, const ReproOptions& opts) {
    const std::vector<std::string> runs =
        simulate_runs(recipe.at("sims"), out / "runs", opts.seed);
    const std::vector<double> train_noise =
        recipe.value("train_noise_levels", std::vector<double>{0.0, 0.1});
    const std::vector<double> eval_noise =
        recipe.value("eval_noise_levels", std::vector<double>{0.0, 0.05, 0.1});

    json report;
    report["recipe"] = recipe.value("name", "noise_curve");
    report["models"] = json::array();

    for (double xi_train : train_noise) {
        DatasetSpec spec = dataset_spec_from(recipe.at("dataset"), runs);
        if (opts.seed) spec.split_seed = *opts.seed;
        if (xi_train > 0)
            spec.noise_levels = {xi_train};
        else
            spec.noise_levels.clear();
        Dataset ds = assemble(spec, out / "runs");

        nn::TrainConfig tc = train_config_from(recipe.at("train"));
        if (opts.seed) tc.seed = *opts.seed;
        if (opts.epochs) tc.epochs = *opts.epochs;
        char tag[32];
        std::snprintf(tag, sizeof(tag), "xi_%.3f", xi_train);
        const nn::ModelSpec mspec =
            nn::model_spec(recipe.value("model", "mini2d-t"))
                .with_input_channels(to_sample_set({ds.heldout.front()}).channels);
        nn::Network<float> net(mspec, tc.seed);
        train_model(net, ds, tc, out / tag);

        json entry;
        entry["train_noise"] = xi_train;
        entry["eval"] = json::array();
        std::vector<double> xs, ys;
        for (double xi_eval : eval_noise) {
            const EvalOutcome e = evaluate_model(net, ds.heldout, xi_eval, 0xe7a1);
            entry["eval"].push_back({{"noise", xi_eval},
                                     {"mean_mae", e.report.mean_mae},
                                     {"accuracy", e.report.accuracy}});
            xs.push_back(xi_eval);
            ys.push_back(e.report.mean_mae);
        }
        write_curve_png(out / tag / "error_vs_noise.png", xs, ys);
        report["models"].push_back(entry);
    }
    return report;
}

json run_gs_sweep(const json& recipe, const fs::path& out, const ReproOptions& opts) {
    // Train on the recipe's training sims, then evaluate the model across a
    // sweep of mechano-electrical feedback strengths.
    const std::vector<std::string> runs =
        simulate_runs(recipe.at("sims"), out / "runs", opts.seed);
    DatasetSpec spec = dataset_spec_from(recipe.at("dataset"), runs);
    if (opts.seed) spec.split_seed = *opts.seed;
    Dataset ds = assemble(spec, out / "runs");

    nn::TrainConfig tc = train_config_from(recipe.at("train"));
    if (opts.seed) tc.seed = *opts.seed;
    if (opts.epochs) tc.epochs = *opts.epochs;
    const nn::ModelSpec mspec =
        nn::model_spec(recipe.value("model", "mini2d-t"))
            .with_input_channels(to_sample_set({ds.heldout.front()}).channels);
    nn::Network<float> net(mspec, tc.seed);
    train_model(net, ds, tc, out);

    const RunConfig base = recipe.at("sweep_base").get<RunConfig>();
    const std::vector<double> values =
        recipe.value("values", std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    sweep_Gs(base, values, out / "sweep");

    json report;
    report["recipe"] = recipe.value("name", "gs_sweep");
    report["sweep"] = json::array();
    std::vector<double> xs, ys;
    for (double v : values) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "gs_%.3f", v);
        DatasetSpec eval_spec = spec;
        eval_spec.runs = {buf};
        eval_spec.heldout_run = buf;
        Dataset eval_ds = assemble(eval_spec, out / "sweep");
        const EvalOutcome e = evaluate_model(net, eval_ds.heldout, 0.0, 0);
        report["sweep"].push_back(
            {{"G_s", v}, {"mean_mae", e.report.mean_mae}, {"accuracy", e.report.accuracy}});
        xs.push_back(v);
        ys.push_back(e.report.mean_mae);
    }
    write_curve_png(out / "error_vs_gs.png", xs, ys);
    return report;
}

}  // namespace

json repro(const std::string& recipe_name, const fs::path& out_dir, const ReproOptions& opts) {
    const json recipe = load_recipe(recipe_name, opts.recipes_dir);
    const std::string kind = recipe.value("kind", "desk");
    fs::create_directories(out_dir);

    json report;
    set_stage("simulate");
    try {
        if (kind == "desk")
            report = run_desk(recipe, out_dir, opts);
        else if (kind == "epochs_curve")
            report = run_epochs_curve(recipe, out_dir, opts);
        else if (kind == "noise_curve")
            report = run_noise_curve(recipe, out_dir, opts);
        else if (kind == "gs_sweep")
            report = run_gs_sweep(recipe, out_dir, opts);
        else
            throw std::runtime_error("unknown recipe kind: " + kind);
    } catch (const std::exception& e) {
        json failure;
        failure["failed_stage"] = g_stage;
        failure["error"] = e.what();
        save_json_file(out_dir / "report.json", failure);
        throw std::runtime_error("repro stage '" + g_stage + "' failed: " + e.what());
    }
    save_json_file(out_dir / "report.json", report);
    return report;
}

}  // namespace emrecon::pipeline
