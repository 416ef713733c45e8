#pragma once

#include <optional>

#include "emrecon/dataset.hpp"
#include "emrecon/eval.hpp"
#include "emrecon/json_io.hpp"
#include "emrecon/nn/train.hpp"

namespace emrecon::pipeline {

/// Resolve a recipe by name (searched in --recipes dir, ./recipes,
/// EMRECON_RECIPES) or by explicit path. Throws "unknown recipe" otherwise.
json load_recipe(const std::string& name_or_path,
                 const std::optional<std::filesystem::path>& recipes_dir = {});

struct ReproOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<std::filesystem::path> recipes_dir;
};

/// Run a recipe end to end (simulate -> dataset -> train -> reconstruct ->
/// evaluate); writes report.json plus summary PNGs under out_dir and returns
/// the report.
json repro(const std::string& recipe_name, const std::filesystem::path& out_dir,
           const ReproOptions& opts = {});

/// Simulate every run of a recipe's "sims" section into runs_dir/<name>.
/// Runs whose manifest already matches the requested config are reused.
std::vector<std::string> simulate_runs(const json& sims, const std::filesystem::path& runs_dir,
                                       std::optional<std::uint64_t> seed_override = {});

/// Expand a sims section ({"base": RunConfig, "variants": [patch...]}) into
/// complete run configs via JSON merge-patch.
std::vector<RunConfig> expand_sims(const json& sims);

/// Train a model on an assembled dataset; saves model.emec (with the channel
/// assembly recorded in its metadata) and history.json under out_dir.
nn::TrainHistory train_model(nn::Network<float>& net, const Dataset& ds,
                             const nn::TrainConfig& cfg, const std::filesystem::path& out_dir);

/// Reconstruct every sample of a set; returns the fields and mean ms/frame.
struct ReconResult {
    std::vector<ScalarField> fields;
    double ms_per_frame = 0.0;
};
ReconResult reconstruct_samples(nn::Network<float>& net, const std::vector<Sample>& samples);

/// Constant-mean-predictor baseline: MAE of predicting the held-out mean.
double baseline_constant_mean_mae(const std::vector<ScalarField>& truth);

std::vector<ScalarField> sample_targets(const std::vector<Sample>& samples);

}  // namespace emrecon::pipeline
