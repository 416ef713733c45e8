#pragma once

#include <json.hpp>

#include "emrecon/nn/model.hpp"

namespace emrecon::nn {

/// One training/evaluation example at network resolution: flattened input
/// channels and a single-channel target in [0, 1].
struct TensorSample {
    std::vector<float> input;   // channels * voxels
    std::vector<float> target;  // voxels
};

struct SampleSet {
    int channels = 0;
    std::vector<int> sp;  // spatial dims, x fastest
    std::vector<TensorSample> samples;

    std::size_t voxels() const {
        std::size_t v = 1;
        for (int d : sp) v *= static_cast<std::size_t>(d);
        return v;
    }
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 1;
};

struct EpochStats {
    double train_loss = 0.0;    // mean squared error
    double heldout_mae = 0.0;   // mean |recon - truth|
    double heldout_acc = 0.0;   // 100 * (1 - mae)
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    nlohmann::json meta;
};

/// Adam over a network's parameter spans.
class AdamOptimizer {
public:
    AdamOptimizer(Network<float>& net, const TrainConfig& cfg);
    void step();

private:
    Network<float>& net_;
    TrainConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

/// Mini-batch MSE training with per-epoch held-out evaluation. Aborts with
/// diagnostics (epoch, batch, max |grad|) if the loss goes non-finite.
TrainHistory train(Network<float>& net, const SampleSet& train_set, const SampleSet& heldout,
                   const TrainConfig& cfg);

/// Mean absolute error of the network over a sample set (inference mode).
double evaluate_mae(Network<float>& net, const SampleSet& set, int batch_size = 16);

/// Single forward pass in inference mode.
std::vector<float> reconstruct(Network<float>& net, const std::vector<float>& input,
                               const std::vector<int>& sp, int channels);

}  // namespace emrecon::nn
