#include "emrecon/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emrecon::nn {

AdamOptimizer::AdamOptimizer(Network<float>& net, const TrainConfig& cfg) : net_(net), cfg_(cfg) {
    for (auto p : net_.params()) {
        m_.emplace_back(p.size(), 0.0f);
        v_.emplace_back(p.size(), 0.0f);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    const auto params = net_.params();
    const auto grads = net_.grads();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        auto g = grads[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            m[j] = static_cast<float>(cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj);
            v[j] = static_cast<float>(cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

namespace {

Tensor<float> batch_inputs(const SampleSet& set, const std::vector<std::size_t>& idx,
                           std::size_t lo, std::size_t hi) {
    const int n = static_cast<int>(hi - lo);
    Tensor<float> x(n, set.channels, set.sp);
    const std::size_t per = static_cast<std::size_t>(set.channels) * set.voxels();
    for (int s = 0; s < n; ++s)
        std::copy(set.samples[idx[lo + s]].input.begin(), set.samples[idx[lo + s]].input.end(),
                  x.data.begin() + s * per);
    return x;
}

double max_abs_grad(Network<float>& net) {
    double m = 0.0;
    for (auto g : net.grads())
        for (float v : g) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
}

}  // namespace

double evaluate_mae(Network<float>& net, const SampleSet& set, int batch_size) {
    if (set.samples.empty()) return 0.0;
    const std::size_t vox = set.voxels();
    double abs_sum = 0.0;
    std::vector<std::size_t> idx(set.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t lo = 0; lo < idx.size(); lo += batch_size) {
        const std::size_t hi = std::min(idx.size(), lo + batch_size);
        Tensor<float> x = batch_inputs(set, idx, lo, hi);
        Tensor<float> y = net.forward(x, false);
        for (std::size_t s = 0; s < hi - lo; ++s) {
            const float* p = y.plane(static_cast<int>(s), 0);
            const auto& t = set.samples[idx[lo + s]].target;
            for (std::size_t i = 0; i < vox; ++i)
                abs_sum += std::abs(static_cast<double>(p[i]) - t[i]);
        }
    }
    return abs_sum / (static_cast<double>(set.samples.size()) * vox);
}

TrainHistory train(Network<float>& net, const SampleSet& train_set, const SampleSet& heldout,
                   const TrainConfig& cfg) {
    if (train_set.samples.empty()) throw std::invalid_argument("train: empty training set");
    if (train_set.channels != net.spec().in_channels)
        throw std::invalid_argument("train: dataset channel count does not match model input");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

    AdamOptimizer opt(net, cfg);
    Rng rng(cfg.seed);
    const std::size_t vox = train_set.voxels();
    std::vector<std::size_t> idx(train_set.samples.size());
    std::iota(idx.begin(), idx.end(), 0);

    TrainHistory hist;
    hist.meta = {{"optimizer", "adam"},
                 {"lr", cfg.lr},
                 {"beta1", cfg.beta1},
                 {"beta2", cfg.beta2},
                 {"eps", cfg.eps},
                 {"loss", "mse"},
                 {"batch_size", cfg.batch_size},
                 {"seed", cfg.seed},
                 {"train_samples", train_set.samples.size()},
                 {"heldout_samples", heldout.samples.size()}};

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle from the seeded generator.
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.below(i + 1)]);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        int batch_no = 0;
        for (std::size_t lo = 0; lo < idx.size(); lo += cfg.batch_size, ++batch_no) {
            const std::size_t hi = std::min(idx.size(), lo + cfg.batch_size);
            const int bn = static_cast<int>(hi - lo);
            Tensor<float> x = batch_inputs(train_set, idx, lo, hi);
            Tensor<float> y = net.forward(x, true);

            // MSE loss and its gradient.
            Tensor<float> grad(bn, 1, train_set.sp);
            double loss = 0.0;
            const double scale = 2.0 / (static_cast<double>(bn) * vox);
            for (int s = 0; s < bn; ++s) {
                const float* p = y.plane(s, 0);
                float* g = grad.plane(s, 0);
                const auto& t = train_set.samples[idx[lo + s]].target;
                for (std::size_t i = 0; i < vox; ++i) {
                    const double d = static_cast<double>(p[i]) - t[i];
                    loss += d * d;
                    g[i] = static_cast<float>(scale * d);
                }
            }
            loss /= static_cast<double>(bn) * vox;

            net.zero_grads();
            net.backward(grad);

            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + " batch " +
                                         std::to_string(batch_no) + " (max |grad| " +
                                         std::to_string(max_abs_grad(net)) + ")");
            opt.step();
            loss_sum += loss * bn;
            loss_count += bn;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(loss_count);
        stats.heldout_mae = evaluate_mae(net, heldout);
        stats.heldout_acc = 100.0 * (1.0 - stats.heldout_mae);
        hist.epochs.push_back(stats);
    }
    return hist;
}

std::vector<float> reconstruct(Network<float>& net, const std::vector<float>& input,
                               const std::vector<int>& sp, int channels) {
    Tensor<float> x(1, channels, sp);
    if (x.data.size() != input.size())
        throw std::invalid_argument("reconstruct: input size does not match shape");
    std::copy(input.begin(), input.end(), x.data.begin());
    Tensor<float> y = net.forward(x, false);
    return y.data;
}

}  // namespace emrecon::nn
