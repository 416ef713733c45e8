#pragma once

#include <array>
#include <filesystem>
#include <memory>

#include "emrecon/nn/layers.hpp"

namespace emrecon::nn {

/// Autoencoder family: 3 encoder stages (conv-relu-maxpool), 3 decoder stages
/// (conv-relu-upsample), and a 1-channel conv head with sigmoid. batchnorm
/// inserts a normalization layer after every conv, head included.
struct ModelSpec {
    std::string name = "mini2d-t";
    int ndim = 2;
    int in_channels = 6;
    std::array<int, 6> ladder{8, 16, 32, 32, 16, 8};
    bool batchnorm = false;

    ModelSpec with_input_channels(int ch) const {
        ModelSpec s = *this;
        s.in_channels = ch;
        return s;
    }
    int kernel_volume() const { return ndim == 2 ? 9 : 27; }
};

/// Named architectures. Throws on unknown names.
ModelSpec model_spec(const std::string& name);

/// Trainable parameter count: conv weights+biases plus 2 per batchnorm channel.
long param_count(const ModelSpec& spec);

struct PlanEntry {
    enum class Kind { conv, batchnorm, relu, maxpool, upsample, sigmoid };
    Kind kind;
    int in_ch = 0, out_ch = 0;
};

/// The layer sequence implied by a spec; param_count and the network builder
/// both derive from this single plan.
std::vector<PlanEntry> layer_plan(const ModelSpec& spec);

template <class T>
std::vector<int> padded_spatial(const std::vector<int>& sp) {
    std::vector<int> out(sp);
    for (auto& d : out) d = (d + 7) / 8 * 8;
    return out;
}

template <class T>
Tensor<T> pad_high(const Tensor<T>& x, const std::vector<int>& target_sp) {
    Tensor<T> y(x.n, x.c, target_sp);
    const int nx = x.sp[0], ny = x.sp[1], nz = x.sp.size() == 3 ? x.sp[2] : 1;
    const int ox = target_sp[0], oy = target_sp[1];
    for (int s = 0; s < x.n; ++s)
        for (int ch = 0; ch < x.c; ++ch) {
            const T* in = x.plane(s, ch);
            T* out = y.plane(s, ch);
            for (int z = 0; z < nz; ++z)
                for (int yy = 0; yy < ny; ++yy) {
                    const T* src = in + static_cast<std::size_t>(nx) * (yy + static_cast<std::size_t>(ny) * z);
                    T* dst = out + static_cast<std::size_t>(ox) * (yy + static_cast<std::size_t>(oy) * z);
                    std::copy(src, src + nx, dst);
                }
        }
    return y;
}

template <class T>
Tensor<T> crop_to(const Tensor<T>& x, const std::vector<int>& target_sp) {
    Tensor<T> y(x.n, x.c, target_sp);
    const int nx = x.sp[0], ny = x.sp[1];
    const int ox = target_sp[0], oy = target_sp[1], oz = target_sp.size() == 3 ? target_sp[2] : 1;
    for (int s = 0; s < x.n; ++s)
        for (int ch = 0; ch < x.c; ++ch) {
            const T* in = x.plane(s, ch);
            T* out = y.plane(s, ch);
            for (int z = 0; z < oz; ++z)
                for (int yy = 0; yy < oy; ++yy) {
                    const T* src = in + static_cast<std::size_t>(nx) * (yy + static_cast<std::size_t>(ny) * z);
                    T* dst = out + static_cast<std::size_t>(ox) * (yy + static_cast<std::size_t>(oy) * z);
                    std::copy(src, src + ox, dst);
                }
        }
    return y;
}

template <class T>
class Network {
public:
    Network(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
        Rng rng(seed);
        for (const PlanEntry& e : layer_plan(spec)) {
            switch (e.kind) {
                case PlanEntry::Kind::conv:
                    layers_.push_back(std::make_unique<Conv<T>>(spec.ndim, e.in_ch, e.out_ch, rng));
                    break;
                case PlanEntry::Kind::batchnorm:
                    layers_.push_back(std::make_unique<BatchNorm<T>>(e.out_ch));
                    break;
                case PlanEntry::Kind::relu:
                    layers_.push_back(std::make_unique<ReLU<T>>());
                    break;
                case PlanEntry::Kind::maxpool:
                    layers_.push_back(std::make_unique<MaxPool2<T>>());
                    break;
                case PlanEntry::Kind::upsample:
                    layers_.push_back(std::make_unique<Upsample2<T>>());
                    break;
                case PlanEntry::Kind::sigmoid:
                    layers_.push_back(std::make_unique<Sigmoid<T>>());
                    break;
            }
        }
    }

    /// Inputs are zero-padded on the high side to multiples of 8 per spatial
    /// axis and the output is cropped back, so pooling always sees even dims.
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (static_cast<int>(x.sp.size()) != spec_.ndim)
            throw std::invalid_argument("Network: input dimensionality mismatch");
        if (x.c != spec_.in_channels)
            throw std::invalid_argument("Network: input channel mismatch");
        orig_sp_ = x.sp;
        padded_sp_ = padded_spatial<T>(x.sp);
        padded_ = padded_sp_ != x.sp;
        Tensor<T> t = padded_ ? pad_high(x, padded_sp_) : x;
        for (auto& l : layers_) t = l->forward(t, training);
        return padded_ ? crop_to(t, orig_sp_) : std::move(t);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        Tensor<T> g = padded_ ? pad_high(grad_out, padded_sp_) : grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return padded_ ? crop_to(g, orig_sp_) : std::move(g);
    }

    void zero_grads() {
        for (auto& l : layers_) l->zero_grads();
    }

    std::vector<std::span<T>> params() {
        std::vector<std::span<T>> out;
        for (auto& l : layers_)
            for (auto s : l->params()) out.push_back(s);
        return out;
    }
    std::vector<std::span<T>> grads() {
        std::vector<std::span<T>> out;
        for (auto& l : layers_)
            for (auto s : l->grads()) out.push_back(s);
        return out;
    }

    std::vector<Layer<T>*> layers() {
        std::vector<Layer<T>*> out;
        for (auto& l : layers_) out.push_back(l.get());
        return out;
    }

    const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<int> orig_sp_, padded_sp_;
    bool padded_ = false;
};

/// Weights + running statistics in an EMEC container with the spec in the
/// metadata. Values are stored f32.
void save_model(const std::filesystem::path& path, Network<float>& net);
Network<float> load_model(const std::filesystem::path& path);

}  // namespace emrecon::nn
